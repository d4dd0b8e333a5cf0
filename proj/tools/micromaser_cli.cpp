// micromaser: sweep the pump parameter theta and write stationary photon
// statistics and the correlation length as CSV.
//
// Exit codes: 0 success, 2 configuration error, 3 output I/O error,
// 4 every grid point flagged.

#include "micromaser/sweep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitOutput = 3;
constexpr int kExitAllFlagged = 4;

micromaser::GeneratorMatrixd build_dump(const std::string& kind, const micromaser::SweepConfig& cfg,
                                        const micromaser::ModelParams& params) {
    using namespace micromaser;
    if (kind == "cavity") return build_cavity_damping<double>(cfg.n_max, params.n_b);
    if (kind == "one-atom-op") return build_one_atom_op<double>(cfg.n_max, params.theta, params.flux_n);
    if (kind == "two-atom-op") return build_two_atom_op<double>(cfg.n_max, params.theta, params.flux_n, params.eps(), cfg.quad);
    if (kind == "generator") return build_generator<double>(cfg.model, cfg.n_max, params, cfg.quad);
    throw ConfigInvalid("--dump-matrix: unknown kind '" + kind + "' (cavity, one-atom-op, two-atom-op, generator)");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace micromaser;

    CLI::App app{"Micromaser master-equation sweeps: <n>, <x> and the correlation length gamma*xi versus theta"};

    std::string model_name, config_path, dump_kind;
    double flux_n = 0, n_b = 0, theta_min = 0, theta_max = 0, eps = 0, g_hz = 0, gamma_hz = 0, quad_tol = 0;
    int theta_steps = 0, threads = 0;
    long n_max = 0;
    std::string out, markers_out, plot_script;
    bool eps_coupled = false, refine = false, phase_markers = false, auto_nmax = false;

    auto* o_model = app.add_option("--model", model_name, "one-atom | two-atom | small-eps")
                        ->check(CLI::IsMember({"one-atom", "two-atom", "small-eps"}));
    auto* o_flux = app.add_option("--flux-n", flux_n, "dimensionless atomic flux N = R/gamma");
    auto* o_nb = app.add_option("--nb", n_b, "thermal photon occupancy n_b");
    auto* o_tmin = app.add_option("--theta-min", theta_min, "first theta of the grid");
    auto* o_tmax = app.add_option("--theta-max", theta_max, "last theta of the grid");
    auto* o_tsteps = app.add_option("--theta-steps", theta_steps, "number of grid points");
    auto* o_eps = app.add_option("--eps", eps, "fixed mean number of atoms in the cavity");
    auto* o_coupled = app.add_flag("--eps-coupled", eps_coupled, "eps = gamma sqrt(N) theta / g");
    o_eps->excludes(o_coupled);
    auto* o_g = app.add_option("--g-hz", g_hz, "single-photon Rabi frequency g in s^-1");
    auto* o_gamma = app.add_option("--gamma-hz", gamma_hz, "cavity damping rate gamma in s^-1");
    auto* o_nmax = app.add_option("--nmax", n_max, "photon-number truncation");
    auto* o_auto = app.add_flag("--auto-nmax", auto_nmax, "double the truncation while the tail mass is too large");
    auto* o_qtol = app.add_option("--quad-tol", quad_tol, "max-norm tolerance of the U2 panel doubling");
    auto* o_refine = app.add_flag("--refine-markers", refine, "triple the grid density near trapping markers");
    auto* o_phase = app.add_flag("--phase-markers", phase_markers, "also emit the large-N transition markers");
    auto* o_out = app.add_option("--out", out, "sweep CSV path (stdout when omitted)");
    auto* o_mout = app.add_option("--markers-out", markers_out, "marker CSV path");
    auto* o_plot = app.add_option("--plot-script", plot_script, "write a matplotlib script for the CSV");
    auto* o_threads = app.add_option("--threads", threads, "worker threads (0: all cores)");
    app.add_option("--config", config_path, "JSON sweep configuration; flags override it");
    app.add_option("--dump-matrix", dump_kind, "write one matrix at theta-min instead of sweeping")
        ->check(CLI::IsMember({"cavity", "one-atom-op", "two-atom-op", "generator"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    SweepConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw ConfigInvalid("cannot read config '" + config_path + "'");
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(is);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigInvalid("config '" + config_path + "': " + e.what());
            }
            cfg = config_from_json(doc);
        }
        if (o_model->count()) cfg.model = model_from_string(model_name);
        if (o_flux->count()) cfg.flux_n = flux_n;
        if (o_nb->count()) cfg.n_b = n_b;
        if (o_tmin->count()) cfg.theta_min = theta_min;
        if (o_tmax->count()) cfg.theta_max = theta_max;
        if (o_tsteps->count()) cfg.theta_steps = theta_steps;
        if (o_eps->count()) cfg.eps = {FixedEps{eps}};
        if (o_coupled->count()) cfg.eps = {CoupledEps{}};
        if (o_g->count()) cfg.rabi_g = g_hz;
        if (o_gamma->count()) cfg.gamma = gamma_hz;
        if (o_nmax->count()) cfg.n_max = n_max;
        if (o_auto->count()) cfg.auto_nmax = auto_nmax;
        if (o_qtol->count()) cfg.quad.tol = quad_tol;
        if (o_refine->count()) cfg.refine_markers = refine;
        if (o_phase->count()) cfg.phase_markers = phase_markers;
        if (o_out->count()) cfg.out = out;
        if (o_mout->count()) cfg.markers_out = markers_out;
        if (o_plot->count()) cfg.plot_script = plot_script;
        if (o_threads->count()) cfg.threads = threads;
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "micromaser: " << e.what() << '\n';
        return kExitConfig;
    }

    if (!dump_kind.empty()) {
        try {
            const auto params = cfg.params(cfg.theta_min, cfg.eps.front());
            const auto matrix = build_dump(dump_kind, cfg, params);
            if (cfg.out.empty()) {
                write_matrix_csv(std::cout, matrix, params);
            } else {
                std::ofstream os(cfg.out, std::ios::binary | std::ios::trunc);
                if (!os) throw OutputUnwritable("cannot open '" + cfg.out + "' for writing");
                write_matrix_csv(os, matrix, params);
                if (!os.flush()) throw OutputUnwritable("write to '" + cfg.out + "' failed");
            }
        } catch (const OutputUnwritable& e) {
            std::cerr << "micromaser: " << e.what() << '\n';
            return kExitOutput;
        } catch (const Error& e) {
            std::cerr << "micromaser: " << e.what() << '\n';
            return kExitConfig;
        }
        return kExitOk;
    }

    std::vector<SweepRecord> records;
    try {
        records = run_sweep(cfg);
    } catch (const ConfigInvalid& e) {
        std::cerr << "micromaser: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (cfg.out.empty()) {
            write_csv(std::cout, records);
        } else {
            write_csv(cfg.out, records);
        }
        if (!cfg.markers_out.empty()) write_markers_csv(cfg.markers_out, emit_markers(cfg));
        if (!cfg.plot_script.empty()) {
            std::ofstream os(cfg.plot_script, std::ios::trunc);
            if (!os) throw OutputUnwritable("cannot open '" + cfg.plot_script + "' for writing");
            write_plot_script(os, cfg);
            if (!os.flush()) throw OutputUnwritable("write to '" + cfg.plot_script + "' failed");
        }
    } catch (const Error& e) {
        std::cerr << "micromaser: " << e.what() << '\n';
        return kExitOutput;
    }

    const auto flagged = std::count_if(records.begin(), records.end(), [](const SweepRecord& r) { return r.flagged(); });
    if (flagged > 0) std::cerr << "micromaser: " << flagged << " of " << records.size() << " grid points flagged\n";
    return flagged == static_cast<long>(records.size()) ? kExitAllFlagged : kExitOk;
}
