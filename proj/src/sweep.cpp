#include "micromaser/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace micromaser {

void SweepConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigInvalid("config: " + m); };
    if (!std::isfinite(theta_min) || !std::isfinite(theta_max)) fail("theta range must be finite");
    if (theta_min < 0.0) fail("theta_min must be >= 0");
    if (theta_min > theta_max) fail("theta_min must not exceed theta_max");
    if (theta_steps < 1) fail("theta_steps must be >= 1");
    if (eps.empty()) fail("at least one eps mode is required");
    if (n_max < (model == Model::OneAtom ? 2 : 3)) fail("n_max too small for the model");
    if (auto_nmax && n_max_limit < n_max) fail("n_max_limit must be >= n_max");
    if (!(refine_halfwidth > 0.0)) fail("refine_halfwidth must be > 0");
    if (marker_max_n < 0) fail("marker_max_n must be >= 0");
    if (threads < 0) fail("threads must be >= 0");
    try {
        quad.validate();
        for (const auto& mode : eps) params(theta_min, mode).validate();
    } catch (const InvalidArgument& e) {
        fail(e.what());
    }
}

ModelParams SweepConfig::params(double theta, const EpsMode& eps_mode) const {
    ModelParams p;
    p.flux_n = flux_n;
    p.n_b = n_b;
    p.theta = theta;
    p.rabi_g = rabi_g;
    p.gamma = gamma;
    p.eps_mode = eps_mode;
    return p;
}

std::vector<Marker> emit_markers(const SweepConfig& config) {
    std::vector<Marker> markers;
    if (config.trapping_markers) {
        const int max_n =
            config.marker_max_n > 0 ? config.marker_max_n : std::max(3, int(std::ceil(config.flux_n)));
        std::vector<Marker> trapping;
        for (int n = 1; n <= max_n; ++n) {
            const double unit = std::numbers::pi * std::sqrt(config.flux_n / n);
            for (int k = 1; k * unit <= config.theta_max * (1 + 1e-12); ++k) {
                const double theta = k * unit;
                if (theta < config.theta_min * (1 - 1e-12)) continue;
                trapping.push_back({"trapping", theta, k, n, "k=" + std::to_string(k) + " n=" + std::to_string(n)});
            }
        }
        std::sort(trapping.begin(), trapping.end(), [](const Marker& a, const Marker& b) {
            return a.theta != b.theta ? a.theta < b.theta : a.k < b.k;
        });
        for (const auto& m : trapping) {
            // (k, n) and (jk, j^2 n) give the same theta; keep the smallest k
            if (!markers.empty() && std::abs(markers.back().theta - m.theta) <= 1e-9 * m.theta) {
                if (m.k < markers.back().k) markers.back() = m;
                continue;
            }
            markers.push_back(m);
        }
    }
    if (config.phase_markers) {
        const std::pair<double, const char*> phases[] = {
            {kThetaStar0, "theta_0"}, {kThetaStar01, "theta_01"}, {kThetaStar12, "theta_12"}, {kThetaStar23, "theta_23"}};
        for (const auto& [theta, label] : phases)
            if (theta >= config.theta_min && theta <= config.theta_max) markers.push_back({"phase", theta, 0, 0, label});
        std::stable_sort(markers.begin(), markers.end(),
                         [](const Marker& a, const Marker& b) { return a.theta < b.theta; });
    }
    return markers;
}

std::vector<double> theta_grid(const SweepConfig& config) {
    std::vector<double> grid;
    const int steps = config.theta_steps;
    grid.reserve(steps);
    if (steps == 1) {
        grid.push_back(config.theta_min);
        return grid;
    }
    const double h = (config.theta_max - config.theta_min) / double(steps - 1);
    for (int i = 0; i < steps; ++i) grid.push_back(i + 1 == steps ? config.theta_max : config.theta_min + h * i);
    if (!config.refine_markers || h == 0.0) return grid;

    const auto markers = emit_markers(config);
    std::vector<double> extra;
    for (int i = 0; i + 1 < steps; ++i) {
        const double lo = grid[i], hi = grid[i + 1];
        const bool near = std::any_of(markers.begin(), markers.end(), [&](const Marker& m) {
            return hi >= m.theta - config.refine_halfwidth && lo <= m.theta + config.refine_halfwidth;
        });
        if (near) {
            extra.push_back(lo + (hi - lo) / 3.0);
            extra.push_back(lo + 2.0 * (hi - lo) / 3.0);
        }
    }
    grid.insert(grid.end(), extra.begin(), extra.end());
    std::sort(grid.begin(), grid.end());
    return grid;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SweepRecord sentinel(SweepRecord rec, const std::string& flag) {
    rec.mean_n = rec.mean_x = rec.var_n = kNaN;
    rec.lambda1_re = rec.lambda1_im = rec.corr_length = kNaN;
    rec.flags = flag;
    return rec;
}

}  // namespace

SweepRecord evaluate_point(const SweepConfig& config, double theta, const EpsMode& eps_mode) {
    const ModelParams params = config.params(theta, eps_mode);
    SweepRecord rec;
    rec.theta = theta;
    rec.eps = config.model == Model::OneAtom ? 0.0 : params.eps();
    rec.residual = kNaN;
    rec.tail_mass = kNaN;

    long n_max = config.n_max;
    for (;;) {
        try {
            const auto gen = build_generator<double>(config.model, n_max, params, config.quad);
            rec.quad_panels = gen.quad_panels;
            const auto summary = analyze(gen, params.flux_n, config.spectral);
            rec.mean_n = summary.mean_n;
            rec.mean_x = summary.mean_x;
            rec.var_n = summary.var_n;
            rec.lambda1_re = summary.lambda1.real();
            rec.lambda1_im = summary.lambda1.imag();
            rec.corr_length = summary.corr_length;
            rec.residual = summary.residual;
            rec.tail_mass = summary.tail_mass;
            rec.flags = "ok";
            return rec;
        } catch (const Unconverged& e) {
            rec.tail_mass = e.tail_mass();
            if (e.residual() > 0.0) rec.residual = e.residual();
            const bool tail_problem = !(e.tail_mass() < config.spectral.tail_threshold);
            if (config.auto_nmax && tail_problem && 2 * n_max <= config.n_max_limit) {
                n_max *= 2;
                continue;
            }
            return sentinel(rec, e.flag());
        } catch (const Error& e) {
            return sentinel(rec, e.flag());
        } catch (const std::exception&) {
            return sentinel(rec, "error");
        }
    }
}

std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
    config.validate();
    const auto grid = theta_grid(config);
    const std::size_t per_curve = grid.size();
    const std::size_t total = per_curve * config.eps.size();
    std::vector<SweepRecord> records(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            const auto& mode = config.eps[i / per_curve];
            records[i] = evaluate_point(config, grid[i % per_curve], mode);
        }
    };
    unsigned threads = config.threads > 0 ? unsigned(config.threads) : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, unsigned(total));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return records;
}

}  // namespace micromaser
