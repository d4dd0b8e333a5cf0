#include "micromaser/sweep.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace micromaser {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& field) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && field.front() == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) throw InvalidArgument("read_csv: bad number '" + field + "'");
    return value;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw OutputUnwritable("cannot open '" + path + "' for writing: " + std::strerror(errno));
    return os;
}

void finish_output(std::ofstream& os, const std::string& path) {
    os.flush();
    if (!os) throw OutputUnwritable("write to '" + path + "' failed: " + std::strerror(errno));
}

}  // namespace

const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> columns = {
        "theta", "eps", "mean_n", "mean_x", "var_n", "lambda1_re", "lambda1_im",
        "corr_length", "residual", "tail_mass", "quad_panels", "flags"};
    return columns;
}

void write_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
    if (records.empty()) throw InvalidArgument("write_csv: no records");
    const auto& cols = record_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : records) {
        os << format_double(r.theta) << ',' << format_double(r.eps) << ',' << format_double(r.mean_n) << ','
           << format_double(r.mean_x) << ',' << format_double(r.var_n) << ',' << format_double(r.lambda1_re) << ','
           << format_double(r.lambda1_im) << ',' << format_double(r.corr_length) << ','
           << format_double(r.residual) << ',' << format_double(r.tail_mass) << ',' << r.quad_panels << ','
           << r.flags << '\n';
    }
}

void write_csv(const std::string& path, const std::vector<SweepRecord>& records) {
    auto os = open_output(path);
    write_csv(os, records);
    finish_output(os, path);
}

std::vector<SweepRecord> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("read_csv: empty input");
    if (split(line) != record_columns()) throw InvalidArgument("read_csv: unexpected header '" + line + "'");
    std::vector<SweepRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != record_columns().size()) throw InvalidArgument("read_csv: wrong field count in '" + line + "'");
        SweepRecord r;
        r.theta = parse_double(f[0]);
        r.eps = parse_double(f[1]);
        r.mean_n = parse_double(f[2]);
        r.mean_x = parse_double(f[3]);
        r.var_n = parse_double(f[4]);
        r.lambda1_re = parse_double(f[5]);
        r.lambda1_im = parse_double(f[6]);
        r.corr_length = parse_double(f[7]);
        r.residual = parse_double(f[8]);
        r.tail_mass = parse_double(f[9]);
        r.quad_panels = int(parse_double(f[10]));
        r.flags = f[11];
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SweepRecord> read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("read_csv: cannot open '" + path + "'");
    return read_csv(is);
}

void write_markers_csv(std::ostream& os, const std::vector<Marker>& markers) {
    os << "kind,theta,k,n,label\n";
    for (const auto& m : markers)
        os << m.kind << ',' << format_double(m.theta) << ',' << m.k << ',' << m.n << ',' << m.label << '\n';
}

void write_markers_csv(const std::string& path, const std::vector<Marker>& markers) {
    auto os = open_output(path);
    write_markers_csv(os, markers);
    finish_output(os, path);
}

void write_matrix_csv(std::ostream& os, const GeneratorMatrixd& matrix, const ModelParams& params) {
    os << "# kind,dim,theta,N,nb,eps\n";
    os << "# " << to_string(matrix.kind) << ',' << matrix.dim() << ',' << format_double(params.theta) << ','
       << format_double(params.flux_n) << ',' << format_double(params.n_b) << ',' << format_double(params.eps())
       << '\n';
    for (Eigen::Index r = 0; r < matrix.dim(); ++r) {
        for (Eigen::Index c = 0; c < matrix.dim(); ++c) os << (c ? "," : "") << format_double(matrix.entries(r, c));
        os << '\n';
    }
}

void write_plot_script(std::ostream& os, const SweepConfig& config) {
    const std::string csv = config.out.empty() ? "sweep.csv" : config.out;
    os << "#!/usr/bin/env python3\n"
          "# Plots <x> and gamma*xi against theta from a micromaser sweep CSV.\n"
          "import csv, math, os, sys\n"
          "import matplotlib\n"
          "matplotlib.use('Agg')\n"
          "import matplotlib.pyplot as plt\n\n"
       << "CSV = sys.argv[1] if len(sys.argv) > 1 else " << nlohmann::json(csv).dump() << "\n"
       << "MARKERS = " << nlohmann::json(config.markers_out).dump() << "\n"
       << "CORR_SCALE = " << format_double(config.plot_corr_scale) << "\n"
       << "TITLE = " << nlohmann::json(std::string(to_string(config.model)) + ", N = " + format_double(config.flux_n) +
                                       ", n_b = " + format_double(config.n_b))
                            .dump()
       << "\n\n"
          "# rows are grouped per eps curve, each in increasing theta\n"
          "curves = []\n"
          "last = math.inf\n"
          "with open(CSV) as fh:\n"
          "    for row in csv.DictReader(fh):\n"
          "        theta = float(row['theta'])\n"
          "        if theta < last:\n"
          "            curves.append({'eps': set(), 'pts': []})\n"
          "        last = theta\n"
          "        curves[-1]['eps'].add(row['eps'])\n"
          "        if row['flags'] == 'ok':\n"
          "            curves[-1]['pts'].append((theta, float(row['mean_x']), float(row['corr_length'])))\n\n"
          "markers = []\n"
          "if MARKERS and os.path.exists(MARKERS):\n"
          "    with open(MARKERS) as fh:\n"
          "        markers = [(r['kind'], float(r['theta'])) for r in csv.DictReader(fh)]\n\n"
          "fig, (ax_x, ax_xi) = plt.subplots(2, 1, sharex=True, figsize=(7, 8))\n"
          "for curve in curves:\n"
          "    pts = curve['pts']\n"
          "    eps = next(iter(curve['eps'])) if len(curve['eps']) == 1 else 'coupled'\n"
          "    th = [p[0] for p in pts]\n"
          "    ax_x.plot(th, [p[1] for p in pts], lw=0.8, label='eps=' + eps)\n"
          "    ax_xi.plot(th, [p[2] * CORR_SCALE for p in pts], lw=0.8, label='eps=' + eps)\n"
          "for kind, th in markers:\n"
          "    for ax in (ax_x, ax_xi):\n"
          "        ax.axvline(th, color='grey' if kind == 'trapping' else 'red', lw=0.4, ls=':')\n"
          "ax_x.set_ylabel('<x> = <n>/N')\n"
          "ax_xi.set_yscale('log')\n"
          "ax_xi.set_ylabel('gamma xi' if CORR_SCALE == 1 else 'gamma xi x %g' % CORR_SCALE)\n"
          "ax_xi.set_xlabel('theta')\n"
          "ax_x.set_title(TITLE)\n"
          "ax_x.legend(fontsize=7)\n"
          "fig.tight_layout()\n"
          "fig.savefig(os.path.splitext(CSV)[0] + '.png', dpi=150)\n";
}

namespace {

nlohmann::json eps_to_json(const EpsMode& mode) {
    if (const auto* fixed = std::get_if<FixedEps>(&mode)) return fixed->value;
    return "coupled";
}

EpsMode eps_from_json(const nlohmann::json& j) {
    if (j.is_number()) return FixedEps{j.get<double>()};
    if (j.is_string() && j.get<std::string>() == "coupled") return CoupledEps{};
    throw ConfigInvalid("config: eps entries must be numbers or \"coupled\"");
}

}  // namespace

SweepConfig config_from_json(const nlohmann::json& doc, SweepConfig base) {
    if (!doc.is_object()) throw ConfigInvalid("config: JSON document must be an object");
    SweepConfig c = std::move(base);
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "model") c.model = model_from_string(value.get<std::string>());
            else if (key == "theta_min") c.theta_min = value.get<double>();
            else if (key == "theta_max") c.theta_max = value.get<double>();
            else if (key == "theta_steps") c.theta_steps = value.get<int>();
            else if (key == "flux_n") c.flux_n = value.get<double>();
            else if (key == "n_b") c.n_b = value.get<double>();
            else if (key == "rabi_g") c.rabi_g = value.get<double>();
            else if (key == "gamma") c.gamma = value.get<double>();
            else if (key == "eps") {
                c.eps.clear();
                if (value.is_array())
                    for (const auto& e : value) c.eps.push_back(eps_from_json(e));
                else
                    c.eps.push_back(eps_from_json(value));
            }
            else if (key == "n_max") c.n_max = value.get<long>();
            else if (key == "auto_nmax") c.auto_nmax = value.get<bool>();
            else if (key == "n_max_limit") c.n_max_limit = value.get<long>();
            else if (key == "quad_tol") c.quad.tol = value.get<double>();
            else if (key == "quad_order") c.quad.order = value.get<int>();
            else if (key == "quad_max_panels") c.quad.max_panels = value.get<int>();
            else if (key == "tail_threshold") c.spectral.tail_threshold = value.get<double>();
            else if (key == "gap_threshold") c.spectral.gap_threshold = value.get<double>();
            else if (key == "refine_markers") c.refine_markers = value.get<bool>();
            else if (key == "refine_halfwidth") c.refine_halfwidth = value.get<double>();
            else if (key == "trapping_markers") c.trapping_markers = value.get<bool>();
            else if (key == "phase_markers") c.phase_markers = value.get<bool>();
            else if (key == "marker_max_n") c.marker_max_n = value.get<int>();
            else if (key == "out") c.out = value.get<std::string>();
            else if (key == "markers_out") c.markers_out = value.get<std::string>();
            else if (key == "plot_script") c.plot_script = value.get<std::string>();
            else if (key == "plot_corr_scale") c.plot_corr_scale = value.get<double>();
            else if (key == "threads") c.threads = value.get<int>();
            else if (key == "description") continue;
            else throw ConfigInvalid("config: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(std::string("config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigInvalid(e.what());
    }
    return c;
}

nlohmann::json config_to_json(const SweepConfig& c) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& mode : c.eps) eps.push_back(eps_to_json(mode));
    return {
        {"model", to_string(c.model)},
        {"theta_min", c.theta_min},
        {"theta_max", c.theta_max},
        {"theta_steps", c.theta_steps},
        {"flux_n", c.flux_n},
        {"n_b", c.n_b},
        {"rabi_g", c.rabi_g},
        {"gamma", c.gamma},
        {"eps", eps},
        {"n_max", c.n_max},
        {"auto_nmax", c.auto_nmax},
        {"n_max_limit", c.n_max_limit},
        {"quad_tol", c.quad.tol},
        {"quad_order", c.quad.order},
        {"quad_max_panels", c.quad.max_panels},
        {"tail_threshold", c.spectral.tail_threshold},
        {"gap_threshold", c.spectral.gap_threshold},
        {"refine_markers", c.refine_markers},
        {"refine_halfwidth", c.refine_halfwidth},
        {"trapping_markers", c.trapping_markers},
        {"phase_markers", c.phase_markers},
        {"marker_max_n", c.marker_max_n},
        {"out", c.out},
        {"markers_out", c.markers_out},
        {"plot_script", c.plot_script},
        {"plot_corr_scale", c.plot_corr_scale},
        {"threads", c.threads},
    };
}

}  // namespace micromaser
