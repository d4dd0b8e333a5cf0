#pragma once

// theta sweeps over the micromaser models, marker tables and the CSV/JSON
// surfaces used by the command-line driver.

#include "micromaser/generators.hpp"
#include "micromaser/model.hpp"
#include "micromaser/quadrature.hpp"
#include "micromaser/spectral.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace micromaser {

struct SweepConfig {
    Model model = Model::TwoAtom;
    double theta_min = 0.0;
    double theta_max = 20.0;
    int theta_steps = 2000;

    double flux_n = 50.0;
    double n_b = 0.0;
    double rabi_g = 39000.0;  // s^-1
    double gamma = 10.0;      // s^-1
    // One curve per entry; records carry the resolved eps of their curve.
    std::vector<EpsMode> eps = {FixedEps{0.0}};

    long n_max = 200;
    bool auto_nmax = false;   // double n_max while the tail mass is too large
    long n_max_limit = 1600;
    QuadratureSpec quad;
    SpectralOptions spectral;

    bool refine_markers = false;     // triple the density within +-refine_halfwidth of each marker
    double refine_halfwidth = 0.1;
    bool trapping_markers = true;
    bool phase_markers = false;
    int marker_max_n = 0;            // 0: max(3, ceil(N))

    std::string out;
    std::string markers_out;
    std::string plot_script;
    double plot_corr_scale = 1.0;    // display scaling applied by the plot script only
    int threads = 0;                 // 0: hardware concurrency

    void validate() const;
    ModelParams params(double theta, const EpsMode& eps_mode) const;
};

struct SweepRecord {
    double theta = 0.0;
    double eps = 0.0;
    double mean_n = 0.0;
    double mean_x = 0.0;
    double var_n = 0.0;
    double lambda1_re = 0.0;
    double lambda1_im = 0.0;
    double corr_length = 0.0;
    double residual = 0.0;
    double tail_mass = 0.0;
    int quad_panels = 0;
    std::string flags = "ok";

    bool flagged() const { return flags != "ok"; }
};

struct Marker {
    std::string kind;  // "trapping" or "phase"
    double theta = 0.0;
    int k = 0;         // trapping: theta = k pi sqrt(N / n)
    int n = 0;
    std::string label;
};

inline constexpr double kThetaStar0 = 1.0;
inline constexpr double kThetaStar01 = 6.6610;
inline constexpr double kThetaStar12 = 12.035;
inline constexpr double kThetaStar23 = 17.413;

/// Trapping values theta = k pi sqrt(N / n) inside the sweep range (n <= marker_max_n,
/// duplicates collapsed to the smallest k), plus the large-N transition points when
/// phase markers are enabled. Sorted by theta.
std::vector<Marker> emit_markers(const SweepConfig& config);

/// Uniform grid over [theta_min, theta_max] with theta_steps points, plus the
/// refinement points when refine_markers is set.
std::vector<double> theta_grid(const SweepConfig& config);

/// Solves one grid point. Library errors become flags with NaN observables.
SweepRecord evaluate_point(const SweepConfig& config, double theta, const EpsMode& eps_mode);

/// Every grid point of every eps curve, ordered by (curve, theta) regardless of
/// the order in which workers finish.
std::vector<SweepRecord> run_sweep(const SweepConfig& config);

const std::vector<std::string>& record_columns();
void write_csv(std::ostream& os, const std::vector<SweepRecord>& records);
void write_csv(const std::string& path, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_csv(std::istream& is);
std::vector<SweepRecord> read_csv(const std::string& path);

void write_markers_csv(std::ostream& os, const std::vector<Marker>& markers);
void write_markers_csv(const std::string& path, const std::vector<Marker>& markers);

/// Matrix dump: "# kind,dim,theta,N,nb,eps" header, a matching value line, then
/// dim rows of full-precision entries.
void write_matrix_csv(std::ostream& os, const GeneratorMatrixd& matrix, const ModelParams& params);

/// Python/matplotlib script that plots <x> and gamma xi from the sweep CSV.
void write_plot_script(std::ostream& os, const SweepConfig& config);

/// Applies a JSON document on top of base. Unknown keys are rejected.
SweepConfig config_from_json(const nlohmann::json& doc, SweepConfig base = {});
nlohmann::json config_to_json(const SweepConfig& config);

std::string format_double(double value);

}  // namespace micromaser
