#pragma once

// Brute-force time integration of dp/dt = -L p (time in units of 1/gamma).
// Used to cross-check the stationary solver and lambda_1; it shares nothing
// with spectral.hpp beyond the generator it is handed.

#include "micromaser/errors.hpp"
#include "micromaser/generators.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <vector>

namespace micromaser::oracle {

struct Checkpoint {
    double gamma_t = 0.0;
    Eigen::VectorXd p;
};

struct EvolutionResult {
    Eigen::VectorXd final_state;
    std::vector<Checkpoint> trajectory;
    long step_count = 0;
    double probability_drift = 0.0;  // |sum(p) - 1| at t_end
    double min_entry = 0.0;          // most negative entry seen at any step
};

struct EvolveOptions {
    double t_end = 50.0;
    double dt = 0.0;           // 0 picks 0.25 / max|diag L|
    long sample_every = 0;     // record a checkpoint every k steps (0: none)
    bool record_initial = true;
};

/// Largest step satisfying dt * max|diag(L)| < 0.5.
inline double stable_step(const Eigen::MatrixXd& l) {
    const double diag = l.diagonal().cwiseAbs().maxCoeff();
    return diag > 0.0 ? 0.5 / diag : 1.0;
}

/// Classical fourth-order Runge-Kutta with a fixed step.
inline EvolutionResult evolve(const GeneratorMatrixd& gen, const Eigen::VectorXd& p0, const EvolveOptions& opts) {
    const Eigen::MatrixXd& l = gen.entries;
    if (p0.size() != l.rows()) throw InvalidArgument("evolve: initial state has the wrong dimension");
    if (std::abs(p0.sum() - 1.0) > 1e-12) throw InvalidArgument("evolve: initial state is not normalized");
    if (!(opts.t_end >= 0.0)) throw InvalidArgument("evolve: t_end must be >= 0");

    const double limit = stable_step(l);
    double dt = opts.dt > 0.0 ? opts.dt : 0.5 * limit;
    if (!(dt < limit)) {
        std::ostringstream msg;
        msg << "evolve: dt = " << dt << " violates dt * max|diag L| < 0.5; use dt < " << limit;
        throw StepTooLarge(msg.str(), 0.5 * limit);
    }
    const long steps = opts.t_end == 0.0 ? 0 : static_cast<long>(std::ceil(opts.t_end / dt - 1e-9));
    if (steps > 0) dt = opts.t_end / double(steps);

    const Eigen::SparseMatrix<double> rhs = (-l).sparseView();
    EvolutionResult out;
    Eigen::VectorXd p = p0;
    Eigen::VectorXd k1, k2, k3, k4;
    out.min_entry = p.minCoeff();
    if (opts.sample_every > 0 && opts.record_initial) out.trajectory.push_back({0.0, p});
    for (long i = 1; i <= steps; ++i) {
        k1 = rhs * p;
        k2 = rhs * (p + 0.5 * dt * k1);
        k3 = rhs * (p + 0.5 * dt * k2);
        k4 = rhs * (p + dt * k3);
        p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.min_entry = std::min(out.min_entry, p.minCoeff());
        if (opts.sample_every > 0 && (i % opts.sample_every == 0 || i == steps))
            out.trajectory.push_back({double(i) * dt, p});
    }
    out.step_count = steps;
    out.probability_drift = std::abs(p.sum() - 1.0);
    out.final_state = std::move(p);
    return out;
}

/// Decay rate from the least-squares slope of log|value - asymptote| over the
/// last window_fraction of the samples. Requires >= 20 samples in the window and
/// at least three e-foldings of decay across the whole series.
inline double decay_rate_fit(const std::vector<double>& times, const std::vector<double>& values,
                             double asymptote, double window_fraction) {
    if (times.size() != values.size()) throw InvalidArgument("decay_rate_fit: size mismatch");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw InvalidArgument("decay_rate_fit: window fraction must be in (0, 1]");
    const std::size_t n = times.size();
    const std::size_t first = n - static_cast<std::size_t>(std::floor(window_fraction * double(n)));
    if (n < 20 || n - first < 20) throw InsufficientDecay("decay_rate_fit: fewer than 20 samples in the fit window");

    const double start = std::abs(values.front() - asymptote);
    const double end = std::abs(values.back() - asymptote);
    if (!(start > 0.0) || !(end > 0.0) || std::log(start / end) < 3.0)
        throw InsufficientDecay("decay_rate_fit: observable decayed by fewer than 3 e-foldings");

    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t used = 0;
    for (std::size_t i = first; i < n; ++i) {
        const double dev = std::abs(values[i] - asymptote);
        if (!(dev > 0.0)) continue;
        const double y = std::log(dev);
        st += times[i];
        sy += y;
        stt += times[i] * times[i];
        sty += times[i] * y;
        ++used;
    }
    if (used < 20) throw InsufficientDecay("decay_rate_fit: fewer than 20 usable samples in the fit window");
    const double m = double(used);
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    return -slope;
}

/// Writes "gamma_t,p_0,p_1,..." rows for every checkpoint.
inline void write_trajectory_csv(std::ostream& os, const std::vector<Checkpoint>& trajectory) {
    if (trajectory.empty()) return;
    os << "gamma_t";
    for (Eigen::Index i = 0; i < trajectory.front().p.size(); ++i) os << ",p_" << i;
    os << '\n';
    char buf[64];
    for (const auto& cp : trajectory) {
        std::snprintf(buf, sizeof buf, "%.17g", cp.gamma_t);
        os << buf;
        for (Eigen::Index i = 0; i < cp.p.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", cp.p[i]);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace micromaser::oracle
