#pragma once

// Stationary photon distribution, subleading eigenvalue and correlation length
// of a truncated generator.

#include "micromaser/errors.hpp"
#include "micromaser/generators.hpp"
#include "micromaser/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace micromaser {

struct SpectralOptions {
    double tail_threshold = 1e-10;  // max probability in the last tail_width levels
    int tail_width = 10;
    double residual_threshold = 1e-8;  // ||L p||_inf
    double zero_mode_tol = 1e-8;       // |lambda_0| must fall below this
    double gap_threshold = 1e-6;       // eigenvalues with Re <= this are not candidates for lambda_1
    double stability_tol = 1e-8;       // Re(lambda) >= -stability_tol for every eigenvalue
    bool enforce = true;               // throw Unconverged on threshold violations
};

template <typename Scalar>
struct PhotonDistribution {
    Vector<Scalar> probs;
    Scalar tail_mass = Scalar(0);
    // Largest negative round-off entry removed before renormalization.
    Scalar clamped = Scalar(0);

    Eigen::Index size() const { return probs.size(); }
};

template <typename Scalar>
Scalar tail_mass_of(const Vector<Scalar>& p, int width) {
    const Eigen::Index w = std::min<Eigen::Index>(width, p.size());
    return p.tail(w).sum();
}

/// Clamps negative round-off to zero, renormalizes to unit sum and records the tail mass.
template <typename Scalar>
PhotonDistribution<Scalar> make_distribution(Vector<Scalar> p, int tail_width = 10) {
    PhotonDistribution<Scalar> out;
    Scalar most_negative = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < Scalar(0)) {
            most_negative = std::max(most_negative, -p[i]);
            p[i] = 0;
        }
    }
    const Scalar total = p.sum();
    if (!(total > Scalar(0))) throw SingularSystem("make_distribution: vector has no positive mass");
    out.probs = p / total;
    out.clamped = most_negative / total;
    out.tail_mass = tail_mass_of(out.probs, tail_width);
    return out;
}

template <typename Scalar>
Vector<Scalar> thermal_distribution(long n_max, Scalar n_b) {
    using std::pow;
    Vector<Scalar> p(n_max);
    const Scalar ratio = n_b / (Scalar(1) + n_b);
    for (long n = 0; n < n_max; ++n) p[n] = pow(ratio, Scalar(n)) / (Scalar(1) + n_b);
    return p;
}

namespace detail {

inline void enforce_tail(double tail, const SpectralOptions& opts, const char* who) {
    if (opts.enforce && !(tail < opts.tail_threshold)) {
        std::ostringstream msg;
        msg << who << ": tail mass " << tail << " exceeds " << opts.tail_threshold
            << " (distribution not contained in the truncation)";
        throw Unconverged(msg.str(), tail, 0.0);
    }
}

}  // namespace detail

/// Closed-form one-atom stationary state
///   p_n = p_0 prod_{m=1..n} (n_b m + N q_m) / ((1 + n_b) m),
/// accumulated in the log domain so that long products neither overflow nor underflow.
template <typename Scalar>
PhotonDistribution<Scalar> stationary_one_atom(long n_max, Scalar theta, Scalar flux_n, Scalar n_b,
                                               const SpectralOptions& opts = {}) {
    using std::exp;
    using std::log;
    check_dim(n_max, 2, "stationary_one_atom");
    if (!(n_b >= Scalar(0))) throw InvalidArgument("stationary_one_atom: n_b must be >= 0");
    if (!(flux_n >= Scalar(0))) throw InvalidArgument("stationary_one_atom: flux_n must be >= 0");
    const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
    Vector<Scalar> logp(n_max);
    logp[0] = 0;
    for (long m = 1; m < n_max; ++m) {
        const Scalar pump = flux_n == Scalar(0) ? Scalar(0) : flux_n * emission_prob<Scalar>(m, theta, flux_n);
        const Scalar factor = (n_b * Scalar(m) + pump) / ((Scalar(1) + n_b) * Scalar(m));
        logp[m] = (factor > Scalar(0) && logp[m - 1] != neg_inf) ? logp[m - 1] + log(factor) : neg_inf;
    }
    const Scalar peak = logp.maxCoeff();
    Vector<Scalar> p(n_max);
    for (long n = 0; n < n_max; ++n) p[n] = logp[n] == neg_inf ? Scalar(0) : exp(logp[n] - peak);
    auto out = make_distribution<Scalar>(std::move(p), opts.tail_width);
    detail::enforce_tail(double(out.tail_mass), opts, "stationary_one_atom");
    return out;
}

/// Solves L p = 0 with sum(p) = 1 by replacing row 0 of L by ones.
template <typename Scalar>
PhotonDistribution<Scalar> stationary_nullspace(const GeneratorMatrix<Scalar>& gen, const SpectralOptions& opts = {}) {
    if (!is_generator(gen.kind)) throw InvalidArgument("stationary_nullspace: matrix is not a generator");
    const auto& l = gen.entries;
    const Eigen::Index n = l.rows();
    Matrix<Scalar> augmented = l;
    augmented.row(0).setOnes();
    Vector<Scalar> rhs = Vector<Scalar>::Zero(n);
    rhs[0] = 1;

    Eigen::PartialPivLU<Matrix<Scalar>> lu(augmented);
    Vector<Scalar> p = lu.solve(rhs);
    // one step of iterative refinement
    p += lu.solve(rhs - augmented * p);
    if (!p.allFinite()) {
        // inverse iteration with a tiny shift as a fallback
        const Scalar shift = Scalar(1e-12) * l.cwiseAbs().maxCoeff();
        Eigen::PartialPivLU<Matrix<Scalar>> shifted(l - shift * Matrix<Scalar>::Identity(n, n));
        p = Vector<Scalar>::Ones(n) / Scalar(n);
        for (int it = 0; it < 4; ++it) {
            p = shifted.solve(p);
            p /= p.sum();
        }
        if (!p.allFinite()) throw SingularSystem("stationary_nullspace: augmented system is singular");
    }

    auto out = make_distribution<Scalar>(std::move(p), opts.tail_width);
    const Scalar residual = (l * out.probs).cwiseAbs().maxCoeff();
    if (opts.enforce && !(double(residual) < opts.residual_threshold)) {
        std::ostringstream msg;
        msg << "stationary_nullspace: residual " << double(residual) << " exceeds " << opts.residual_threshold;
        throw Unconverged(msg.str(), double(out.tail_mass), double(residual));
    }
    detail::enforce_tail(double(out.tail_mass), opts, "stationary_nullspace");
    return out;
}

template <typename Scalar>
Scalar stationary_residual(const GeneratorMatrix<Scalar>& gen, const PhotonDistribution<Scalar>& p) {
    return (gen.entries * p.probs).cwiseAbs().maxCoeff();
}

/// All eigenvalues of a dense real matrix. A banded generator (at most one
/// superdiagonal) has an upper-Hessenberg transpose, so the Hessenberg reduction
/// is skipped and the real Schur iteration starts directly on L^T. Before that
/// the matrix is rescaled by D^-1 L D with d_{i+1}/d_i = sqrt(L(i+1,i) / L(i,i+1)),
/// which makes a tridiagonal generator symmetric and keeps the iteration well
/// conditioned for the banded ones. Where L splits into block upper-triangular
/// form the coupling entry is shrunk instead.
template <typename Scalar>
std::vector<std::complex<Scalar>> eigenvalues(const Matrix<Scalar>& l) {
    const Eigen::Index n = l.rows();
    std::vector<std::complex<Scalar>> out;
    out.reserve(n);
    bool hessenberg_transpose = true;
    for (Eigen::Index c = 0; c < n && hessenberg_transpose; ++c)
        for (Eigen::Index r = 0; r + 1 < c; ++r)
            if (l(r, c) != Scalar(0)) {
                hessenberg_transpose = false;
                break;
            }

    if (!hessenberg_transpose) {
        Eigen::EigenSolver<Matrix<Scalar>> solver(l, false);
        if (solver.info() != Eigen::Success) throw SpectrumAnomaly("eigenvalues: QR iteration failed",
                                                                  SpectrumAnomaly::Reason::NoZeroMode);
        for (Eigen::Index i = 0; i < n; ++i) out.push_back(solver.eigenvalues()[i]);
        return out;
    }

    using std::exp;
    using std::log;
    Vector<Scalar> logd = Vector<Scalar>::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const Scalar below = l(i + 1, i), above = l(i, i + 1);
        Scalar step = 0;
        if (below < Scalar(0) && above < Scalar(0)) {
            step = (log(-below) - log(-above)) / 2;
        } else if (below == Scalar(0) && above != Scalar(0) && (i + 2 >= n || l(i + 2, i) == Scalar(0)) &&
                   (i == 0 || l(i + 1, i - 1) == Scalar(0))) {
            // block upper-triangular split: the coupling does not enter the spectrum
            step = -30;
        }
        logd[i + 1] = logd[i] + step;
    }
    Matrix<Scalar> h(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) {
            const Scalar v = l(c, r);  // h = (D^-1 L D)^T
            h(r, c) = v == Scalar(0) ? Scalar(0) : v * exp(logd[r] - logd[c]);
        }
    Eigen::RealSchur<Matrix<Scalar>> schur(n);
    schur.computeFromHessenberg(h, Matrix<Scalar>::Identity(n, n), false);
    if (schur.info() != Eigen::Success)
        throw SpectrumAnomaly("eigenvalues: real Schur iteration failed", SpectrumAnomaly::Reason::NoZeroMode);
    const auto& t = schur.matrixT();
    for (Eigen::Index i = 0; i < n;) {
        if (i + 1 < n && t(i + 1, i) != Scalar(0)) {
            // 2x2 block with a complex-conjugate pair
            const Scalar a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
            const Scalar half_trace = (a + d) / 2;
            const Scalar disc = (a - d) * (a - d) / 4 + b * c;
            if (disc >= Scalar(0)) {
                using std::sqrt;
                const Scalar root = sqrt(disc);
                out.emplace_back(half_trace + root, Scalar(0));
                out.emplace_back(half_trace - root, Scalar(0));
            } else {
                using std::sqrt;
                const Scalar root = sqrt(-disc);
                out.emplace_back(half_trace, root);
                out.emplace_back(half_trace, -root);
            }
            i += 2;
        } else {
            out.emplace_back(t(i, i), Scalar(0));
            i += 1;
        }
    }
    return out;
}

template <typename Scalar>
struct SubleadingEigenvalue {
    std::complex<Scalar> lambda0;  // the stationary zero mode
    std::complex<Scalar> lambda1;  // smallest real part above the gap threshold
};

/// lambda_1 of the generator in units of gamma. Raises SpectrumAnomaly when the
/// zero mode is missing or not unique, or when the spectrum has a negative real part.
template <typename Scalar>
SubleadingEigenvalue<Scalar> subleading_eigenvalue(const GeneratorMatrix<Scalar>& gen,
                                                   const SpectralOptions& opts = {}) {
    using std::abs;
    if (!is_generator(gen.kind)) throw InvalidArgument("subleading_eigenvalue: matrix is not a generator");
    const auto spectrum = eigenvalues<Scalar>(gen.entries);

    std::vector<std::complex<Scalar>> near_zero;
    const std::complex<Scalar>* best = nullptr;
    Scalar most_negative = 0;
    for (const auto& lam : spectrum) {
        most_negative = std::min(most_negative, lam.real());
        if (lam.real() <= Scalar(opts.gap_threshold)) {
            near_zero.push_back(lam);
        } else if (best == nullptr || lam.real() < best->real()) {
            best = &lam;
        }
    }
    std::ostringstream msg;
    if (most_negative < -Scalar(opts.stability_tol)) {
        msg << "subleading_eigenvalue: eigenvalue with real part " << double(most_negative);
        throw SpectrumAnomaly(msg.str(), SpectrumAnomaly::Reason::Unstable);
    }
    if (near_zero.size() > 1) {
        msg << "subleading_eigenvalue: " << near_zero.size() << " eigenvalues with real part below "
            << opts.gap_threshold << " (degenerate stationary state)";
        throw SpectrumAnomaly(msg.str(), SpectrumAnomaly::Reason::Degenerate);
    }
    if (near_zero.empty() || !(abs(near_zero.front()) < Scalar(opts.zero_mode_tol))) {
        msg << "subleading_eigenvalue: no eigenvalue within " << opts.zero_mode_tol << " of zero";
        throw SpectrumAnomaly(msg.str(), SpectrumAnomaly::Reason::NoZeroMode);
    }
    if (best == nullptr) throw SpectrumAnomaly("subleading_eigenvalue: no eigenvalue above the gap threshold",
                                               SpectrumAnomaly::Reason::NoGap);
    return {near_zero.front(), *best};
}

template <typename Scalar>
struct Observables {
    Scalar mean_n = 0;
    Scalar mean_x = 0;  // <n> / N
    Scalar var_n = 0;
};

template <typename Scalar>
Observables<Scalar> observables(const PhotonDistribution<Scalar>& p, Scalar flux_n) {
    Observables<Scalar> out;
    Scalar second = 0;
    for (Eigen::Index n = 0; n < p.size(); ++n) {
        out.mean_n += Scalar(n) * p.probs[n];
        second += Scalar(n) * Scalar(n) * p.probs[n];
    }
    out.var_n = std::max(Scalar(0), second - out.mean_n * out.mean_n);
    out.mean_x = flux_n > Scalar(0) ? out.mean_n / flux_n : std::numeric_limits<Scalar>::quiet_NaN();
    return out;
}

/// gamma xi = 1 / Re(lambda_1).
template <typename Scalar>
Scalar correlation_length(std::complex<Scalar> lambda1) {
    if (!(lambda1.real() > Scalar(0)))
        throw InvalidArgument("correlation_length: Re(lambda_1) must be > 0");
    return Scalar(1) / lambda1.real();
}

template <typename Scalar>
Scalar correlation_length(Scalar lambda1) {
    return correlation_length(std::complex<Scalar>(lambda1, Scalar(0)));
}

template <typename Scalar>
struct SpectralSummary {
    Scalar mean_n = 0;
    Scalar mean_x = 0;
    Scalar var_n = 0;
    std::complex<Scalar> lambda1{};
    Scalar corr_length = 0;
    Scalar lambda1_imag = 0;
    Scalar residual = 0;
    Scalar tail_mass = 0;
    Scalar clamped = 0;
    PhotonDistribution<Scalar> distribution;
};

/// Stationary state, observables and lambda_1 of one generator.
template <typename Scalar>
SpectralSummary<Scalar> analyze(const GeneratorMatrix<Scalar>& gen, Scalar flux_n, const SpectralOptions& opts = {}) {
    SpectralSummary<Scalar> out;
    out.distribution = stationary_nullspace(gen, opts);
    out.residual = stationary_residual(gen, out.distribution);
    out.tail_mass = out.distribution.tail_mass;
    out.clamped = out.distribution.clamped;
    const auto obs = observables(out.distribution, flux_n);
    out.mean_n = obs.mean_n;
    out.mean_x = obs.mean_x;
    out.var_n = obs.var_n;
    const auto eig = subleading_eigenvalue(gen, opts);
    out.lambda1 = eig.lambda1;
    out.lambda1_imag = eig.lambda1.imag();
    out.corr_length = correlation_length(eig.lambda1);
    return out;
}

}  // namespace micromaser
