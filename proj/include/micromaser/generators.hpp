#pragma once

// Truncated transition-rate matrices acting on the photon-number distribution:
// cavity damping L_C, one-atom operator U1, two-atom operator U2 and the
// generators L with dp/dt = -gamma L p.
//
// Index convention: entries(n, m) maps probability in column m (photon number m)
// to row n. Every matrix here has at most one superdiagonal (damping n+1 -> n)
// and two subdiagonals (emission m -> m+1, m+2).

#include "micromaser/errors.hpp"
#include "micromaser/model.hpp"
#include "micromaser/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace micromaser {

enum class MatrixKind {
    CavityDamping,
    OneAtomOp,
    TwoAtomOp,
    OneAtomGenerator,
    TwoAtomGenerator,
    SmallEpsGenerator,
};

enum class Model { OneAtom, TwoAtom, SmallEps };

inline const char* to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::CavityDamping: return "CavityDamping";
        case MatrixKind::OneAtomOp: return "OneAtomOp";
        case MatrixKind::TwoAtomOp: return "TwoAtomOp";
        case MatrixKind::OneAtomGenerator: return "OneAtomGenerator";
        case MatrixKind::TwoAtomGenerator: return "TwoAtomGenerator";
        case MatrixKind::SmallEpsGenerator: return "SmallEpsGenerator";
    }
    return "Unknown";
}

inline const char* to_string(Model model) {
    switch (model) {
        case Model::OneAtom: return "one-atom";
        case Model::TwoAtom: return "two-atom";
        case Model::SmallEps: return "small-eps";
    }
    return "unknown";
}

inline Model model_from_string(const std::string& name) {
    if (name == "one-atom") return Model::OneAtom;
    if (name == "two-atom") return Model::TwoAtom;
    if (name == "small-eps") return Model::SmallEps;
    throw InvalidArgument("unknown model '" + name + "' (expected one-atom, two-atom or small-eps)");
}

inline bool is_generator(MatrixKind kind) {
    return kind == MatrixKind::OneAtomGenerator || kind == MatrixKind::TwoAtomGenerator ||
           kind == MatrixKind::SmallEpsGenerator || kind == MatrixKind::CavityDamping;
}

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct GeneratorMatrix {
    MatrixKind kind = MatrixKind::CavityDamping;
    Matrix<Scalar> entries;
    // Largest probability flow out of the truncation from the clipped last columns.
    Scalar tail_leak = Scalar(0);
    // Panel count at which the U2 quadrature converged (0 when no quadrature ran).
    int quad_panels = 0;

    Eigen::Index dim() const { return entries.rows(); }
};

using GeneratorMatrixd = GeneratorMatrix<double>;

/// True when every entry outside {superdiagonal, diagonal, two subdiagonals} is zero.
template <typename Derived>
bool has_generator_band(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if ((r < c - 1 || r > c + 2) && m(r, c) != 0) return false;
    return true;
}

inline void check_dim(long n_max, long minimum, const char* who) {
    if (n_max < minimum)
        throw InvalidArgument(std::string(who) + ": n_max must be >= " + std::to_string(minimum));
}

/// Thermal cavity damping, Eq. for L_C truncated to photon numbers [0, n_max).
template <typename Scalar>
GeneratorMatrix<Scalar> build_cavity_damping(long n_max, Scalar n_b) {
    check_dim(n_max, 2, "build_cavity_damping");
    if (!(n_b >= Scalar(0))) throw InvalidArgument("build_cavity_damping: n_b must be >= 0");
    GeneratorMatrix<Scalar> out;
    out.kind = MatrixKind::CavityDamping;
    out.entries = Matrix<Scalar>::Zero(n_max, n_max);
    auto& lc = out.entries;
    for (long n = 0; n < n_max; ++n) {
        lc(n, n) = (n_b + 1) * Scalar(n) + n_b * Scalar(n + 1);
        if (n + 1 < n_max) lc(n, n + 1) = -(n_b + 1) * Scalar(n + 1);
        if (n >= 1) lc(n, n - 1) = -n_b * Scalar(n);
    }
    out.tail_leak = n_b * Scalar(n_max);
    return out;
}

/// (U1)_{nm} = (1 - q_{n+1}) delta_{n,m} + q_n delta_{n,m+1}.
template <typename Scalar>
GeneratorMatrix<Scalar> build_one_atom_op(long n_max, Scalar theta, Scalar flux_n) {
    check_dim(n_max, 2, "build_one_atom_op");
    GeneratorMatrix<Scalar> out;
    out.kind = MatrixKind::OneAtomOp;
    out.entries = Matrix<Scalar>::Zero(n_max, n_max);
    for (long m = 0; m < n_max; ++m) {
        const Scalar q = emission_prob<Scalar>(m + 1, theta, flux_n);
        out.entries(m, m) = Scalar(1) - q;
        if (m + 1 < n_max) out.entries(m + 1, m) = q;
    }
    out.tail_leak = emission_prob<Scalar>(n_max, theta, flux_n);
    return out;
}

template <typename Scalar>
struct TwoAtomCoeffs {
    Scalar u_aa = Scalar(1);  // both atoms leave excited: photon number unchanged
    Scalar u_ab = Scalar(0);  // one emission: n -> n + 1
    Scalar u_bb = Scalar(0);  // two emissions: n -> n + 2
};

/// Two-atom event coefficients for photon column n when the second atom enters
/// after a fraction u = s / tau of the transit time; the atoms overlap for
/// (1 - u) tau. Depends on the physics only through theta / sqrt(N).
///
/// Every two-atom-segment function uses the collective argument sqrt(n + 3/2):
/// with both atoms excited and n photons the total excitation n + 2 fixes the
/// overlap frequency, so no neighbouring index appears.
template <typename Scalar>
TwoAtomCoeffs<Scalar> two_atom_coeffs(long n, Scalar u, Scalar theta, Scalar flux_n) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    if (n < 0) throw InvalidArgument("two_atom_coeffs: n must be >= 0");
    const Scalar scale = theta / sqrt(flux_n);  // g tau
    const Scalar eps_n = Scalar(n + 1) / Scalar(2 * n + 3);
    const Scalar one_arg = scale * u;
    const Scalar ts1 = sin(one_arg * sqrt(Scalar(n + 1)));
    const Scalar tc1 = cos(one_arg * sqrt(Scalar(n + 1)));
    const Scalar ts2 = sin(one_arg * sqrt(Scalar(n + 2)));
    const Scalar tc2 = cos(one_arg * sqrt(Scalar(n + 2)));
    const Scalar two_arg = scale * (Scalar(1) - u) * sqrt(Scalar(n) + Scalar(1.5));
    const Scalar s = sin(two_arg);
    const Scalar c = cos(two_arg);

    const Scalar r2e = sqrt(Scalar(2) * eps_n);
    const Scalar r2e1 = sqrt(Scalar(2) * (Scalar(1) - eps_n));
    const Scalar cross = Scalar(2) * sqrt(eps_n * (Scalar(1) - eps_n));

    const Scalar aa = (Scalar(1) - Scalar(2) * eps_n * s * s) * tc1 * tc1 + s * s * ts1 * ts1 -
                      Scalar(2) * r2e * c * s * ts1 * tc1;
    const Scalar ab1 = ts1 * tc1 * ((Scalar(1) + Scalar(2) * eps_n) * s * s - Scalar(1)) +
                       r2e * c * s * (ts1 * ts1 - tc1 * tc1);
    const Scalar ab2 = -(c * c * ts1 + r2e * c * s * tc1) * tc2 + (cross * s * s * tc1 + r2e1 * c * s * ts1) * ts2;
    const Scalar bb = (cross * s * s * tc1 + r2e1 * c * s * ts1) * tc2 + (c * c * ts1 + r2e * c * s * tc1) * ts2;

    return {aa * aa, ab1 * ab1 + ab2 * ab2, bb * bb};
}

enum class OverlapWeight {
    Poisson,  // w(s) = R exp(-R s) / (1 - exp(-R tau))
    Flat,     // w(s) = 1 / tau, the small-eps limit
};

template <typename Scalar>
int initial_panels(long n_max, Scalar theta, Scalar flux_n) {
    using std::ceil;
    using std::sqrt;
    const Scalar phase = theta * sqrt(Scalar(n_max + 2) / flux_n);
    return std::max(8, static_cast<int>(ceil(phase / std::numbers::pi_v<Scalar>)));
}

namespace detail {

// Columns of the averaged U2: diag (aa), first subdiagonal (ab), second subdiagonal (bb).
template <typename Scalar>
struct Band3 {
    Vector<Scalar> aa, ab, bb;

    Scalar max_diff(const Band3& o) const {
        return std::max({(aa - o.aa).cwiseAbs().maxCoeff(), (ab - o.ab).cwiseAbs().maxCoeff(),
                         (bb - o.bb).cwiseAbs().maxCoeff()});
    }
};

template <typename Scalar>
Band3<Scalar> integrate_two_atom(long n_max, Scalar theta, Scalar flux_n, Scalar eps, OverlapWeight weight,
                                 const GaussLegendreRule<Scalar>& base, int panels) {
    const auto rule = composite_rule(base, panels, Scalar(0), Scalar(1));
    Band3<Scalar> band{Vector<Scalar>::Zero(n_max), Vector<Scalar>::Zero(n_max), Vector<Scalar>::Zero(n_max)};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Scalar u = rule.nodes[i];
        const Scalar w = rule.weights[i] *
                         (weight == OverlapWeight::Flat ? Scalar(1) : scaled_overlap_density<Scalar>(u, eps));
        for (long m = 0; m < n_max; ++m) {
            const auto k = two_atom_coeffs<Scalar>(m, u, theta, flux_n);
            band.aa[m] += w * k.u_aa;
            band.ab[m] += w * k.u_ab;
            band.bb[m] += w * k.u_bb;
        }
    }
    return band;
}

}  // namespace detail

/// Two-atom operator averaged over the arrival gap with composite Gauss-Legendre
/// panels on [0, tau]; the panel count doubles until successive estimates agree
/// to quad.tol in max-norm.
template <typename Scalar>
GeneratorMatrix<Scalar> build_two_atom_op(long n_max, Scalar theta, Scalar flux_n, Scalar eps,
                                          const QuadratureSpec& quad = {},
                                          OverlapWeight weight = OverlapWeight::Poisson) {
    check_dim(n_max, 3, "build_two_atom_op");
    quad.validate();
    if (!(theta >= Scalar(0))) throw InvalidArgument("build_two_atom_op: theta must be >= 0");
    if (!(flux_n > Scalar(0))) throw InvalidArgument("build_two_atom_op: flux_n must be > 0");
    if (!(eps >= Scalar(0))) throw InvalidArgument("build_two_atom_op: eps must be >= 0");

    GeneratorMatrix<Scalar> out;
    out.kind = MatrixKind::TwoAtomOp;
    if (theta == Scalar(0)) {
        // zero transit time: no interaction at all
        out.entries = Matrix<Scalar>::Identity(n_max, n_max);
        return out;
    }

    const auto base = gauss_legendre<Scalar>(quad.order);
    int panels = quad.panels > 0 ? quad.panels : initial_panels(n_max, theta, flux_n);
    auto coarse = detail::integrate_two_atom(n_max, theta, flux_n, eps, weight, base, panels);
    for (;;) {
        if (2 * panels > quad.max_panels)
            throw NonConvergence("build_two_atom_op: quadrature did not converge within " +
                                 std::to_string(quad.max_panels) + " panels");
        auto fine = detail::integrate_two_atom(n_max, theta, flux_n, eps, weight, base, 2 * panels);
        panels *= 2;
        const Scalar change = coarse.max_diff(fine);
        coarse = std::move(fine);
        if (change < Scalar(quad.tol)) break;
    }

    out.quad_panels = panels;
    out.entries = Matrix<Scalar>::Zero(n_max, n_max);
    for (long m = 0; m < n_max; ++m) {
        out.entries(m, m) = coarse.aa[m];
        if (m + 1 < n_max) out.entries(m + 1, m) = coarse.ab[m];
        if (m + 2 < n_max) out.entries(m + 2, m) = coarse.bb[m];
    }
    out.tail_leak = std::max(coarse.bb[n_max - 2], coarse.ab[n_max - 1] + coarse.bb[n_max - 1]);
    return out;
}

namespace detail {

template <typename Scalar>
void add_pump(Matrix<Scalar>& generator, Scalar rate, const Matrix<Scalar>& op) {
    // L -= rate * (U - 1)
    if (rate == Scalar(0)) return;
    generator -= rate * (op - Matrix<Scalar>::Identity(op.rows(), op.cols()));
}

template <typename Scalar>
Scalar boundary_leak(const Matrix<Scalar>& generator) {
    using std::abs;
    const Eigen::Index n = generator.cols();
    Scalar leak = 0;
    for (Eigen::Index c = std::max<Eigen::Index>(0, n - 2); c < n; ++c)
        leak = std::max(leak, abs(generator.col(c).sum()));
    return leak;
}

}  // namespace detail

/// Assembles L1 = L_C - N (U1 - 1), L2 = L_C - N P~1 (U1 - 1) - N P~2 (U2 - 1),
/// or the small-eps form with P~1 = 1 - 2 eps, P~2 = eps and a flat overlap density.
/// A zero flux leaves pure cavity damping. Rates are in units of gamma.
template <typename Scalar = double>
GeneratorMatrix<Scalar> build_generator(Model model, long n_max, const ModelParams& params,
                                        const QuadratureSpec& quad = {}) {
    check_dim(n_max, model == Model::OneAtom ? 2 : 3, "build_generator");
    if (!(params.flux_n >= 0.0)) throw InvalidArgument("build_generator: flux_n must be >= 0");
    if (!(params.theta >= 0.0)) throw InvalidArgument("build_generator: theta must be >= 0");

    const Scalar flux = Scalar(params.flux_n);
    const Scalar theta = Scalar(params.theta);
    GeneratorMatrix<Scalar> out = build_cavity_damping<Scalar>(n_max, Scalar(params.n_b));
    switch (model) {
        case Model::OneAtom: out.kind = MatrixKind::OneAtomGenerator; break;
        case Model::TwoAtom: out.kind = MatrixKind::TwoAtomGenerator; break;
        case Model::SmallEps: out.kind = MatrixKind::SmallEpsGenerator; break;
    }
    if (flux == Scalar(0)) return out;

    Scalar rate1 = flux;
    Scalar rate2 = 0;
    const Scalar eps = model == Model::OneAtom ? Scalar(0) : Scalar(params.eps());
    if (model == Model::TwoAtom) {
        const auto probs = modified_probabilities<Scalar>(eps);
        rate1 = flux * probs.p1_mod;
        rate2 = flux * probs.p2_mod;
    } else if (model == Model::SmallEps) {
        rate1 = flux * (Scalar(1) - Scalar(2) * eps);
        rate2 = flux * eps;
    }

    const auto u1 = build_one_atom_op<Scalar>(n_max, theta, flux);
    detail::add_pump(out.entries, rate1, u1.entries);
    if (rate2 != Scalar(0)) {
        const auto weight = model == Model::SmallEps ? OverlapWeight::Flat : OverlapWeight::Poisson;
        const auto u2 = build_two_atom_op<Scalar>(n_max, theta, flux, eps, quad, weight);
        detail::add_pump(out.entries, rate2, u2.entries);
        out.quad_panels = u2.quad_panels;
    }
    out.tail_leak = detail::boundary_leak(out.entries);
    return out;
}

}  // namespace micromaser
