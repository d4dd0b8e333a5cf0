#pragma once

// Scalar formulas shared by the matrix builders: emission probabilities,
// Poisson event statistics of the atomic beam, and the overlap-time density.
//
// Time is measured in units of 1/gamma internally. Physical g and gamma (s^-1)
// only enter through the transit time and the coupled-eps relation.

#include "micromaser/errors.hpp"

#include <cmath>
#include <string>
#include <variant>

namespace micromaser {

struct FixedEps {
    double value = 0.0;
};

struct CoupledEps {};

// Fixed(eps) or eps = gamma * sqrt(N) * theta / g.
using EpsMode = std::variant<FixedEps, CoupledEps>;

/// q_n = sin^2(theta * sqrt(n / N)). Depends on (theta, N) only through theta/sqrt(N).
template <typename Scalar>
Scalar emission_prob(long n, Scalar theta, Scalar flux_n) {
    using std::sin;
    using std::sqrt;
    if (n == 0) return Scalar(0);
    const Scalar s = sin(theta * sqrt(Scalar(n) / flux_n));
    return s * s;
}

/// Probability that a randomly chosen beam atom belongs to an n-atom event,
/// P_n = exp(-2 eps) (1 - exp(-eps))^(n-1).
template <typename Scalar>
Scalar event_probability(long n, Scalar eps) {
    using std::exp;
    using std::expm1;
    using std::pow;
    if (n < 1) throw InvalidArgument("event_probability: event size must be >= 1");
    if (eps < Scalar(0)) throw InvalidArgument("event_probability: eps must be >= 0");
    if (n == 1) return exp(Scalar(-2) * eps);
    return exp(Scalar(-2) * eps) * pow(-expm1(-eps), Scalar(n - 1));
}

template <typename Scalar>
struct EventProbabilities {
    Scalar p1 = Scalar(1);  // raw P_1
    Scalar p2 = Scalar(0);  // raw P_2
    Scalar p1_mod = Scalar(1);
    Scalar p2_mod = Scalar(0);
};

/// P~_1 = P_1 / (P_1 + 2 P_2), P~_2 = P_2 / (P_1 + 2 P_2); P~_1 + 2 P~_2 = 1.
template <typename Scalar>
EventProbabilities<Scalar> modified_probabilities(Scalar eps) {
    EventProbabilities<Scalar> out;
    out.p1 = event_probability<Scalar>(1, eps);
    out.p2 = event_probability<Scalar>(2, eps);
    const Scalar denom = out.p1 + Scalar(2) * out.p2;
    out.p1_mod = out.p1 / denom;
    out.p2_mod = out.p2 / denom;
    return out;
}

/// Conditional arrival-gap density w(s) = R exp(-R s) / (1 - exp(-R tau)) on [0, tau].
template <typename Scalar>
Scalar overlap_density(Scalar s, Scalar rate, Scalar tau) {
    using std::exp;
    using std::expm1;
    if (!(tau > Scalar(0))) throw InvalidArgument("overlap_density: transit time must be > 0");
    if (!(rate > Scalar(0))) throw InvalidArgument("overlap_density: atom rate must be > 0");
    if (s < Scalar(0) || s > tau) throw InvalidArgument("overlap_density: s outside [0, tau]");
    return rate * exp(-rate * s) / (-expm1(-rate * tau));
}

/// The same density in the split fraction u = s / tau, where only eps = R tau survives:
/// eps exp(-eps u) / (1 - exp(-eps)). Tends to 1 (flat) as eps -> 0.
template <typename Scalar>
Scalar scaled_overlap_density(Scalar u, Scalar eps) {
    using std::abs;
    using std::exp;
    using std::expm1;
    if (eps < Scalar(0)) throw InvalidArgument("scaled_overlap_density: eps must be >= 0");
    if (eps == Scalar(0)) return Scalar(1);
    return eps * exp(-eps * u) / (-expm1(-eps));
}

template <typename Scalar>
Scalar eps_of_theta(Scalar theta, Scalar flux_n, Scalar gamma, Scalar rabi_g) {
    using std::sqrt;
    return gamma * sqrt(flux_n) * theta / rabi_g;
}

/// Physical configuration of one micromaser operating point.
struct ModelParams {
    double flux_n = 1.0;   // N = R / gamma
    double n_b = 0.0;      // thermal occupancy
    double theta = 0.0;    // g tau sqrt(N)
    double rabi_g = 1.0;   // s^-1
    double gamma = 1.0;    // s^-1
    EpsMode eps_mode = FixedEps{0.0};

    double eps() const {
        if (const auto* fixed = std::get_if<FixedEps>(&eps_mode)) return fixed->value;
        return eps_of_theta(theta, flux_n, gamma, rabi_g);
    }

    // Transit time in seconds.
    double tau() const { return theta / (rabi_g * std::sqrt(flux_n)); }

    bool coupled() const { return std::holds_alternative<CoupledEps>(eps_mode); }

    void validate() const {
        auto fail = [](const std::string& m) { throw InvalidArgument("ModelParams: " + m); };
        if (!(flux_n > 0.0) || !std::isfinite(flux_n)) fail("flux_n must be > 0");
        if (!(n_b >= 0.0) || !std::isfinite(n_b)) fail("n_b must be >= 0");
        if (!(theta >= 0.0) || !std::isfinite(theta)) fail("theta must be >= 0");
        if (!(rabi_g > 0.0) || !std::isfinite(rabi_g)) fail("rabi_g must be > 0");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be > 0");
        if (const auto* fixed = std::get_if<FixedEps>(&eps_mode)) {
            if (!(fixed->value >= 0.0) || !std::isfinite(fixed->value)) fail("fixed eps must be >= 0");
        }
    }
};

}  // namespace micromaser
