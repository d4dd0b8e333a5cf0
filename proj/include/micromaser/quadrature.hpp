#pragma once

#include "micromaser/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <vector>

namespace micromaser {

struct QuadratureSpec {
    int order = 10;            // Gauss-Legendre points per panel
    int panels = 0;            // starting panel count; 0 picks it from the fastest oscillation
    double tol = 1e-10;        // max-norm change between successive doublings
    int max_panels = 1 << 15;

    void validate() const {
        if (order < 1) throw InvalidArgument("QuadratureSpec: order must be >= 1");
        if (panels < 0) throw InvalidArgument("QuadratureSpec: panels must be >= 0");
        if (!(tol > 0.0)) throw InvalidArgument("QuadratureSpec: tol must be > 0");
        if (max_panels < 1) throw InvalidArgument("QuadratureSpec: max_panels must be >= 1");
    }
};

template <typename Scalar>
struct GaussLegendreRule {
    std::vector<Scalar> nodes;    // on [-1, 1]
    std::vector<Scalar> weights;
};

/// Nodes and weights of the order-point Gauss-Legendre rule, by Newton iteration
/// on the Legendre three-term recurrence.
template <typename Scalar>
GaussLegendreRule<Scalar> gauss_legendre(int order) {
    using std::abs;
    using std::cos;
    if (order < 1) throw InvalidArgument("gauss_legendre: order must be >= 1");
    GaussLegendreRule<Scalar> rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar eps = Eigen::NumTraits<Scalar>::epsilon();
    for (int i = 0; i < (order + 1) / 2; ++i) {
        Scalar x = cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(order) + Scalar(0.5)));
        Scalar dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            Scalar p0 = 1, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (order == 1) p0 = 1;
            dp = order * (x * p1 - p0) / (x * x - 1);
            const Scalar dx = p1 / dp;
            x -= dx;
            if (abs(dx) <= 4 * eps) break;
        }
        // recompute the derivative at the converged node
        Scalar p0 = 1, p1 = x;
        for (int k = 2; k <= order; ++k) {
            const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (order == 1) p0 = 1;
        dp = order * (x * p1 - p0) / (x * x - 1);
        const Scalar w = 2 / ((1 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0;
    return rule;
}

/// Composite rule on [a, b]: panels x order abscissae with their weights.
template <typename Scalar>
GaussLegendreRule<Scalar> composite_rule(const GaussLegendreRule<Scalar>& base, int panels, Scalar a, Scalar b) {
    GaussLegendreRule<Scalar> out;
    const auto order = base.nodes.size();
    out.nodes.reserve(order * panels);
    out.weights.reserve(order * panels);
    const Scalar width = (b - a) / Scalar(panels);
    for (int p = 0; p < panels; ++p) {
        const Scalar lo = a + width * Scalar(p);
        const Scalar mid = lo + width / 2;
        for (std::size_t i = 0; i < order; ++i) {
            out.nodes.push_back(mid + width / 2 * base.nodes[i]);
            out.weights.push_back(width / 2 * base.weights[i]);
        }
    }
    return out;
}

}  // namespace micromaser
