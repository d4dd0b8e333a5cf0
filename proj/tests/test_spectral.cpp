#include "micromaser/spectral.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace micromaser;
using std::numbers::pi;

namespace {

ModelParams params(double flux, double n_b, double theta, double eps = 0.0) {
    ModelParams p;
    p.flux_n = flux;
    p.n_b = n_b;
    p.theta = theta;
    p.eps_mode = FixedEps{eps};
    return p;
}

// A tridiagonal generator with positive off-diagonal products is similar to a
// symmetric matrix; its spectrum comes from the self-adjoint solver.
Eigen::VectorXd symmetrized_spectrum(const Eigen::MatrixXd& l) {
    const Eigen::Index n = l.rows();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i, i) = l(i, i);
        if (i + 1 < n) s(i, i + 1) = s(i + 1, i) = -std::sqrt(l(i + 1, i) * l(i, i + 1));
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues();
}

SpectrumAnomaly::Reason anomaly_of(const Eigen::MatrixXd& m) {
    GeneratorMatrixd g;
    g.kind = MatrixKind::OneAtomGenerator;
    g.entries = m;
    try {
        subleading_eigenvalue(g);
    } catch (const SpectrumAnomaly& e) {
        return e.reason();
    }
    FAIL("no anomaly raised");
    return SpectrumAnomaly::Reason::NoGap;
}

}  // namespace

TEST_CASE("stationary distribution, closed form") {
    SUBCASE("no pump gives the thermal state") {
        const auto p = stationary_one_atom<double>(200, 3.0, 0.0, 0.5);
        CHECK((p.probs - thermal_distribution<double>(200, 0.5)).cwiseAbs().maxCoeff() < 1e-14);
        const auto q = stationary_nullspace(build_cavity_damping<double>(200, 0.5));
        CHECK((q.probs - thermal_distribution<double>(200, 0.5)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(observables(q, 0.0).mean_n == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(std::isnan(observables(q, 0.0).mean_x));
    }

    SUBCASE("vacuum trapping") {
        const double flux = 20.0;
        const auto p = stationary_one_atom<double>(100, pi * std::sqrt(flux), flux, 0.0);
        // sin(pi) is not exactly zero in floating point
        CHECK(p.probs[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p.probs.tail(99).maxCoeff() < 1e-25);
    }

    SUBCASE("trapping truncates the distribution above n_t") {
        const double flux = 30.0;
        for (long n_t : {2L, 5L, 11L}) {
            const double theta = 2 * pi * std::sqrt(flux / double(n_t + 1));
            const auto p = stationary_one_atom<double>(150, theta, flux, 0.0);
            CHECK(p.probs[n_t] > 0.0);
            CHECK(p.probs.tail(150 - n_t - 1).maxCoeff() < 1e-25 * p.probs[n_t]);
        }
    }

    SUBCASE("tail mass above threshold raises Unconverged") {
        CHECK_THROWS_AS(stationary_one_atom<double>(30, 1.0, 50.0, 0.0), Unconverged);
        SpectralOptions lax;
        lax.enforce = false;
        CHECK(stationary_one_atom<double>(30, 1.0, 50.0, 0.0, lax).tail_mass > 1e-10);
    }
}

TEST_CASE("null-space solver") {
    SUBCASE("matches the closed form for the one-atom model") {
        std::mt19937_64 rng(29);
        std::uniform_real_distribution<double> theta(0.0, 20.0), flux(1.0, 60.0), nb(0.0, 1.0);
        for (int i = 0; i < 20; ++i) {
            const auto p = params(flux(rng), nb(rng), theta(rng));
            const auto exact = stationary_one_atom<double>(200, p.theta, p.flux_n, p.n_b);
            const auto gen = build_generator<double>(Model::OneAtom, 200, p);
            const auto num = stationary_nullspace(gen);
            CHECK((num.probs - exact.probs).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(stationary_residual(gen, num) < 1e-8);
        }
    }

    SUBCASE("two-atom model at eps = 0 reproduces the closed form") {
        const auto p = params(50.0, 0.1, 5.0);
        const auto num = stationary_nullspace(build_generator<double>(Model::TwoAtom, 200, p));
        const auto exact = stationary_one_atom<double>(200, 5.0, 50.0, 0.1);
        CHECK((num.probs - exact.probs).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("pure damping relaxes to the vacuum") {
        const auto q = stationary_nullspace(build_cavity_damping<double>(40, 0.0));
        CHECK(q.probs[0] == doctest::Approx(1.0).epsilon(1e-15));
    }

    CHECK_THROWS_AS(stationary_nullspace(build_one_atom_op<double>(20, 1.0, 1.0)), InvalidArgument);
}

TEST_CASE("subleading eigenvalue") {
    SUBCASE("damping alone: lambda_1 = 1") {
        const auto eig = subleading_eigenvalue(build_cavity_damping<double>(200, 0.0));
        CHECK(std::abs(eig.lambda1 - std::complex<double>(1.0, 0.0)) < 1e-12);
        const auto a = subleading_eigenvalue(build_cavity_damping<double>(200, 0.5));
        const auto b = subleading_eigenvalue(build_cavity_damping<double>(400, 0.5));
        CHECK(std::abs(a.lambda1 - b.lambda1) < 1e-8);
        CHECK(a.lambda1.real() == doctest::Approx(1.0).epsilon(1e-8));
    }

    SUBCASE("one-atom lambda_1 against the symmetrized tridiagonal spectrum") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> theta(0.0, 20.0), flux(1.0, 60.0), nb(0.0, 1.0);
        for (int i = 0; i < 20; ++i) {
            const auto p = params(flux(rng), nb(rng), theta(rng));
            const auto gen = build_generator<double>(Model::OneAtom, 200, p);
            const Eigen::VectorXd sym = symmetrized_spectrum(gen.entries);
            const auto eig = subleading_eigenvalue(gen);
            CHECK(std::abs(eig.lambda0) < 1e-9);
            CHECK(std::abs(eig.lambda1.imag()) == 0.0);
            CHECK(std::abs(eig.lambda1.real() - sym[1]) < 1e-11);
        }
    }

    SUBCASE("long double agrees with double") {
        const auto p = params(50.0, 0.2, 7.0, 0.3);
        const auto d = subleading_eigenvalue(build_generator<double>(Model::TwoAtom, 120, p));
        const auto ld = subleading_eigenvalue(build_generator<long double>(Model::TwoAtom, 120, p));
        CHECK(std::abs(d.lambda1.real() - double(ld.lambda1.real())) < 1e-11);
    }

    SUBCASE("general solver path") {
        Eigen::MatrixXd dense = build_cavity_damping<double>(30, 0.2).entries;
        CHECK(eigenvalues<double>(dense).size() == 30);
        // a non-banded element forces the general path
        dense(0, 5) = 0.0;
        dense(0, 2) = -0.1;
        dense(2, 2) += 0.1;
        double zero = 1.0;
        for (const auto& lam : eigenvalues<double>(dense)) zero = std::min(zero, std::abs(lam));
        CHECK(zero < 1e-12);
    }

    SUBCASE("anomalies") {
        CHECK(anomaly_of(Eigen::MatrixXd::Zero(4, 4)) == SpectrumAnomaly::Reason::Degenerate);
        CHECK(anomaly_of(Eigen::MatrixXd::Identity(4, 4)) == SpectrumAnomaly::Reason::NoZeroMode);
        CHECK(anomaly_of(-Eigen::MatrixXd::Identity(4, 4)) == SpectrumAnomaly::Reason::Unstable);
        Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, 1);
        CHECK(anomaly_of(one) == SpectrumAnomaly::Reason::NoGap);
    }
}

TEST_CASE("observables and correlation length") {
    PhotonDistribution<double> p = make_distribution<double>(Eigen::Vector4d(1.0, 2.0, 1.0, 0.0));
    const auto obs = observables(p, 2.0);
    CHECK(obs.mean_n == doctest::Approx(1.0));
    CHECK(obs.mean_x == doctest::Approx(0.5));
    CHECK(obs.var_n == doctest::Approx(0.5));

    const auto clamped = make_distribution<double>(Eigen::Vector3d(1.0, -1e-14, 1.0));
    CHECK(clamped.probs[1] == 0.0);
    CHECK(clamped.clamped == doctest::Approx(0.5e-14));
    CHECK_THROWS_AS(make_distribution<double>(Eigen::Vector2d(0.0, -1.0)), SingularSystem);

    CHECK(correlation_length(std::complex<double>(0.25, 3.0)) == 4.0);
    CHECK(correlation_length(2.0) == 0.5);
    CHECK_THROWS_AS(correlation_length(0.0), InvalidArgument);
    CHECK_THROWS_AS(correlation_length(-1.0), InvalidArgument);

    const auto summary = analyze(build_generator<double>(Model::TwoAtom, 200, params(50.0, 0.0, 5.0, 0.1)), 50.0);
    CHECK(summary.mean_x == doctest::Approx(summary.mean_n / 50.0));
    CHECK(summary.corr_length == doctest::Approx(1.0 / summary.lambda1.real()));
    CHECK(summary.residual < 1e-8);
}
