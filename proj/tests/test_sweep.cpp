#include "micromaser/sweep.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace micromaser;

namespace {

bool has_marker_near(const std::vector<Marker>& markers, double theta, double tol) {
    for (const auto& m : markers)
        if (std::abs(m.theta - theta) < tol) return true;
    return false;
}

bool same_bits(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

SweepConfig small_config() {
    SweepConfig c;
    c.model = Model::TwoAtom;
    c.flux_n = 10.0;
    c.theta_min = 0.5;
    c.theta_max = 12.0;
    c.theta_steps = 9;
    c.n_max = 80;
    c.eps = {FixedEps{0.0}, FixedEps{0.3}};
    c.threads = 1;
    return c;
}

}  // namespace

TEST_CASE("markers") {
    SweepConfig c;
    c.flux_n = 10.0;
    c.theta_min = 0.0;
    c.theta_max = 20.0;
    const auto markers = emit_markers(c);
    CHECK(has_marker_near(markers, 5.74, 5e-3));
    CHECK(has_marker_near(markers, 7.02, 5e-3));
    CHECK(has_marker_near(markers, 9.93, 5e-3));
    for (std::size_t i = 1; i < markers.size(); ++i) {
        CHECK(markers[i - 1].theta < markers[i].theta);
        CHECK(markers[i].kind == "trapping");
    }
    // 2 pi sqrt(10 / 4) coincides with pi sqrt(10 / 1): one marker, k = 1
    for (const auto& m : markers)
        if (std::abs(m.theta - std::numbers::pi * std::sqrt(10.0)) < 1e-9) CHECK(m.k == 1);

    c.phase_markers = true;
    c.trapping_markers = false;
    const auto phases = emit_markers(c);
    REQUIRE(phases.size() == 4);
    CHECK(phases[0].theta == kThetaStar0);
    CHECK(phases[1].theta == 6.6610);
    CHECK(phases[2].theta == 12.035);
    CHECK(phases[3].theta == 17.413);

    c.theta_min = 2.0;
    c.theta_max = 2.5;
    CHECK(emit_markers(c).empty());
}

TEST_CASE("theta grid") {
    SweepConfig c;
    c.theta_min = 0.0;
    c.theta_max = 20.0;
    c.theta_steps = 2000;
    const auto grid = theta_grid(c);
    REQUIRE(grid.size() == 2000);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 20.0);

    c.theta_steps = 201;
    c.flux_n = 10.0;
    c.refine_markers = true;
    const auto fine = theta_grid(c);
    CHECK(fine.size() > 201);
    CHECK(std::is_sorted(fine.begin(), fine.end()));
    // density near a marker tripled
    const double marker = std::numbers::pi * std::sqrt(10.0 / 2.0);
    long near = 0;
    for (double t : fine)
        if (std::abs(t - marker) < 0.1) ++near;
    CHECK(near >= 3 * 2 - 1);

    c.theta_steps = 1;
    c.theta_max = 0.0;
    c.refine_markers = false;
    CHECK(theta_grid(c) == std::vector<double>{0.0});
}

TEST_CASE("single point at theta = 0 is thermal") {
    SweepConfig c;
    c.n_b = 0.3;
    c.theta_min = c.theta_max = 0.0;
    c.theta_steps = 1;
    c.eps = {FixedEps{0.2}};
    const auto recs = run_sweep(c);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].flags == "ok");
    CHECK(recs[0].mean_n == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(recs[0].lambda1_re == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("coupled eps is resolved per point") {
    SweepConfig c;
    c.flux_n = 10.0;
    c.n_b = 0.054;
    c.theta_min = c.theta_max = 20.0;
    c.theta_steps = 1;
    c.eps = {CoupledEps{}};
    const auto rec = evaluate_point(c, 20.0, CoupledEps{});
    CHECK(std::abs(rec.eps - 0.016) < 5e-4);
    CHECK(rec.flags == "ok");
}

TEST_CASE("sweep records and flags") {
    const auto c = small_config();
    const auto recs = run_sweep(c);
    REQUIRE(recs.size() == 18);
    CHECK(recs[0].eps == 0.0);
    CHECK(recs[9].eps == 0.3);
    for (std::size_t i = 1; i < 9; ++i) CHECK(recs[i].theta > recs[i - 1].theta);

    SUBCASE("deterministic across thread counts") {
        auto threaded = c;
        threaded.threads = 3;
        const auto again = run_sweep(threaded);
        REQUIRE(again.size() == recs.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
            CHECK(same_bits(again[i].mean_n, recs[i].mean_n));
            CHECK(same_bits(again[i].lambda1_re, recs[i].lambda1_re));
        }
    }

    SUBCASE("sentinels exactly when flagged") {
        SweepConfig bad = small_config();
        bad.flux_n = 50.0;
        bad.n_max = 20;
        bad.theta_min = 0.5;
        bad.theta_max = 2.0;
        bad.theta_steps = 3;
        bad.eps = {FixedEps{0.1}};
        for (const auto& r : run_sweep(bad)) {
            CHECK(r.flagged());
            CHECK(r.flags == "unconverged");
            CHECK(std::isnan(r.mean_n));
            CHECK(std::isnan(r.corr_length));
            CHECK(r.tail_mass > 1e-10);
        }
        for (const auto& r : recs) {
            CHECK(!r.flagged());
            CHECK(std::isfinite(r.mean_n));
            CHECK(std::isfinite(r.corr_length));
        }

        bad.auto_nmax = true;
        bad.n_max_limit = 320;
        for (const auto& r : run_sweep(bad)) CHECK(r.flags == "ok");
    }
}

TEST_CASE("CSV round trip") {
    auto recs = run_sweep(small_config());
    SweepRecord flagged;
    flagged.theta = 1.0 / 3.0;
    flagged.mean_n = flagged.mean_x = flagged.var_n = std::numeric_limits<double>::quiet_NaN();
    flagged.lambda1_re = flagged.lambda1_im = flagged.corr_length = std::numeric_limits<double>::quiet_NaN();
    flagged.flags = "degenerate";
    recs.push_back(flagged);

    std::stringstream ss;
    write_csv(ss, recs);
    const std::string header = ss.str().substr(0, ss.str().find('\n'));
    CHECK(header == "theta,eps,mean_n,mean_x,var_n,lambda1_re,lambda1_im,corr_length,residual,tail_mass,quad_panels,flags");

    const auto back = read_csv(ss);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(same_bits(back[i].theta, recs[i].theta));
        CHECK(same_bits(back[i].eps, recs[i].eps));
        CHECK(same_bits(back[i].mean_n, recs[i].mean_n));
        CHECK(same_bits(back[i].mean_x, recs[i].mean_x));
        CHECK(same_bits(back[i].var_n, recs[i].var_n));
        CHECK(same_bits(back[i].lambda1_re, recs[i].lambda1_re));
        CHECK(same_bits(back[i].lambda1_im, recs[i].lambda1_im));
        CHECK(same_bits(back[i].corr_length, recs[i].corr_length));
        CHECK(same_bits(back[i].residual, recs[i].residual));
        CHECK(same_bits(back[i].tail_mass, recs[i].tail_mass));
        CHECK(back[i].quad_panels == recs[i].quad_panels);
        CHECK(back[i].flags == recs[i].flags);
    }

    std::istringstream broken("theta,eps\n1,2\n");
    CHECK_THROWS_AS(read_csv(broken), InvalidArgument);
    CHECK_THROWS_AS(write_csv("/nonexistent-dir/out.csv", recs), OutputUnwritable);
}

TEST_CASE("format_double") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("JSON configuration") {
    const auto doc = nlohmann::json::parse(R"({
        "description": "test",
        "model": "small-eps",
        "flux_n": 10,
        "n_b": 0.054,
        "eps": [0, 0.1, "coupled"],
        "theta_steps": 50,
        "phase_markers": true
    })");
    const auto c = config_from_json(doc);
    CHECK(c.model == Model::SmallEps);
    CHECK(c.flux_n == 10.0);
    CHECK(c.eps.size() == 3);
    CHECK(std::holds_alternative<CoupledEps>(c.eps[2]));
    CHECK(std::get<FixedEps>(c.eps[1]).value == 0.1);
    CHECK(c.phase_markers);

    const auto again = config_from_json(config_to_json(c));
    CHECK(config_to_json(again) == config_to_json(c));

    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"thetamax": 3})")), ConfigInvalid);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"flux_n": "ten"})")), ConfigInvalid);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"eps": "sometimes"})")), ConfigInvalid);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"model": "three-atom"})")), ConfigInvalid);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse("[1, 2]")), ConfigInvalid);

    SweepConfig bad;
    bad.theta_min = 5.0;
    bad.theta_max = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = {};
    bad.eps = {FixedEps{-1.0}};
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
}

TEST_CASE("figure configurations parse") {
    const std::filesystem::path dir = std::filesystem::path(MICROMASER_SOURCE_DIR) / "figures";
    for (int i = 1; i <= 5; ++i) {
        const auto path = dir / ("fig" + std::to_string(i) + ".json");
        std::ifstream is(path);
        REQUIRE(is.good());
        const auto c = config_from_json(nlohmann::json::parse(is));
        CHECK_NOTHROW(c.validate());
        if (i == 4) {
            REQUIRE(c.eps.size() == 2);
            CHECK(std::holds_alternative<CoupledEps>(c.eps[1]));
            CHECK(std::abs(c.params(20.0, c.eps[1]).eps() - 0.016) < 5e-4);
        }
    }
}
