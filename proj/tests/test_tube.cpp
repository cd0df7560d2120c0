#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "koch/tube.hpp"
#include "oracles.hpp"

using namespace koch;
using Catch::Approx;

namespace {
constexpr double kSqrt3 = 1.7320508075688772;

Polygon unit_square() {
    Polygon p;
    p.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}};
    return p;
}

TubeTable synthetic_power_table(double expo, double lo, double hi, int count,
                                double err = 0.0) {
    GridSpec spec{lo, hi, count};
    std::vector<TubeSample> s;
    for (double t : spec.points()) s.push_back({t, std::pow(t, expo), err});
    return TubeTable(std::move(s), spec);
}
}  // namespace

TEST_CASE("polygon_inner_tube_exact") {
    Polygon tri = snowflake(KochParams(3, 1.0 / 3.0), 0);
    SECTION("eps 0 gives 0") { CHECK(polygon_inner_tube_exact(tri, 0.0) == 0.0); }
    SECTION("unit square at 0.1") {
        CHECK(polygon_inner_tube_exact(unit_square(), 0.1) == Approx(0.36).margin(1e-14));
    }
    SECTION("triangle at inradius covers the full area") {
        double inr = kSqrt3 / 6.0;
        CHECK(polygon_inner_tube_exact(tri, inr) ==
              Approx(kSqrt3 / 4.0).margin(1e-12));
    }
    SECTION("eps beyond the inradius is rejected") {
        CHECK_THROWS_AS(polygon_inner_tube_exact(tri, 0.5), Error);
    }
    SECTION("non-convex polygons are rejected") {
        Polygon snow = snowflake(KochParams(3, 1.0 / 3.0), 1);
        CHECK_THROWS_AS(polygon_inner_tube_exact(snow, 0.01), Error);
    }
}

TEST_CASE("tube_volume on the unit triangle matches the erosion formula") {
    RelativeFractalDrum drum =
        RelativeFractalDrum::from_polygon(snowflake(KochParams(3, 1.0 / 3.0), 0));
    EstimatorConfig cfg;
    cfg.resolution = 1e-3;
    SECTION("eps = 0 gives 0") {
        CHECK(tube_volume(drum, 0.0, cfg).volume == 0.0);
    }
    SECTION("negative eps is an error") {
        CHECK_THROWS_AS(tube_volume(drum, -1.0, cfg), Error);
    }
    SECTION("eps = 0.1 against 3 eps - 3 sqrt3 eps^2") {
        TubeSample s = tube_volume(drum, 0.1, cfg);
        double exact = 3.0 * 0.1 - 3.0 * kSqrt3 * 0.01;
        CHECK(s.volume == Approx(exact).epsilon(2e-3));
        CHECK(std::abs(s.volume - exact) <= s.err);
    }
    SECTION("grid and exact agree across the eps range") {
        for (double eps : {0.02, 0.05, 0.13, 0.2}) {
            TubeSample s = tube_volume(drum, eps, cfg);
            double exact = polygon_inner_tube_exact(
                snowflake(KochParams(3, 1.0 / 3.0), 0), eps);
            CHECK(std::abs(s.volume - exact) <= s.err);
            CHECK(s.volume == Approx(exact).epsilon(0.01));
        }
    }
}

TEST_CASE("tube_volume saturates at the region area") {
    KochParams p(3, 1.0 / 3.0);
    RelativeFractalDrum drum = RelativeFractalDrum::koch_snowflake(p);
    EstimatorConfig cfg;
    cfg.resolution = 2e-3;
    TubeSample s = tube_volume(drum, 1.5, cfg);  // beyond the diameter
    double limitArea = oracle::snowflake_area_series(p);
    CHECK(limitArea == Approx(2.0 * kSqrt3 / 5.0).margin(1e-12));
    CHECK(std::abs(s.volume - limitArea) <= s.err);
    int lvl = drum.level_for(1.5, cfg.policy_factor);
    CHECK(s.volume <= drum.area(lvl) + s.err);
}

TEST_CASE("grid and Monte Carlo estimators agree within combined bounds") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ueps(0.05, 0.3);
    for (int it = 0; it < 10; ++it) {
        int n = 3 + (it % 3);
        double r = 0.9 / (n + 1) + 0.02 * (it % 2);
        double eps = ueps(rng);
        RelativeFractalDrum drum = RelativeFractalDrum::koch_snowflake(KochParams(n, r));
        EstimatorConfig gridCfg;
        gridCfg.resolution = 2e-3;
        gridCfg.policy_factor = 0.1;  // both estimators share the boundary anyway
        EstimatorConfig mcCfg;
        mcCfg.method = EstimatorConfig::Method::montecarlo;
        mcCfg.mc_samples = 60000;
        mcCfg.policy_factor = 0.1;
        mcCfg.seed = 1000 + static_cast<unsigned long>(it);
        TubeSample a = tube_volume(drum, eps, gridCfg);
        TubeSample b = tube_volume(drum, eps, mcCfg);
        CHECK(std::abs(a.volume - b.volume) <= a.err + b.err);
    }
}

TEST_CASE("scaling property of tube volumes") {
    // lambda-scaled drum: V_scaled(eps) = lambda^2 V(eps/lambda)
    KochParams p(3, 1.0 / 3.0);
    Polygon base = snowflake(p, 4);
    EstimatorConfig cfg;
    cfg.resolution = 1.5e-3;
    for (double lambda : {0.5, 2.0}) {
        Polygon scaled;
        for (const Vec2& v : base.vertices) scaled.vertices.push_back(v * lambda);
        RelativeFractalDrum d0 = RelativeFractalDrum::from_polygon(base);
        RelativeFractalDrum d1 = RelativeFractalDrum::from_polygon(scaled);
        double eps = 0.08;
        TubeSample a = tube_volume(d1, eps, cfg);
        TubeSample b = tube_volume(d0, eps / lambda, cfg);
        CHECK(std::abs(a.volume - lambda * lambda * b.volume) <=
              a.err + lambda * lambda * b.err);
    }
}

TEST_CASE("tube_table") {
    RelativeFractalDrum drum =
        RelativeFractalDrum::from_polygon(snowflake(KochParams(3, 1.0 / 3.0), 0));
    EstimatorConfig cfg;
    cfg.resolution = 2e-3;
    SECTION("count 1 gives a single sample") {
        TubeTable t = tube_table(drum, {0.05, 0.2, 1}, cfg);
        CHECK(t.size() == 1);
        CHECK(t.samples()[0].eps == Approx(0.05));
    }
    SECTION("volumes are monotone within error bands") {
        TubeTable t = tube_table(drum, {0.01, 0.25, 16}, cfg);
        CHECK(t.monotonicity_violations().empty());
    }
    SECTION("eps_min must be positive") {
        CHECK_THROWS_AS(tube_table(drum, {0.0, 0.1, 4}, cfg), Error);
    }
    SECTION("doubling resolution shrinks the error estimate") {
        EstimatorConfig fine = cfg;
        fine.resolution = 1e-3;
        TubeSample coarse = tube_volume(drum, 0.07, cfg);
        TubeSample fineS = tube_volume(drum, 0.07, fine);
        CHECK(coarse.err / fineS.err >= 1.5);
        CHECK(std::abs(coarse.volume - fineS.volume) <= coarse.err + fineS.err);
    }
    SECTION("half-resolution self-consistency on the snowflake") {
        RelativeFractalDrum snow = RelativeFractalDrum::koch_snowflake(KochParams(3, 1.0 / 3.0));
        EstimatorConfig c1;
        c1.resolution = 4e-3;
        EstimatorConfig c2;
        c2.resolution = 2e-3;
        TubeTable t1 = tube_table(snow, {0.02, 0.4, 8}, c1);
        TubeTable t2 = tube_table(snow, {0.02, 0.4, 8}, c2);
        for (std::size_t i = 0; i < t1.size(); ++i)
            CHECK(std::abs(t1.samples()[i].volume - t2.samples()[i].volume) <=
                  t1.samples()[i].err + t2.samples()[i].err);
    }
}

TEST_CASE("deterministic across thread counts") {
    RelativeFractalDrum drum = RelativeFractalDrum::koch_snowflake(KochParams(3, 1.0 / 3.0));
    EstimatorConfig c1;
    c1.resolution = 1e-3;
    c1.threads = 1;
    EstimatorConfig c4 = c1;
    c4.threads = 4;
    TubeSample a = tube_volume(drum, 0.05, c1);
    TubeSample b = tube_volume(drum, 0.05, c4);
    CHECK(a.volume == b.volume);
    CHECK(a.err == b.err);
}

TEST_CASE("antiderivative") {
    SECTION("k = 0 is the identity") {
        TubeTable t = synthetic_power_table(2.0, 1e-3, 1.0, 64);
        TubeTable a = antiderivative(t, 0, 2.0);
        CHECK(a.samples()[10].volume == t.samples()[10].volume);
    }
    SECTION("negative k is an error") {
        TubeTable t = synthetic_power_table(2.0, 1e-3, 1.0, 8);
        CHECK_THROWS_AS(antiderivative(t, -1, 2.0), Error);
    }
    SECTION("t^2 integrates to t^3/3 within 0.1% on a 256-point log grid") {
        TubeTable t = synthetic_power_table(2.0, 1e-3, 1.0, 256);
        TubeTable a = antiderivative(t, 1, 2.0);
        for (const auto& s : a.samples()) {
            if (s.eps < 0.09) continue;
            CHECK(s.volume == Approx(std::pow(s.eps, 3.0) / 3.0).epsilon(1e-3));
        }
        // and a second pass: t^4/12
        TubeTable a2 = antiderivative(t, 2, 2.0);
        double t1 = a2.samples().back().eps;
        CHECK(a2.samples().back().volume == Approx(std::pow(t1, 4.0) / 12.0).epsilon(2e-3));
    }
    SECTION("V^[2](0) = 0 extends continuously: values vanish as t -> 0") {
        TubeTable t = synthetic_power_table(0.74, 1e-4, 1.0, 128);
        TubeTable a = antiderivative(t, 2, 0.74);
        CHECK(a.samples().front().volume ==
              Approx(std::pow(1e-4, 2.74) / (1.74 * 2.74)).epsilon(1e-6));
        CHECK(a.samples().front().volume < 1e-10);
    }
}

TEST_CASE("level policy") {
    RelativeFractalDrum drum = RelativeFractalDrum::koch_snowflake(KochParams(3, 1.0 / 3.0));
    CHECK(drum.level_for(3e-3, 0.01) == 10);
    CHECK(drum.level_for(1e-9, 0.01) == 16);  // capped
    CHECK(drum.level_for(200.0, 0.01) == 0);
    CHECK(drum.level_for(3e-3, 0.01, 100000) == 8);  // segment budget binds
    // nearest boundary point to the center is (1/3, 0) in edge coordinates:
    // the midpoint of each side is removed by the first bump, so the
    // inradius is sqrt(apothem^2 + 1/36) = 1/3 exactly for (3, 1/3)
    CHECK(drum.inradius() == Approx(1.0 / 3.0).epsilon(0.01));
}
