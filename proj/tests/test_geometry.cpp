#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "koch/geometry.hpp"
#include "koch/osculation.hpp"
#include "koch/spatial_index.hpp"
#include "oracles.hpp"

using namespace koch;
using Catch::Approx;

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
}

TEST_CASE("apply_similitude matches hand-composed transforms") {
    CHECK(Similitude::scaling(1.0 / 3.0)({1.0, 0.0}).x == Approx(1.0 / 3.0).margin(1e-15));
    CHECK(Similitude::scaling(1.0 / 3.0)({1.0, 0.0}).y == Approx(0.0).margin(1e-15));

    Vec2 rot = Similitude::rotationOf(kPi / 2.0)({1.0, 0.0});
    CHECK(rot.x == Approx(0.0).margin(1e-15));
    CHECK(rot.y == Approx(1.0).margin(1e-15));

    // psi_1 for (3, 1/3) = T_(1/3,0) o R_(pi/3) o S_(1/3) on (1,0)
    SelfSimilarSystem sys = koch_ifs(KochParams(3, 1.0 / 3.0));
    Vec2 p = sys.maps[2]({1.0, 0.0});
    CHECK(p.x == Approx(0.5).margin(1e-14));
    CHECK(p.y == Approx(kSqrt3 / 6.0).margin(1e-14));
}

TEST_CASE("similitudes preserve distance ratios") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> us(0.05, 2.5);
    for (int it = 0; it < 500; ++it) {
        Similitude f{us(rng), u(rng), (it % 3) == 0, {u(rng), u(rng)}};
        Vec2 p{u(rng), u(rng)}, q{u(rng), u(rng)};
        double lhs = dist(f(p), f(q));
        double rhs = f.scale * dist(p, q);
        CHECK(lhs == Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("compose is function composition") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> us(0.1, 2.0);
    for (int it = 0; it < 200; ++it) {
        Similitude a{us(rng), u(rng), (it & 1) != 0, {u(rng), u(rng)}};
        Similitude b{us(rng), u(rng), (it & 2) != 0, {u(rng), u(rng)}};
        Similitude ab = compose(a, b);
        Vec2 p{u(rng), u(rng)};
        Vec2 lhs = ab(p);
        Vec2 rhs = a(b(p));
        CHECK(dist(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("koch_ifs ratio multisets") {
    SECTION("(3,1/3): 4 maps, all ratio 1/3") {
        SelfSimilarSystem sys = koch_ifs(KochParams(3, 1.0 / 3.0));
        REQUIRE(sys.maps.size() == 4);
        for (const auto& m : sys.maps) CHECK(m.scale == Approx(1.0 / 3.0).margin(1e-15));
    }
    SECTION("(4,1/4): two of 3/8, three of 1/4") {
        SelfSimilarSystem sys = koch_ifs(KochParams(4, 0.25));
        REQUIRE(sys.maps.size() == 5);
        CHECK(sys.maps[0].scale == Approx(3.0 / 8.0).margin(1e-15));
        CHECK(sys.maps[1].scale == Approx(3.0 / 8.0).margin(1e-15));
        for (std::size_t k = 2; k < 5; ++k)
            CHECK(sys.maps[k].scale == Approx(0.25).margin(1e-15));
    }
    SECTION("(5,1/5): two of 2/5, four of 1/5") {
        SelfSimilarSystem sys = koch_ifs(KochParams(5, 0.2));
        REQUIRE(sys.maps.size() == 6);
        CHECK(sys.maps[0].scale == Approx(0.4).margin(1e-15));
        CHECK(sys.maps[1].scale == Approx(0.4).margin(1e-15));
        for (std::size_t k = 2; k < 6; ++k)
            CHECK(sys.maps[k].scale == Approx(0.2).margin(1e-15));
    }
}

TEST_CASE("prefractal curve levels") {
    KochParams p(3, 1.0 / 3.0);
    SECTION("level 0 is the unit segment") {
        Polyline c = prefractal_curve(p, 0);
        REQUIRE(c.vertices.size() == 2);
        CHECK(c.vertices[0].x == 0.0);
        CHECK(c.vertices[1].x == 1.0);
    }
    SECTION("level 1 vertices") {
        Polyline c = prefractal_curve(p, 1);
        REQUIRE(c.vertices.size() == 5);
        const double expect[5][2] = {{0, 0},
                                     {1.0 / 3.0, 0},
                                     {0.5, kSqrt3 / 6.0},
                                     {2.0 / 3.0, 0},
                                     {1, 0}};
        for (int i = 0; i < 5; ++i) {
            CHECK(c.vertices[i].x == Approx(expect[i][0]).margin(1e-14));
            CHECK(c.vertices[i].y == Approx(expect[i][1]).margin(1e-14));
        }
    }
    SECTION("segment count (n+1)^m and endpoints") {
        Polyline c = prefractal_curve(p, 3);
        CHECK(c.segment_count() == 64);
        CHECK(dist(c.vertices.front(), {0.0, 0.0}) < 1e-12);
        CHECK(dist(c.vertices.back(), {1.0, 0.0}) < 1e-12);
        Polyline c5 = prefractal_curve(KochParams(5, 0.15), 2);
        CHECK(c5.segment_count() == 36);
    }
    SECTION("refinement consistency: coarse vertices persist") {
        Polyline c2 = prefractal_curve(p, 2);
        Polyline c3 = prefractal_curve(p, 3);
        for (std::size_t i = 0; i < c2.vertices.size(); ++i)
            CHECK(dist(c2.vertices[i], c3.vertices[i * 4]) < 1e-12);
    }
    SECTION("level cap") {
        CHECK_THROWS_AS(prefractal_curve(p, 17), Error);
        CHECK_THROWS_AS(prefractal_curve(p, -1), Error);
    }
}

TEST_CASE("snowflake assembly") {
    SECTION("(3,1/3) level 0 is the unit triangle") {
        Polygon tri = snowflake(KochParams(3, 1.0 / 3.0), 0);
        CHECK(tri.segment_count() == 3);
        CHECK(polygon_area(tri) == Approx(kSqrt3 / 4.0).margin(1e-12));
    }
    SECTION("closure: first equals last") {
        for (int n : {3, 4, 5}) {
            Polygon poly = snowflake(KochParams(n, 1.0 / (n + 1.0)), 2);
            CHECK(dist(poly.vertices.front(), poly.vertices.back()) < 1e-12);
        }
    }
    SECTION("(4,1/4) level 1 has 20 segments") {
        Polygon poly = snowflake(KochParams(4, 0.25), 1);
        CHECK(poly.segment_count() == 20);
    }
    SECTION("self-avoiding parameters give simple polygons") {
        Polygon p3 = snowflake(KochParams(3, 1.0 / 3.0), 6);
        CHECK_FALSE(oracle::has_self_intersection(p3.vertices, true));
        Polygon p4 = snowflake(KochParams(4, 0.25), 4);
        CHECK_FALSE(oracle::has_self_intersection(p4.vertices, true));
        Polygon p5 = snowflake(KochParams(5, 0.2), 3);
        CHECK_FALSE(oracle::has_self_intersection(p5.vertices, true));
    }
}

TEST_CASE("self-avoidance thresholds") {
    SelfAvoidance a = is_self_avoiding(KochParams(3, 1.0 / 3.0));
    CHECK(a.passes);
    CHECK(a.threshold == Approx(0.5).margin(1e-15));

    SelfAvoidance b = is_self_avoiding(KochParams(6, 0.3));
    CHECK_FALSE(b.passes);

    SelfAvoidance c = is_self_avoiding(KochParams(6, 0.1));
    CHECK(c.passes);
    CHECK(c.threshold == Approx(1.0 / 7.0).margin(1e-15));
}

TEST_CASE("distance to polyline") {
    Polyline seg;
    seg.vertices = {{0.0, 0.0}, {1.0, 0.0}};
    SpatialIndex idx(seg.vertices, 0.25);
    CHECK(distance_to_polyline({0.0, 0.0}, seg, idx) == 0.0);
    CHECK(distance_to_polyline({0.5, 0.1}, seg, idx) == Approx(0.1).margin(1e-15));

    SECTION("index equals brute force bit for bit") {
        Polyline curve = prefractal_curve(KochParams(4, 0.22), 5);
        SpatialIndex index(curve.vertices, 0.01);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ux(-0.3, 1.3), uy(-0.6, 0.9);
        for (int i = 0; i < 10000; ++i) {
            Vec2 p{ux(rng), uy(rng)};
            double di = index.distance(p);
            double db = oracle::brute_distance(p, curve.vertices);
            CHECK(di == db);
        }
    }
    SECTION("empty polyline is an error") {
        Polyline empty;
        CHECK_THROWS_AS(SpatialIndex(empty.vertices, 0.1), Error);
    }
    SECTION("distance cutoff verdicts stay exact") {
        Polyline curve = prefractal_curve(KochParams(3, 1.0 / 3.0), 4);
        SpatialIndex index(curve.vertices, 0.02);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> ux(-0.2, 1.2), uy(-0.4, 0.6);
        for (int i = 0; i < 5000; ++i) {
            Vec2 p{ux(rng), uy(rng)};
            double db = oracle::brute_distance(p, curve.vertices);
            CHECK(index.within(p, 0.05) == (db < 0.05));
        }
    }
}

TEST_CASE("point in polygon") {
    Polygon tri = snowflake(KochParams(3, 1.0 / 3.0), 0);
    CHECK(point_in_polygon({0.0, -0.2}, tri));  // near the centroid region
    Polygon snow = snowflake(KochParams(3, 1.0 / 3.0), 4);
    CHECK_FALSE(point_in_polygon({10.0, 10.0}, snow));
    CHECK(point_in_polygon({0.0, 0.0}, snow));

    SECTION("agrees with the winding-number oracle away from the boundary") {
        SpatialIndex idx(snow.vertices, 0.02);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-0.8, 0.8);
        int tested = 0;
        for (int i = 0; i < 10000; ++i) {
            Vec2 p{u(rng), u(rng)};
            if (idx.distance(p) < 1e-9) continue;  // boundary band undefined
            ++tested;
            CHECK(point_in_polygon(p, snow) == oracle::winding_inside(p, snow));
        }
        CHECK(tested > 9000);
    }
}

TEST_CASE("osculation identity on prefractals") {
    SECTION("zero samples passes trivially") {
        OsculationReport rep = osculation_check(KochParams(3, 1.0 / 3.0), 3, 0, 1);
        CHECK(rep.passes);
        CHECK(rep.max_violation == 0.0);
    }
    SECTION("(3,1/3) level 5") {
        OsculationReport rep = osculation_check(KochParams(3, 1.0 / 3.0), 5, 2000, 42);
        CHECK(rep.passes);
        CHECK(rep.max_violation <= 1e-9);
    }
    SECTION("(4,1/4) level 4") {
        OsculationReport rep = osculation_check(KochParams(4, 0.25), 4, 1000, 9);
        CHECK(rep.passes);
    }
    SECTION("pinned point in the left image") {
        KochParams p(3, 1.0 / 3.0);
        SelfSimilarSystem sys = koch_ifs(p);
        Polyline base = prefractal_curve(p, 6);
        Polyline whole = prefractal_curve(p, 7);
        Polyline left;
        for (const Vec2& v : base.vertices) left.vertices.push_back(sys.maps[0](v));
        Vec2 y{0.1, 0.01};
        double dWhole = oracle::brute_distance(y, whole.vertices);
        double dPiece = oracle::brute_distance(y, left.vertices);
        CHECK(dPiece == Approx(dWhole).margin(1e-12));
    }
    SECTION("non-self-avoiding parameters are rejected") {
        CHECK_THROWS_AS(osculation_check(KochParams(6, 0.3), 3, 10, 1), Error);
    }
}
