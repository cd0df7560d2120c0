#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "koch/common.hpp"
#include "koch/rational.hpp"

namespace koch {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

/// Plane similitude p -> scale * R(rotation) * M * p + translation, where M
/// reflects across the x-axis when `reflect` is set. Composition order on
/// application: scale, then rotate/reflect, then translate.
struct Similitude {
    double scale = 1.0;
    double rotation = 0.0;
    bool reflect = false;
    Vec2 translation{0.0, 0.0};

    Vec2 operator()(Vec2 p) const {
        double px = scale * p.x;
        double py = scale * (reflect ? -p.y : p.y);
        double c = std::cos(rotation), s = std::sin(rotation);
        return {c * px - s * py + translation.x, s * px + c * py + translation.y};
    }

    static Similitude scaling(double lambda) { return {lambda, 0.0, false, {0.0, 0.0}}; }
    static Similitude rotationOf(double theta) { return {1.0, theta, false, {0.0, 0.0}}; }
    static Similitude translationOf(Vec2 t) { return {1.0, 0.0, false, t}; }
};

inline Vec2 apply_similitude(const Similitude& map, Vec2 p) { return map(p); }

/// Function composition a after b: compose(a, b)(p) == a(b(p)).
inline Similitude compose(const Similitude& a, const Similitude& b) {
    Similitude r;
    r.scale = a.scale * b.scale;
    r.reflect = a.reflect != b.reflect;
    r.rotation = a.reflect ? a.rotation - b.rotation : a.rotation + b.rotation;
    r.translation = a(b.translation);
    return r;
}

/// Parameters of the (n, r) von Koch family: n-gon side count, middle scaling
/// ratio r, conjugate ratio ell = (1-r)/2, central angle theta_n = 2*pi/n and
/// interior angle alpha_n = pi - 2*pi/n.
struct KochParams {
    int n = 3;
    double r = 1.0 / 3.0;
    double ell = 1.0 / 3.0;
    double theta_n = 2.0 * kPi / 3.0;
    double alpha_n = kPi / 3.0;
    /// Exact form of r when supplied as a fraction; keeps lattice detection exact.
    std::optional<Rational> r_exact;

    KochParams() = default;
    KochParams(int n_, double r_, std::optional<Rational> exact = std::nullopt)
        : n(n_), r(r_), r_exact(exact) {
        if (n < 3) throw Error("KochParams: n must be at least 3");
        if (!(r > 0.0 && r < 1.0)) throw Error("KochParams: r must lie in (0,1)");
        if (exact) {
            if (!(exact->num > 0 && exact->num < exact->den))
                throw Error("KochParams: exact r must lie in (0,1)");
            r = exact->value();
        }
        ell = (1.0 - r) / 2.0;
        theta_n = 2.0 * kPi / n;
        alpha_n = kPi - theta_n;
    }

    /// Exact ell = (den-num)/(2 den) when r is exact.
    std::optional<Rational> ell_exact() const {
        if (!r_exact) return std::nullopt;
        return Rational(r_exact->den - r_exact->num, 2 * r_exact->den);
    }
};

/// Ordered similitude list phi_L, phi_R, psi_1..psi_{n-1} plus the ratio
/// multiset {(multiplicity, ratio)}.
struct SelfSimilarSystem {
    std::vector<Similitude> maps;
    std::vector<std::pair<int, double>> ratios;

    /// Indices of `maps` in traversal order along the curve from (0,0) to (1,0):
    /// phi_L, psi_1, ..., psi_{n-1}, phi_R.
    std::vector<std::size_t> curve_order() const {
        std::vector<std::size_t> order;
        order.reserve(maps.size());
        order.push_back(0);
        for (std::size_t k = 2; k < maps.size(); ++k) order.push_back(k);
        order.push_back(1);
        return order;
    }
};

/// The (n, r) von Koch IFS: phi_L = S_ell, phi_R = T_(ell+r,0) o S_ell,
/// psi_1 = T_(ell,0) o R_alpha o S_r, psi_k = T_(psi_{k-1}(1,0)) o
/// R_(alpha-(k-1)theta) o S_r, composed right map first.
inline SelfSimilarSystem koch_ifs(const KochParams& p) {
    SelfSimilarSystem sys;
    sys.maps.reserve(static_cast<std::size_t>(p.n) + 1);
    sys.maps.push_back(Similitude::scaling(p.ell));
    sys.maps.push_back(compose(Similitude::translationOf({p.ell + p.r, 0.0}),
                               Similitude::scaling(p.ell)));
    Similitude psi = compose(Similitude::translationOf({p.ell, 0.0}),
                             compose(Similitude::rotationOf(p.alpha_n),
                                     Similitude::scaling(p.r)));
    sys.maps.push_back(psi);
    for (int k = 2; k <= p.n - 1; ++k) {
        Vec2 t = psi({1.0, 0.0});
        psi = compose(Similitude::translationOf(t),
                      compose(Similitude::rotationOf(p.alpha_n - (k - 1) * p.theta_n),
                              Similitude::scaling(p.r)));
        sys.maps.push_back(psi);
    }
    sys.ratios = {{2, p.ell}, {p.n - 1, p.r}};
    return sys;
}

/// Open chain of vertices; consecutive vertices distinct.
struct Polyline {
    std::vector<Vec2> vertices;

    std::size_t segment_count() const {
        return vertices.size() < 2 ? 0 : vertices.size() - 1;
    }
};

/// Closed chain: first vertex repeated as the last one.
struct Polygon {
    std::vector<Vec2> vertices;

    std::size_t segment_count() const {
        return vertices.size() < 2 ? 0 : vertices.size() - 1;
    }
};

inline constexpr int kDefaultLevelCap = 16;

/// Level-m prefractal of the (n, r) curve on [0,1]: level 0 is the unit
/// segment, level m+1 concatenates the n+1 images of level m in curve order.
inline Polyline prefractal_curve(const KochParams& p, int level,
                                 int level_cap = kDefaultLevelCap) {
    if (level < 0) throw Error("prefractal_curve: level must be nonnegative");
    if (level > level_cap)
        throw Error("prefractal_curve: level " + std::to_string(level) +
                    " exceeds cap " + std::to_string(level_cap));
    SelfSimilarSystem sys = koch_ifs(p);
    auto order = sys.curve_order();
    Polyline cur;
    cur.vertices = {{0.0, 0.0}, {1.0, 0.0}};
    for (int m = 0; m < level; ++m) {
        Polyline next;
        next.vertices.reserve(cur.segment_count() * (p.n + 1) + 1);
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const Similitude& f = sys.maps[order[oi]];
            std::size_t start = oi == 0 ? 0 : 1;  // shared joint vertex
            for (std::size_t v = start; v < cur.vertices.size(); ++v)
                next.vertices.push_back(f(cur.vertices[v]));
        }
        cur = std::move(next);
    }
    return cur;
}

/// Vertices of the regular unit-side n-gon traversed clockwise, so that a
/// curve whose bump points to the left of travel bulges outward. First edge
/// is the bottom one.
inline std::vector<Vec2> ngon_vertices_clockwise(int n) {
    double rho = 1.0 / (2.0 * std::sin(kPi / n));
    std::vector<Vec2> v(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double ang = -kPi / 2.0 + kPi / n - k * (2.0 * kPi / n);
        v[static_cast<std::size_t>(k)] = {rho * std::cos(ang), rho * std::sin(ang)};
    }
    return v;
}

/// The (n, r) snowflake at prefractal level m: n isometric copies of the
/// curve placed on the edges of the regular unit n-gon, bulges outward,
/// closed into a simple polygon. Throws if the assembly fails to close.
inline Polygon snowflake(const KochParams& p, int level,
                         int level_cap = kDefaultLevelCap) {
    Polyline curve = prefractal_curve(p, level, level_cap);
    std::vector<Vec2> corners = ngon_vertices_clockwise(p.n);
    Polygon poly;
    poly.vertices.reserve(p.n * curve.segment_count() + 1);
    for (int k = 0; k < p.n; ++k) {
        Vec2 a = corners[static_cast<std::size_t>(k)];
        Vec2 b = corners[static_cast<std::size_t>((k + 1) % p.n)];
        Vec2 d = b - a;
        Similitude place{norm(d), std::atan2(d.y, d.x), false, a};
        Vec2 mappedEnd = place(curve.vertices.back());
        if (dist(mappedEnd, b) > 1e-9)
            throw Error("snowflake: edge copy failed to land on the next corner");
        for (std::size_t v = 0; v + 1 < curve.vertices.size(); ++v)
            poly.vertices.push_back(v == 0 ? a : place(curve.vertices[v]));
    }
    poly.vertices.push_back(poly.vertices.front());
    if (dist(poly.vertices.front(), poly.vertices.back()) > 1e-12)
        throw Error("snowflake: polygon failed to close");
    return poly;
}

struct SelfAvoidance {
    bool passes = false;
    /// Sufficient-only bound from the self-avoidance criterion; curves with
    /// r above it may or may not self-intersect.
    double threshold = 0.0;
};

/// r < sin^2(pi/n)/(cos^2(pi/n)+1) for even n, r < 1-cos(pi/n) for odd n.
inline SelfAvoidance is_self_avoiding(const KochParams& p) {
    double t;
    if (p.n % 2 == 0) {
        double s = std::sin(kPi / p.n), c = std::cos(kPi / p.n);
        t = s * s / (c * c + 1.0);
    } else {
        t = 1.0 - std::cos(kPi / p.n);
    }
    return {p.r < t, t};
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 d = b - a;
    double len2 = dot(d, d);
    if (len2 == 0.0) return dist(p, a);
    double t = dot(p - a, d) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, a + d * t);
}

/// Even-odd crossing rule. Points within ~1e-12 of the boundary may land on
/// either side.
inline bool point_in_polygon(Vec2 p, const Polygon& poly) {
    bool inside = false;
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        Vec2 a = v[i], b = v[i + 1];
        if ((a.y > p.y) != (b.y > p.y)) {
            double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

/// Signed shoelace area (negative for clockwise orientation).
inline double polygon_signed_area(const Polygon& poly) {
    double a = 0.0;
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) a += cross(v[i], v[i + 1]);
    return 0.5 * a;
}

inline double polygon_area(const Polygon& poly) {
    return std::abs(polygon_signed_area(poly));
}

struct BBox {
    Vec2 lo{0.0, 0.0};
    Vec2 hi{0.0, 0.0};
};

inline BBox bounding_box(const std::vector<Vec2>& pts) {
    if (pts.empty()) throw Error("bounding_box: empty point set");
    BBox b{pts[0], pts[0]};
    for (const Vec2& p : pts) {
        b.lo.x = std::min(b.lo.x, p.x);
        b.lo.y = std::min(b.lo.y, p.y);
        b.hi.x = std::max(b.hi.x, p.x);
        b.hi.y = std::max(b.hi.y, p.y);
    }
    return b;
}

/// Proper-crossing test for open segments (shared endpoints do not count).
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    double d1 = cross(b - a, c - a);
    double d2 = cross(b - a, d - a);
    double d3 = cross(d - c, a - c);
    double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/// The canonical sector region U in curve coordinates: bounded by the two
/// n-gon radii from the center C = (1/2, -apothem) to the curve endpoints and
/// by the level-m prefractal itself.
inline Polygon sector_region(const KochParams& p, int level,
                             int level_cap = kDefaultLevelCap) {
    Polyline curve = prefractal_curve(p, level, level_cap);
    double apothem = 1.0 / (2.0 * std::tan(kPi / p.n));
    Polygon poly;
    poly.vertices.reserve(curve.vertices.size() + 2);
    poly.vertices.push_back({0.5, -apothem});
    for (const Vec2& v : curve.vertices) poly.vertices.push_back(v);
    poly.vertices.push_back({0.5, -apothem});
    return poly;
}

}  // namespace koch
