// Independent oracles used by the test suites. These deliberately avoid the
// library's optimized paths: brute-force scans, winding-number membership,
// bisection-only root solving, geometric series.
#pragma once

#include <vector>

#include "koch/geometry.hpp"
#include "koch/sfe.hpp"

namespace oracle {

inline double brute_distance(koch::Vec2 p, const std::vector<koch::Vec2>& verts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < verts.size(); ++i)
        best = std::min(best, koch::point_segment_distance(p, verts[i], verts[i + 1]));
    return best;
}

/// Winding-number membership (nonzero rule; equals even-odd for simple polygons).
inline bool winding_inside(koch::Vec2 p, const koch::Polygon& poly) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < poly.vertices.size(); ++i) {
        koch::Vec2 a = poly.vertices[i] - p;
        koch::Vec2 b = poly.vertices[i + 1] - p;
        total += std::atan2(koch::cross(a, b), koch::dot(a, b));
    }
    return std::abs(total) > koch::kPi;
}

/// Bisection-only Moran solver, independent of the Newton path.
inline double bisect_similarity_dimension(const std::vector<koch::ScalingTerm>& terms,
                                          int iters = 200) {
    auto p = [&](double s) {
        double acc = 0.0;
        for (const auto& t : terms) acc += t.multiplicity * std::pow(t.ratio, s);
        return acc;
    };
    double lo = -64.0, hi = 64.0;
    for (int i = 0; i < iters; ++i) {
        double mid = 0.5 * (lo + hi);
        (p(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Limit area of the (n, r) snowflake interior: n-gon area plus the bump
/// series with squared-length recursion S_{k+1} = (2 ell^2 + (n-1) r^2) S_k.
inline double snowflake_area_series(const koch::KochParams& p) {
    double ngonArea = p.n / (4.0 * std::tan(koch::kPi / p.n));
    double q = 2.0 * p.ell * p.ell + (p.n - 1) * p.r * p.r;
    // sum_k r^2 * A_ngon * S_k with S_0 = n
    return ngonArea * (1.0 + p.r * p.r * p.n / (1.0 - q));
}

/// O(m^2) self-intersection scan over non-adjacent segments.
inline bool has_self_intersection(const std::vector<koch::Vec2>& verts, bool closed) {
    std::size_t m = verts.size() - 1;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = i + 2; j < m; ++j) {
            if (closed && i == 0 && j == m - 1) continue;  // shared wrap vertex
            if (koch::segments_intersect(verts[i], verts[i + 1], verts[j], verts[j + 1]))
                return true;
        }
    }
    return false;
}

}  // namespace oracle
