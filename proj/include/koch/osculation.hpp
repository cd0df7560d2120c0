#pragma once

#include <random>

#include "koch/geometry.hpp"
#include "koch/spatial_index.hpp"

namespace koch {

struct OsculationReport {
    double max_violation = 0.0;
    Vec2 worst_point{0.0, 0.0};
    int worst_map = -1;
    long samples_per_map = 0;
    /// violation <= 1e-9 everywhere
    bool passes = true;
};

/// Checks the osculating property on prefractals: for points y drawn in each
/// image phi_i(U) of the sector region U, the distance to the whole level
/// (m+1) curve equals the distance to the image phi_i of the level-m curve.
/// Violations are reported as d(y, phi_i(K)) - d(y, K) >= 0.
inline OsculationReport osculation_check(const KochParams& params, int level,
                                         long samples, unsigned long seed,
                                         int level_cap = kDefaultLevelCap) {
    if (samples < 0) throw Error("osculation_check: negative sample count");
    if (!is_self_avoiding(params).passes)
        throw Error("osculation_check: requires a self-avoiding parameter pair");
    OsculationReport rep;
    rep.samples_per_map = samples;
    if (samples == 0) return rep;

    SelfSimilarSystem sys = koch_ifs(params);
    Polyline base = prefractal_curve(params, level, level_cap);
    Polygon sector = sector_region(params, level, level_cap);

    // Whole level-(m+1) curve assembled from the same mapped pieces, so the
    // piece distances and the whole-curve distance share their arithmetic.
    std::vector<Polyline> pieces(sys.maps.size());
    Polyline whole;
    whole.vertices.reserve(base.segment_count() * sys.maps.size() + 1);
    auto order = sys.curve_order();
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        std::size_t mi = order[oi];
        Polyline& piece = pieces[mi];
        piece.vertices.reserve(base.vertices.size());
        for (const Vec2& v : base.vertices) piece.vertices.push_back(sys.maps[mi](v));
        std::size_t start = oi == 0 ? 0 : 1;
        for (std::size_t v = start; v < piece.vertices.size(); ++v)
            whole.vertices.push_back(piece.vertices[v]);
    }
    double cell = std::max(1.0 / 1024.0, 1.0 / std::sqrt(double(whole.segment_count())));
    SpatialIndex wholeIndex(whole.vertices, cell);

    std::mt19937_64 rng(seed);
    for (std::size_t mi = 0; mi < sys.maps.size(); ++mi) {
        Polygon image;
        image.vertices.reserve(sector.vertices.size());
        for (const Vec2& v : sector.vertices) image.vertices.push_back(sys.maps[mi](v));
        BBox bb = bounding_box(image.vertices);
        std::uniform_real_distribution<double> ux(bb.lo.x, bb.hi.x);
        std::uniform_real_distribution<double> uy(bb.lo.y, bb.hi.y);
        SpatialIndex pieceIndex(pieces[mi].vertices, cell * params.r);

        long accepted = 0;
        long attempts = 0;
        const long cap = samples * 1000 + 1000;
        while (accepted < samples) {
            if (++attempts > cap)
                throw Error("osculation_check: rejection sampling exceeded attempt cap");
            Vec2 y{ux(rng), uy(rng)};
            if (!point_in_polygon(y, image)) continue;
            ++accepted;
            double dWhole = wholeIndex.distance(y);
            double dPiece = pieceIndex.distance(y);
            double violation = dPiece - dWhole;
            if (violation > rep.max_violation) {
                rep.max_violation = violation;
                rep.worst_point = y;
                rep.worst_map = static_cast<int>(mi);
            }
        }
    }
    rep.passes = rep.max_violation <= 1e-9;
    return rep;
}

}  // namespace koch
