#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "koch/geometry.hpp"

namespace koch {

/// Uniform grid over the segments of a polyline (or closed polygon chain).
/// Each segment is registered in every cell its bounding box overlaps, so
/// ring searches with conservative cell lower bounds return the exact
/// minimum distance (the same point-segment arithmetic as a brute-force
/// scan; pruning never discards the nearest segment).
class SpatialIndex {
public:
    SpatialIndex(const std::vector<Vec2>& vertices, double cell_size)
        : verts_(&vertices), cell_(cell_size) {
        if (vertices.size() < 2) throw Error("SpatialIndex: empty polyline");
        if (!(cell_size > 0.0)) throw Error("SpatialIndex: cell size must be positive");
        BBox bb = bounding_box(vertices);
        // pad so every segment lies strictly inside the grid
        x0_ = bb.lo.x - 0.5 * cell_;
        y0_ = bb.lo.y - 0.5 * cell_;
        nx_ = static_cast<std::int64_t>((bb.hi.x - x0_) / cell_) + 2;
        ny_ = static_cast<std::int64_t>((bb.hi.y - y0_) / cell_) + 2;
        std::size_t nseg = vertices.size() - 1;
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(nx_ * ny_) + 1, 0);
        auto cells_of = [&](std::size_t s, auto&& fn) {
            Vec2 a = vertices[s], b = vertices[s + 1];
            std::int64_t ix0 = cell_index_x(std::min(a.x, b.x));
            std::int64_t ix1 = cell_index_x(std::max(a.x, b.x));
            std::int64_t iy0 = cell_index_y(std::min(a.y, b.y));
            std::int64_t iy1 = cell_index_y(std::max(a.y, b.y));
            for (std::int64_t iy = iy0; iy <= iy1; ++iy)
                for (std::int64_t ix = ix0; ix <= ix1; ++ix)
                    fn(static_cast<std::size_t>(iy * nx_ + ix));
        };
        for (std::size_t s = 0; s < nseg; ++s)
            cells_of(s, [&](std::size_t c) { ++counts[c + 1]; });
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        offsets_ = counts;
        entries_.resize(offsets_.back());
        std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (std::size_t s = 0; s < nseg; ++s)
            cells_of(s, [&](std::size_t c) {
                entries_[cursor[c]++] = static_cast<std::uint32_t>(s);
            });
    }

    double cell_size() const { return cell_; }

    /// Exact minimum distance from p to the segment set.
    double distance(Vec2 p) const {
        return search(p, std::numeric_limits<double>::infinity(), false);
    }

    /// Exact distance if it is below `cutoff`; otherwise +infinity (the
    /// verdict "no segment closer than cutoff" is still exact).
    double distance_within(Vec2 p, double cutoff) const {
        double d = search(p, cutoff, false);
        return d < cutoff ? d : std::numeric_limits<double>::infinity();
    }

    /// Whether some segment lies strictly closer than eps.
    bool within(Vec2 p, double eps) const { return search(p, eps, true) < eps; }

private:
    std::int64_t cell_index_x(double x) const {
        return std::clamp<std::int64_t>(static_cast<std::int64_t>((x - x0_) / cell_), 0, nx_ - 1);
    }
    std::int64_t cell_index_y(double y) const {
        return std::clamp<std::int64_t>(static_cast<std::int64_t>((y - y0_) / cell_), 0, ny_ - 1);
    }

    void scan_cell(Vec2 p, std::int64_t ix, std::int64_t iy, double& best) const {
        std::size_t c = static_cast<std::size_t>(iy * nx_ + ix);
        const auto& v = *verts_;
        for (std::uint32_t e = offsets_[c]; e < offsets_[c + 1]; ++e) {
            std::uint32_t s = entries_[e];
            double d = point_segment_distance(p, v[s], v[s + 1]);
            if (d < best) best = d;
        }
    }

    template <typename Fn>
    void for_ring(std::int64_t cx, std::int64_t cy, std::int64_t k, Fn&& fn) const {
        auto row = [&](std::int64_t iy, std::int64_t xa, std::int64_t xb) {
            if (iy < 0 || iy >= ny_) return;
            for (std::int64_t ix = std::max<std::int64_t>(xa, 0);
                 ix <= std::min(xb, nx_ - 1); ++ix)
                fn(ix, iy);
        };
        if (k == 0) {
            row(cy, cx, cx);
            return;
        }
        row(cy - k, cx - k, cx + k);
        row(cy + k, cx - k, cx + k);
        for (std::int64_t iy = cy - k + 1; iy <= cy + k - 1; ++iy) {
            if (iy < 0 || iy >= ny_) continue;
            if (cx - k >= 0) fn(cx - k, iy);
            if (cx + k <= nx_ - 1) fn(cx + k, iy);
        }
    }

    // Ring search. Cells on Chebyshev ring k around p's cell are at geometric
    // distance >= (k-1)*cell from p, so the loop stops once that bound passes
    // min(best, cutoff). In early_true mode any hit below cutoff suffices.
    double search(Vec2 p, double cutoff, bool early_true) const {
        std::int64_t cx = cell_index_x(p.x), cy = cell_index_y(p.y);
        std::int64_t maxRing = nx_ + ny_;
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t k = 0; k <= maxRing; ++k) {
            if (k > 0) {
                double ringLB = static_cast<double>(k - 1) * cell_ * (1.0 - 1e-12);
                if (ringLB >= std::min(best, cutoff)) break;
                if (early_true && best < cutoff) break;
            }
            for_ring(cx, cy, k, [&](std::int64_t ix, std::int64_t iy) {
                scan_cell(p, ix, iy, best);
            });
        }
        return best;
    }

    const std::vector<Vec2>* verts_;
    double cell_;
    double x0_ = 0.0, y0_ = 0.0;
    std::int64_t nx_ = 0, ny_ = 0;
    std::vector<std::uint32_t> offsets_;
    std::vector<std::uint32_t> entries_;
};

/// Exact point-to-polyline distance through the index; matches a brute-force
/// scan over all segments (same arithmetic).
inline double distance_to_polyline(Vec2 p, const Polyline& poly, const SpatialIndex& index) {
    if (poly.vertices.size() < 2) throw Error("distance_to_polyline: empty polyline");
    return index.distance(p);
}

}  // namespace koch
