#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>

#include "koch/geometry.hpp"
#include "koch/spatial_index.hpp"

namespace koch {

struct TubeSample {
    double eps = 0.0;
    double volume = 0.0;
    double err = 0.0;
};

/// Logarithmic epsilon grid.
struct GridSpec {
    double eps_min = 1e-3;
    double eps_max = 0.1;
    int count = 32;

    std::vector<double> points() const {
        if (!(eps_min > 0.0)) throw Error("GridSpec: eps_min must be positive");
        if (!(eps_max >= eps_min)) throw Error("GridSpec: eps_max must be >= eps_min");
        if (count < 1) throw Error("GridSpec: count must be >= 1");
        std::vector<double> p(static_cast<std::size_t>(count));
        if (count == 1) {
            p[0] = eps_min;
            return p;
        }
        double lr = std::log(eps_max / eps_min);
        for (int i = 0; i < count; ++i)
            p[static_cast<std::size_t>(i)] = eps_min * std::exp(lr * i / (count - 1));
        return p;
    }
};

/// Samples of V(eps) on a strictly increasing eps grid, with estimator error
/// bounds. Interpolation between samples is log-log linear (V is locally
/// power-law-like); the difference to a linear interpolant is folded into the
/// reported error as an interpolation-error proxy.
class TubeTable {
public:
    TubeTable() = default;
    explicit TubeTable(std::vector<TubeSample> samples, std::optional<GridSpec> spec = std::nullopt)
        : samples_(std::move(samples)), spec_(spec) {
        for (std::size_t i = 0; i + 1 < samples_.size(); ++i)
            if (!(samples_[i].eps < samples_[i + 1].eps))
                throw Error("TubeTable: eps values must be strictly increasing");
        for (const auto& s : samples_)
            if (!(s.eps > 0.0)) throw Error("TubeTable: eps values must be positive");
    }

    const std::vector<TubeSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    double eps_min() const { return samples_.front().eps; }
    double eps_max() const { return samples_.back().eps; }
    const std::optional<GridSpec>& grid_spec() const { return spec_; }

    bool in_range(double t) const {
        return !empty() && t >= eps_min() * (1.0 - 1e-12) && t <= eps_max() * (1.0 + 1e-12);
    }

    ValueWithError interpolate(double t) const {
        if (empty()) throw Error("TubeTable: empty table");
        if (!in_range(t))
            throw Error("TubeTable: t=" + fmt_double(t) + " outside table range [" +
                        fmt_double(eps_min()) + ", " + fmt_double(eps_max()) + "]");
        t = std::clamp(t, eps_min(), eps_max());
        auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                                   [](const TubeSample& s, double v) { return s.eps < v; });
        if (it != samples_.end() && it->eps == t) return {it->volume, it->err};
        std::size_t j = static_cast<std::size_t>(it - samples_.begin()) - 1;
        const TubeSample& a = samples_[j];
        const TubeSample& b = samples_[j + 1];
        double w = std::log(t / a.eps) / std::log(b.eps / a.eps);
        double vlin = a.volume + (b.volume - a.volume) * (t - a.eps) / (b.eps - a.eps);
        double value, interpErr;
        if (a.volume > 0.0 && b.volume > 0.0) {
            value = std::exp((1.0 - w) * std::log(a.volume) + w * std::log(b.volume));
            interpErr = std::abs(value - vlin);
        } else {
            value = vlin;
            interpErr = 0.25 * std::abs(b.volume - a.volume);
        }
        double err = (1.0 - w) * a.err + w * b.err + interpErr;
        return {value, err};
    }

    /// Monotonicity violations beyond combined error bands (not repaired).
    std::vector<std::string> monotonicity_violations() const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
            const auto& a = samples_[i];
            const auto& b = samples_[i + 1];
            if (b.volume < a.volume - (a.err + b.err))
                out.push_back("V(" + fmt_double(b.eps) + ") < V(" + fmt_double(a.eps) +
                              ") beyond combined error bands");
        }
        return out;
    }

private:
    std::vector<TubeSample> samples_;
    std::optional<GridSpec> spec_;
};

struct EstimatorConfig {
    enum class Method { grid, montecarlo };
    Method method = Method::grid;
    /// Grid cell size h.
    double resolution = 1e-3;
    /// If set, h = min(resolution, resolution_scale * eps).
    std::optional<double> resolution_scale;
    /// Accepted in-region samples for the Monte Carlo method.
    long mc_samples = 100000;
    /// Prefractal level rule: smallest level with max(ell,r)^level <= policy_factor * eps.
    double policy_factor = 0.01;
    std::optional<int> fixed_level;
    /// Memory guard: the level is lowered until the snowflake stays under
    /// this many segments (the cut truncation error lands in err_est).
    std::size_t max_segments = 20000000;
    unsigned long seed = 0;
    int threads = 0;
};

/// Relative fractal drum (X, Omega): the snowflake boundary X = K_{n,r} and
/// its interior region Omega, truncated to prefractal level on demand. A
/// custom drum wraps a fixed polygon (no level policy, no truncation error).
class RelativeFractalDrum {
public:
    static RelativeFractalDrum koch_snowflake(const KochParams& p,
                                              int level_cap = kDefaultLevelCap) {
        RelativeFractalDrum d;
        d.params_ = p;
        d.level_cap_ = level_cap;
        d.cache_ = std::make_shared<Cache>();
        return d;
    }

    static RelativeFractalDrum from_polygon(Polygon boundary) {
        if (boundary.vertices.size() < 4 ||
            dist(boundary.vertices.front(), boundary.vertices.back()) > 1e-12)
            throw Error("RelativeFractalDrum: boundary polygon must be closed");
        RelativeFractalDrum d;
        d.fixed_ = std::move(boundary);
        d.cache_ = std::make_shared<Cache>();
        return d;
    }

    bool is_koch() const { return params_.has_value(); }
    const KochParams& params() const {
        if (!params_) throw Error("RelativeFractalDrum: custom drum has no Koch parameters");
        return *params_;
    }
    int ambient_dim() const { return 2; }
    int level_cap() const { return level_cap_; }

    const Polygon& boundary(int level) const {
        if (fixed_) return *fixed_;
        std::lock_guard<std::mutex> lk(cache_->mu);
        auto it = cache_->polygons.find(level);
        if (it == cache_->polygons.end())
            it = cache_->polygons.emplace(level, snowflake(*params_, level, level_cap_)).first;
        return it->second;
    }

    double area(int level) const { return polygon_area(boundary(level)); }

    /// Smallest level with max(ell,r)^level <= factor * eps, clamped to the
    /// level cap and to the segment budget.
    int level_for(double eps, double factor,
                  std::size_t max_segments = std::numeric_limits<std::size_t>::max()) const {
        if (fixed_) return 0;
        double q = std::max(params_->ell, params_->r);
        double target = factor * eps;
        int lvl = target >= 1.0
                      ? 0
                      : static_cast<int>(std::ceil(std::log(target) / std::log(q)));
        lvl = std::clamp(lvl, 0, level_cap_);
        while (lvl > 0 && segment_count_at(lvl) > max_segments) --lvl;
        return lvl;
    }

    std::size_t segment_count_at(int level) const {
        if (fixed_) return fixed_->segment_count();
        double count = params_->n * std::pow(params_->n + 1.0, level);
        if (count > 1e18) return std::numeric_limits<std::size_t>::max();
        return static_cast<std::size_t>(count);
    }

    /// Hausdorff distance bound between the level-m prefractal and the
    /// attractor: bump_diameter * q^m / (1 - q).
    double hausdorff_bound(int level) const {
        if (fixed_) return 0.0;
        double q = std::max(params_->ell, params_->r);
        double bumpDiam = params_->r / std::sin(kPi / params_->n);
        return bumpDiam * std::pow(q, level) / (1.0 - q);
    }

    /// Distance from the center to the boundary (a safe lower bound for the
    /// snowflake inradius: the apothem of the unit n-gon, verified against a
    /// prefractal, minus the truncation bound).
    double inradius() const {
        if (fixed_) {
            // centroid-to-boundary distance of the custom polygon
            const Polygon& poly = *fixed_;
            Vec2 c{0.0, 0.0};
            std::size_t m = poly.vertices.size() - 1;
            for (std::size_t i = 0; i < m; ++i) c = c + poly.vertices[i];
            c = c * (1.0 / static_cast<double>(m));
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < poly.vertices.size(); ++i)
                best = std::min(best, point_segment_distance(c, poly.vertices[i],
                                                             poly.vertices[i + 1]));
            return best;
        }
        int lvl = std::min(6, level_cap_);
        const Polygon& poly = boundary(lvl);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < poly.vertices.size(); ++i)
            best = std::min(best, point_segment_distance({0.0, 0.0}, poly.vertices[i],
                                                         poly.vertices[i + 1]));
        return std::max(0.0, best - hausdorff_bound(lvl));
    }

private:
    struct Cache {
        std::mutex mu;
        std::map<int, Polygon> polygons;
    };
    std::optional<KochParams> params_;
    std::optional<Polygon> fixed_;
    int level_cap_ = kDefaultLevelCap;
    std::shared_ptr<Cache> cache_;
};

namespace detail {

/// Row-bucketed edge lists for scanline insideness at row centers y_j.
struct RowBuckets {
    double y0, h;
    std::int64_t ny;
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> entries;

    RowBuckets(const std::vector<Vec2>& v, double y0_, double h_, std::int64_t ny_)
        : y0(y0_), h(h_), ny(ny_) {
        std::size_t nseg = v.size() - 1;
        auto rows_of = [&](std::size_t s, auto&& fn) {
            double lo = std::min(v[s].y, v[s + 1].y);
            double hi = std::max(v[s].y, v[s + 1].y);
            auto jlo = static_cast<std::int64_t>(std::floor((lo - y0) / h - 0.5)) - 1;
            auto jhi = static_cast<std::int64_t>(std::ceil((hi - y0) / h - 0.5)) + 1;
            jlo = std::max<std::int64_t>(jlo, 0);
            jhi = std::min<std::int64_t>(jhi, ny - 1);
            for (std::int64_t j = jlo; j <= jhi; ++j) fn(static_cast<std::size_t>(j));
        };
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(ny) + 1, 0);
        for (std::size_t s = 0; s < nseg; ++s)
            rows_of(s, [&](std::size_t j) { ++counts[j + 1]; });
        for (std::size_t j = 1; j < counts.size(); ++j) counts[j] += counts[j - 1];
        offsets = counts;
        entries.resize(offsets.back());
        std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t s = 0; s < nseg; ++s)
            rows_of(s, [&](std::size_t j) {
                entries[cursor[j]++] = static_cast<std::uint32_t>(s);
            });
    }
};

/// Crossing x-coordinates of the boundary with the horizontal line y (even
/// count for a closed chain; the half-open rule is vertex safe).
inline void row_crossings(const std::vector<Vec2>& v, const RowBuckets& rb,
                          std::size_t j, double y, std::vector<double>& xs) {
    xs.clear();
    for (std::uint32_t e = rb.offsets[j]; e < rb.offsets[j + 1]; ++e) {
        std::uint32_t s = rb.entries[e];
        Vec2 a = v[s], b = v[s + 1];
        if ((a.y > y) != (b.y > y))
            xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
}

}  // namespace detail

/// Inner tube volume of the drum boundary relative to the region: the area of
/// {x inside Omega : d(x, boundary) < eps}.
inline TubeSample tube_volume(const RelativeFractalDrum& drum, double eps,
                              const EstimatorConfig& cfg) {
    if (eps < 0.0) throw Error("tube_volume: eps must be nonnegative");
    if (eps == 0.0) return {0.0, 0.0, 0.0};
    int level = cfg.fixed_level ? std::clamp(*cfg.fixed_level, 0, drum.level_cap())
                                : drum.level_for(eps, cfg.policy_factor, cfg.max_segments);
    const Polygon& poly = drum.boundary(level);
    const std::vector<Vec2>& v = poly.vertices;
    double hd = drum.hausdorff_bound(level);
    BBox bb = bounding_box(v);
    double w = bb.hi.x - bb.lo.x, ht = bb.hi.y - bb.lo.y;

    double cell = std::max(eps / 2.0, std::max(w, ht) / 8192.0);
    SpatialIndex index(v, cell);

    if (cfg.method == EstimatorConfig::Method::montecarlo) {
        double area = polygon_area(poly);
        std::int64_t ny2 = 1024;
        detail::RowBuckets rb(v, bb.lo.y, ht / static_cast<double>(ny2), ny2);
        auto inside = [&](Vec2 p) {
            auto j = static_cast<std::int64_t>((p.y - rb.y0) / rb.h);
            j = std::clamp<std::int64_t>(j, 0, ny2 - 1);
            int crossings = 0;
            for (std::uint32_t e = rb.offsets[static_cast<std::size_t>(j)];
                 e < rb.offsets[static_cast<std::size_t>(j) + 1]; ++e) {
                std::uint32_t s = rb.entries[e];
                Vec2 a = v[s], b = v[s + 1];
                if ((a.y > p.y) != (b.y > p.y)) {
                    double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                    if (xint > p.x) ++crossings;
                }
            }
            return (crossings & 1) == 1;
        };
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> ux(bb.lo.x, bb.hi.x);
        std::uniform_real_distribution<double> uy(bb.lo.y, bb.hi.y);
        long nin = 0, hits = 0, attempts = 0;
        const long cap = cfg.mc_samples * 100 + 1000;
        while (nin < cfg.mc_samples) {
            if (++attempts > cap)
                throw Error("tube_volume: Monte Carlo rejection sampling stalled");
            Vec2 p{ux(rng), uy(rng)};
            if (!inside(p)) continue;
            ++nin;
            if (index.within(p, eps)) ++hits;
        }
        double f = static_cast<double>(hits) / static_cast<double>(nin);
        double sigma = area * std::sqrt(std::max(f * (1.0 - f), 1.0 / nin) / nin);
        return {eps, area * f, 3.0 * sigma};
    }

    double h = cfg.resolution;
    if (cfg.resolution_scale) h = std::min(h, *cfg.resolution_scale * eps);
    if (!(h > 0.0)) throw Error("tube_volume: grid resolution must be positive");
    auto nx = static_cast<std::int64_t>(std::ceil(w / h)) + 2;
    auto ny = static_cast<std::int64_t>(std::ceil(ht / h)) + 2;
    if (nx * ny > (std::int64_t(1) << 33))
        throw Error("tube_volume: grid resolution too fine for this region");
    double x0 = bb.lo.x - h, y0 = bb.lo.y - h;

    detail::RowBuckets rb(v, y0, h, ny);
    std::vector<double> rowVol(static_cast<std::size_t>(ny), 0.0);
    std::vector<std::int64_t> rowFlips(static_cast<std::size_t>(ny), 0);

    parallel_for(static_cast<std::size_t>(ny), cfg.threads, [&](std::size_t j) {
        thread_local std::vector<double> xs;
        double y = y0 + (static_cast<double>(j) + 0.5) * h;
        detail::row_crossings(v, rb, j, y, xs);
        KahanSum sum;
        std::int64_t flips = 0;
        for (std::size_t q = 0; q + 1 < xs.size(); q += 2) {
            auto i0 = static_cast<std::int64_t>(std::ceil((xs[q] - x0) / h - 0.5));
            auto i1 = static_cast<std::int64_t>(std::floor((xs[q + 1] - x0) / h - 0.5));
            bool prev = false;
            for (std::int64_t i = std::max<std::int64_t>(i0, 0);
                 i <= std::min(i1, nx - 1); ++i) {
                double x = x0 + (static_cast<double>(i) + 0.5) * h;
                bool ind = index.within({x, y}, eps);
                if (ind) sum.add(h * h);
                if (ind != prev) ++flips;
                prev = ind;
            }
            if (prev) ++flips;
        }
        rowVol[j] = sum.value();
        rowFlips[j] = flips;
    });

    KahanSum total;
    std::int64_t flips = 0;
    for (std::size_t j = 0; j < rowVol.size(); ++j) {
        total.add(rowVol[j]);
        flips += rowFlips[j];
    }
    // One family of parallel sampling lines sees (2/pi) L of an isotropic
    // interface; both the region boundary and the eps level set count.
    double lengthEst = (kPi / 2.0) * h * static_cast<double>(flips);
    double err = (h + hd) * lengthEst;
    return {eps, total.value(), err};
}

/// Exact inner tube area of a strictly convex polygon boundary relative to
/// its interior: P*eps - eps^2 * sum_i cot(alpha_i / 2).
inline double polygon_inner_tube_exact(const Polygon& poly, double eps) {
    const auto& v = poly.vertices;
    if (v.size() < 4 || dist(v.front(), v.back()) > 1e-12)
        throw Error("polygon_inner_tube_exact: polygon must be closed");
    if (eps < 0.0) throw Error("polygon_inner_tube_exact: eps must be nonnegative");
    std::size_t m = v.size() - 1;
    double orient = polygon_signed_area(poly) >= 0.0 ? 1.0 : -1.0;
    double perimeter = 0.0, cotSum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        Vec2 prev = v[(i + m - 1) % m], cur = v[i], next = v[i + 1];
        Vec2 e0 = cur - prev, e1 = next - cur;
        double cr = orient * cross(e0, e1);
        if (cr <= 0.0) throw Error("polygon_inner_tube_exact: polygon is not strictly convex");
        perimeter += norm(e1);
        double turn = std::atan2(std::abs(cross(e0, e1)), dot(e0, e1));
        double alpha = kPi - turn;
        cotSum += 1.0 / std::tan(alpha / 2.0);
    }

    // Chebyshev inradius via edge triples (polygons here are small).
    double inr = 0.0;
    std::vector<Vec2> nrm(m);
    std::vector<double> off(m);
    for (std::size_t i = 0; i < m; ++i) {
        Vec2 e = v[i + 1] - v[i];
        Vec2 nin{-e.y * orient, e.x * orient};
        double len = norm(nin);
        nrm[i] = {nin.x / len, nin.y / len};
        off[i] = dot(nrm[i], v[i]);
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            for (std::size_t c = b + 1; c < m; ++c) {
                // solve n.x - r = off for the three edges
                double M[3][4] = {
                    {nrm[a].x, nrm[a].y, -1.0, off[a]},
                    {nrm[b].x, nrm[b].y, -1.0, off[b]},
                    {nrm[c].x, nrm[c].y, -1.0, off[c]},
                };
                double det = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                             M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                             M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
                if (std::abs(det) < 1e-14) continue;
                auto solve = [&](int col) {
                    double T[3][3];
                    for (int r2 = 0; r2 < 3; ++r2)
                        for (int c2 = 0; c2 < 3; ++c2)
                            T[r2][c2] = c2 == col ? M[r2][3] : M[r2][c2];
                    return T[0][0] * (T[1][1] * T[2][2] - T[1][2] * T[2][1]) -
                           T[0][1] * (T[1][0] * T[2][2] - T[1][2] * T[2][0]) +
                           T[0][2] * (T[1][0] * T[2][1] - T[1][1] * T[2][0]);
                };
                double px = solve(0) / det, py = solve(1) / det, r = solve(2) / det;
                if (r <= inr) continue;
                bool feasible = true;
                for (std::size_t i = 0; i < m && feasible; ++i)
                    if (dot(nrm[i], {px, py}) - off[i] < r - 1e-9) feasible = false;
                if (feasible) inr = r;
            }
    if (eps > inr * (1.0 + 1e-12))
        throw Error("polygon_inner_tube_exact: eps exceeds the polygon inradius");
    return perimeter * eps - eps * eps * cotSum;
}

inline TubeTable tube_table(const RelativeFractalDrum& drum, const GridSpec& spec,
                            const EstimatorConfig& cfg) {
    std::vector<double> eps = spec.points();
    std::vector<TubeSample> out;
    out.reserve(eps.size());
    for (double e : eps) out.push_back(tube_volume(drum, e, cfg));
    return TubeTable(std::move(out), spec);
}

/// k-fold antiderivative of the table with V^[l](0) = 0 for every l <= k.
/// Below the first grid point the table is extended by the power-law model
/// C t^gamma fitted at the first sample (documented extrapolation; gamma is
/// 2 - D for tube tables).
inline TubeTable antiderivative(const TubeTable& table, int k, double gamma) {
    if (k < 0) throw Error("antiderivative: k must be nonnegative");
    if (table.empty()) throw Error("antiderivative: empty table");
    if (!(gamma > -1.0)) throw Error("antiderivative: model exponent must exceed -1");
    if (k == 0) return table;
    const auto& s = table.samples();
    std::size_t n = s.size();
    double t0 = s.front().eps;
    std::vector<double> W(n), E(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = s[i].eps;
        W[i] = s[i].volume;
        E[i] = s[i].err;
    }
    double C = W[0] / std::pow(t0, gamma);
    double Cerr = E[0] / std::pow(t0, gamma);
    double g = gamma;
    for (int pass = 0; pass < k; ++pass) {
        std::vector<double> W2(n), E2(n);
        W2[0] = C * std::pow(t0, g + 1.0) / (g + 1.0);
        E2[0] = Cerr * std::pow(t0, g + 1.0) / (g + 1.0);
        for (std::size_t i = 1; i < n; ++i) {
            double dt = t[i] - t[i - 1];
            W2[i] = W2[i - 1] + 0.5 * (W[i - 1] + W[i]) * dt;
            E2[i] = E2[i - 1] + 0.5 * (E[i - 1] + E[i]) * dt;
        }
        W = std::move(W2);
        E = std::move(E2);
        C /= (g + 1.0);
        Cerr /= (g + 1.0);
        g += 1.0;
    }
    std::vector<TubeSample> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {t[i], W[i], E[i]};
    return TubeTable(std::move(out), table.grid_spec());
}

}  // namespace koch
