#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <numeric>

#include "koch/sfe.hpp"

namespace koch {

/// Unique real solution D of the Moran equation 1 = sum a_i lambda_i^D.
/// Bisection on [-64, 64] brackets the root, Newton polishes it.
inline double similarity_dimension(const ScalingOperator& op) {
    auto p = [&](double s) { return op.moran_sum(Complex(s, 0.0)).real(); };
    double lo = -64.0, hi = 64.0;
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        double mid = 0.5 * (lo + hi);
        (p(mid) > 1.0 ? lo : hi) = mid;
    }
    double d = 0.5 * (lo + hi);
    for (int i = 0; i < 60; ++i) {
        Complex f = op.moran_denominator(Complex(d, 0.0));
        Complex fp = op.moran_derivative(Complex(d, 0.0));
        double step = (f / fp).real();
        d -= step;
        if (std::abs(step) < 1e-16 * (1.0 + std::abs(d))) break;
    }
    return d;
}

/// zeta_L(s) = 1 / (1 - sum a_i lambda_i^s). Throws near the pole set.
inline Complex zeta_L(const ScalingOperator& op, Complex s) {
    Complex den = op.moran_denominator(s);
    if (std::abs(den) <= 1e-13)
        throw Error("zeta_L: s is a pole of the scaling zeta function (|denominator| = " +
                    fmt_double(std::abs(den)) + ")");
    return 1.0 / den;
}

struct LatticeInfo {
    bool is_lattice = false;
    /// common base x in (0,1) with lambda_i = x^{p_i} (lattice case)
    double base = 0.0;
    /// exponents p_i aligned with op.terms(), gcd = 1
    std::vector<long> exponents;
    /// 2*pi / log(1/x)
    double oscillatory_period = 0.0;
    double tolerance_used = 0.0;
    long max_denominator = 0;
    /// verdict obtained through exact rational arithmetic
    bool exact = false;
};

namespace detail {

/// Continued-fraction convergent p/q of x with q <= max_den and
/// |x - p/q| <= tol, if one exists.
inline std::optional<std::pair<long, long>> rational_approx(double x, double tol, long max_den) {
    long p0 = 1, q0 = 0, p1 = 0, q1 = 1;  // p0/q0 = 1/0, p1/q1 = 0/1
    double v = x;
    for (int it = 0; it < 64; ++it) {
        double fa = std::floor(v);
        if (fa > 9e17) break;
        long a = static_cast<long>(fa);
        long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den || q2 <= 0) break;
        if (std::abs(x - static_cast<double>(p2) / static_cast<double>(q2)) <= tol)
            return std::make_pair(p2, q2);
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = v - fa;
        if (frac < 1e-18) break;
        v = 1.0 / frac;
    }
    return std::nullopt;
}

}  // namespace detail

/// Floating-point lattice test: the ratios log(lambda_i)/log(lambda_1) must
/// all admit rational approximations p/q with q <= max_denominator matching
/// within tolerance. A negative verdict means "non-lattice within
/// tolerance/max_denominator".
inline LatticeInfo lattice_classify(const ScalingOperator& op, double tolerance = 1e-9,
                                    long max_denominator = 1000000) {
    LatticeInfo info;
    info.tolerance_used = tolerance;
    info.max_denominator = max_denominator;
    const auto& terms = op.terms();
    double l1 = terms[0].ratio;
    std::vector<long> ps(terms.size()), qs(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        double xi = std::log(terms[i].ratio) / std::log(l1);
        auto pq = detail::rational_approx(xi, tolerance, max_denominator);
        if (!pq) return info;
        ps[i] = pq->first;
        qs[i] = pq->second;
    }
    long Q = 1;
    for (long q : qs) {
        Q = std::lcm(Q, q);
        if (Q > (long(1) << 50)) return info;
    }
    std::vector<long> e(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) e[i] = ps[i] * (Q / qs[i]);
    long g = 0;
    for (long ei : e) g = std::gcd(g, ei);
    if (g == 0) return info;
    for (long& ei : e) ei /= g;
    double x = std::exp(std::log(l1) * static_cast<double>(g) / static_cast<double>(Q));
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (std::abs(terms[i].ratio - std::pow(x, static_cast<double>(e[i]))) > tolerance)
            return info;
    info.is_lattice = true;
    info.base = x;
    info.exponents = std::move(e);
    info.oscillatory_period = 2.0 * kPi / std::log(1.0 / x);
    return info;
}

/// Exact lattice test for Koch parameters with rational r: r and ell are
/// lattice iff their prime-exponent vectors are parallel. Exponents align
/// with koch_operator(params).terms().
inline LatticeInfo lattice_classify_koch_exact(const KochParams& params) {
    if (!params.r_exact)
        throw Error("lattice_classify_koch_exact: requires an exact rational r");
    LatticeInfo info;
    info.exact = true;
    Rational r = *params.r_exact;
    Rational ell = *params.ell_exact();
    if (r == ell) {
        info.is_lattice = true;
        info.base = r.value();
        info.exponents = {1};
        info.oscillatory_period = 2.0 * kPi / std::log(1.0 / info.base);
        return info;
    }
    auto vr = factor_exponents(r);
    auto vl = factor_exponents(ell);
    auto content = [](const std::map<std::int64_t, std::int64_t>& v) {
        std::int64_t g = 0;
        for (const auto& [p, e] : v) g = std::gcd(g, e < 0 ? -e : e);
        return g;
    };
    std::int64_t g1 = content(vr), g2 = content(vl);
    if (g1 == 0 || g2 == 0) return info;
    auto primitive = [](std::map<std::int64_t, std::int64_t> v, std::int64_t g) {
        for (auto& [p, e] : v) e /= g;
        return v;
    };
    auto ur = primitive(vr, g1), ul = primitive(vl, g2);
    if (ur != ul) return info;  // exactly non-lattice
    std::int64_t d = std::gcd(g1, g2);
    double x = 1.0;
    for (const auto& [p, e] : ur) x *= std::pow(static_cast<double>(p), static_cast<double>(e));
    double base = std::pow(x, static_cast<double>(d));
    info.is_lattice = true;
    info.base = base;
    // exponents aligned with koch_operator terms (sorted by descending ratio)
    long er = static_cast<long>(g1 / d), el = static_cast<long>(g2 / d);
    ScalingOperator op = koch_operator(params);
    for (const auto& t : op.terms())
        info.exponents.push_back(std::abs(t.ratio - r.value()) < 1e-15 ? er : el);
    info.oscillatory_period = 2.0 * kPi / std::log(1.0 / base);
    return info;
}

struct Window {
    double re_min, re_max, im_min, im_max;

    Window(double rmin, double rmax, double imin, double imax)
        : re_min(rmin), re_max(rmax), im_min(imin), im_max(imax) {
        if (!(re_min < re_max) || !(im_min < im_max))
            throw Error("Window: requires re_min < re_max and im_min < im_max");
    }
    double width() const { return re_max - re_min; }
    double height() const { return im_max - im_min; }
    bool contains(Complex s, double slack = 0.0) const {
        return s.real() >= re_min - slack && s.real() <= re_max + slack &&
               s.imag() >= im_min - slack && s.imag() <= im_max + slack;
    }
};

struct ComplexRoot {
    Complex omega{0.0, 0.0};
    int order = 1;
    /// Res(zeta_L; omega) = 1/f'(omega); meaningful only for order 1.
    Complex residue_zeta_L{0.0, 0.0};
    enum class Method { newton, lattice_closed_form } method = Method::newton;
};

inline Complex residue_zeta_L(const ScalingOperator& op, Complex omega) {
    Complex fp = op.moran_derivative(omega);
    if (std::abs(fp) < 1e-12)
        throw Error("residue_zeta_L: pole is not simple (|f'| = " + fmt_double(std::abs(fp)) + ")");
    return 1.0 / fp;
}

namespace detail {

// Gauss-7 / Kronrod-15 pair on [-1, 1].
inline constexpr double kGK15X[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGK15W[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kG7W[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

/// Adaptive Gauss-Kronrod integration of a complex-valued g over [t0, t1].
template <typename G>
Complex gk_adaptive(G&& g, double t0, double t1, double tol, int depth = 0) {
    double c = 0.5 * (t0 + t1), hl = 0.5 * (t1 - t0);
    Complex k{0.0, 0.0}, q{0.0, 0.0};
    for (int i = 0; i < 8; ++i) {
        Complex fv;
        if (i == 7) {
            fv = g(c);
            k += kGK15W[7] * fv;
            q += kG7W[3] * fv;
        } else {
            Complex fa = g(c - hl * kGK15X[i]);
            Complex fb = g(c + hl * kGK15X[i]);
            k += kGK15W[i] * (fa + fb);
            if (i % 2 == 1) q += kG7W[i / 2] * (fa + fb);
        }
    }
    k *= hl;
    q *= hl;
    double err = std::abs(k - q);
    if (err <= tol || depth >= 32)
        return k;
    return gk_adaptive(g, t0, c, tol * 0.5, depth + 1) +
           gk_adaptive(g, c, t1, tol * 0.5, depth + 1);
}

inline Complex logderiv_segment_integral(const ScalingOperator& op, Complex a, Complex b,
                                         double tol) {
    Complex d = b - a;
    return gk_adaptive(
        [&](double t) {
            Complex s = a + t * d;
            return op.moran_derivative(s) / op.moran_denominator(s) * d;
        },
        0.0, 1.0, tol);
}

inline double contour_integral_count(const ScalingOperator& op, const Window& w, double tol) {
    Complex A{w.re_min, w.im_min}, B{w.re_max, w.im_min};
    Complex C{w.re_max, w.im_max}, D{w.re_min, w.im_max};
    Complex total = logderiv_segment_integral(op, A, B, tol) +
                    logderiv_segment_integral(op, B, C, tol) +
                    logderiv_segment_integral(op, C, D, tol) +
                    logderiv_segment_integral(op, D, A, tol);
    return (total / Complex(0.0, 2.0 * kPi)).real();
}

inline Complex newton_root(const ScalingOperator& op, Complex s0, int max_iter = 100) {
    Complex s = s0;
    for (int i = 0; i < max_iter; ++i) {
        Complex f = op.moran_denominator(s);
        Complex fp = op.moran_derivative(s);
        if (std::abs(fp) < 1e-300) break;
        Complex step = f / fp;
        s -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(s))) break;
    }
    return s;
}

/// Minimum estimated distance from the segment [a,b] to a root, probed by
/// Newton from samples along the segment.
inline double segment_root_distance(const ScalingOperator& op, Complex a, Complex b,
                                    int samples = 65) {
    double best = std::numeric_limits<double>::infinity();
    Complex d = b - a;
    double len = std::abs(d);
    for (int i = 0; i <= samples; ++i) {
        double t = static_cast<double>(i) / samples;
        Complex s = a + t * d;
        // local first-order distance estimate
        double est = std::abs(op.moran_denominator(s)) /
                     std::max(std::abs(op.moran_derivative(s)), 1e-12);
        if (est < 0.25 * len || est < 1e-6) {
            Complex root = newton_root(op, s, 30);
            if (std::abs(op.moran_denominator(root)) < 1e-10) {
                // distance from root to the segment
                double tt = std::clamp(((root - a) / d).real(), 0.0, 1.0);
                best = std::min(best, std::abs(root - (a + tt * d)));
            }
        }
        best = std::min(best, std::max(est, 0.0));
    }
    return best;
}

inline double window_boundary_root_distance(const ScalingOperator& op, const Window& w) {
    Complex A{w.re_min, w.im_min}, B{w.re_max, w.im_min};
    Complex C{w.re_max, w.im_max}, D{w.re_min, w.im_max};
    double d1 = segment_root_distance(op, A, B);
    double d2 = segment_root_distance(op, B, C);
    double d3 = segment_root_distance(op, C, D);
    double d4 = segment_root_distance(op, D, A);
    return std::min(std::min(d1, d2), std::min(d3, d4));
}

/// Expands the window outward until no root sits within 1e-8 of its
/// boundary. Deterministic, so callers sharing a window agree on the result.
inline Window nudge_window(const ScalingOperator& op, Window w) {
    for (int attempt = 0; attempt < 4; ++attempt) {
        if (window_boundary_root_distance(op, w) > 1e-8) return w;
        if (attempt == 3) break;
        double dr = 1e-6 * (1.0 + w.width()) * (attempt + 1);
        double di = 1e-6 * (1.0 + w.height()) * (attempt + 1);
        w = Window(w.re_min - dr, w.re_max + dr, w.im_min - di, w.im_max + di);
    }
    throw Error("winding: a root stays within 1e-8 of the window boundary after 3 nudges");
}

}  // namespace detail

/// Argument-principle count of Moran roots (with multiplicity) inside the
/// window. The window is nudged outward if a root sits within 1e-8 of its
/// boundary.
inline int winding_number(const ScalingOperator& op, const Window& window) {
    Window w = detail::nudge_window(op, window);
    double n = detail::contour_integral_count(op, w, 1e-4);
    double r = std::round(n);
    if (std::abs(n - r) > 0.25)
        throw Error("winding_number: contour integral " + fmt_double(n) +
                    " is not close to an integer");
    return static_cast<int>(r);
}

namespace detail {

inline double split_coordinate(const ScalingOperator& op, const Window& w, bool vertical) {
    // vertical: split line Re = const; horizontal: Im = const
    static constexpr double kFracs[] = {0.5, 0.55, 0.45, 0.6, 0.4, 0.65, 0.35};
    double bestPos = 0.0, bestDist = -1.0;
    for (double f : kFracs) {
        double pos = vertical ? w.re_min + f * w.width() : w.im_min + f * w.height();
        Complex a = vertical ? Complex(pos, w.im_min) : Complex(w.re_min, pos);
        Complex b = vertical ? Complex(pos, w.im_max) : Complex(w.re_max, pos);
        double d = segment_root_distance(op, a, b, 33);
        if (d > 1e-7) return pos;
        if (d > bestDist) {
            bestDist = d;
            bestPos = pos;
        }
    }
    return bestPos;
}

inline void subdivide_roots(const ScalingOperator& op, const Window& w, double tol, int depth,
                            std::vector<ComplexRoot>& out) {
    if (depth > 40) throw Error("roots_in_window: subdivision depth exceeded 40");
    double cnt = contour_integral_count(op, w, 1e-4);
    int n = static_cast<int>(std::round(cnt));
    if (std::abs(cnt - n) > 0.25)
        throw Error("roots_in_window: winding integral is not close to an integer");
    if (n == 0) return;
    if (n == 1) {
        Complex center{0.5 * (w.re_min + w.re_max), 0.5 * (w.im_min + w.im_max)};
        Complex root = newton_root(op, center);
        if (std::abs(op.moran_denominator(root)) <= tol && w.contains(root, 1e-12)) {
            out.push_back({root, 1, Complex{0.0, 0.0}, ComplexRoot::Method::newton});
            return;
        }
        // Newton escaped the box; keep subdividing toward the root.
    }
    double diag = std::hypot(w.width(), w.height());
    if (diag < 1e-9) {
        // cluster that never separates: root of order n at the winding centroid
        Complex A{w.re_min, w.im_min}, B{w.re_max, w.im_min};
        Complex C{w.re_max, w.im_max}, D{w.re_min, w.im_max};
        auto seg = [&](Complex a, Complex b) {
            Complex d = b - a;
            return gk_adaptive(
                [&](double t) {
                    Complex s = a + t * d;
                    return s * op.moran_derivative(s) / op.moran_denominator(s) * d;
                },
                0.0, 1.0, 1e-10);
        };
        Complex centroid = (seg(A, B) + seg(B, C) + seg(C, D) + seg(D, A)) /
                           (Complex(0.0, 2.0 * kPi) * static_cast<double>(n));
        out.push_back({centroid, n, Complex{0.0, 0.0}, ComplexRoot::Method::newton});
        return;
    }
    double sx = split_coordinate(op, w, true);
    double sy = split_coordinate(op, w, false);
    Window q1(w.re_min, sx, w.im_min, sy), q2(sx, w.re_max, w.im_min, sy);
    Window q3(w.re_min, sx, sy, w.im_max), q4(sx, w.re_max, sy, w.im_max);
    subdivide_roots(op, q1, tol, depth + 1, out);
    subdivide_roots(op, q2, tol, depth + 1, out);
    subdivide_roots(op, q3, tol, depth + 1, out);
    subdivide_roots(op, q4, tol, depth + 1, out);
}

inline void sort_roots(std::vector<ComplexRoot>& roots) {
    std::sort(roots.begin(), roots.end(), [](const ComplexRoot& a, const ComplexRoot& b) {
        if (a.omega.imag() != b.omega.imag()) return a.omega.imag() < b.omega.imag();
        return a.omega.real() < b.omega.real();
    });
}

}  // namespace detail

/// All Moran roots in the window, found by recursive quadrisection on
/// winding counts and Newton refinement. Every returned root satisfies
/// |1 - sum a_i lambda_i^omega| <= tol and Re(omega) <= D + 1e-10.
inline std::vector<ComplexRoot> roots_in_window(const ScalingOperator& op, const Window& window,
                                                double tol = 1e-10) {
    Window w = detail::nudge_window(op, window);
    std::vector<ComplexRoot> out;
    detail::subdivide_roots(op, w, tol, 0, out);
    // adjacent boxes can converge to the same root when Newton overshoots
    detail::sort_roots(out);
    out.erase(std::unique(out.begin(), out.end(),
                          [](const ComplexRoot& a, const ComplexRoot& b) {
                              return std::abs(a.omega - b.omega) < 1e-9;
                          }),
              out.end());
    double D = similarity_dimension(op);
    for (auto& root : out) {
        if (std::abs(op.moran_denominator(root.omega)) > tol)
            throw Error("roots_in_window: refined root fails the Moran equation tolerance");
        if (root.omega.real() > D + 1e-10)
            throw Error("roots_in_window: root found right of the similarity dimension");
        if (root.order == 1) root.residue_zeta_L = residue_zeta_L(op, root.omega);
    }
    return out;
}

/// Lattice closed form: with lambda_i = x^{p_i}, substitute z = x^s; each
/// root z0 of 1 - sum a_i z^{p_i} yields the vertical line of roots
/// (Log z0 + 2 pi i k) / log x. Roots are found as companion-matrix
/// eigenvalues and polished by Newton.
inline std::vector<ComplexRoot> lattice_roots(const ScalingOperator& op, const LatticeInfo& info,
                                              const Window& window) {
    if (!info.is_lattice) throw Error("lattice_roots: operator is not lattice");
    const auto& terms = op.terms();
    if (info.exponents.size() != terms.size())
        throw Error("lattice_roots: exponent list does not match operator terms");
    long degree = *std::max_element(info.exponents.begin(), info.exponents.end());
    std::vector<double> coeff(static_cast<std::size_t>(degree) + 1, 0.0);
    coeff[0] = 1.0;
    for (std::size_t i = 0; i < terms.size(); ++i)
        coeff[static_cast<std::size_t>(info.exponents[i])] -= terms[i].multiplicity;

    // companion matrix of the monic version
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(degree, degree);
    for (long i = 1; i < degree; ++i) comp(i, i - 1) = 1.0;
    for (long i = 0; i < degree; ++i)
        comp(i, degree - 1) = -coeff[static_cast<std::size_t>(i)] /
                              coeff[static_cast<std::size_t>(degree)];
    Eigen::VectorXcd eig = comp.eigenvalues();

    auto poly = [&](Complex z) {
        Complex acc{0.0, 0.0};
        for (long i = degree; i >= 0; --i) acc = acc * z + coeff[static_cast<std::size_t>(i)];
        return acc;
    };
    auto dpoly = [&](Complex z) {
        Complex acc{0.0, 0.0};
        for (long i = degree; i >= 1; --i)
            acc = acc * z + static_cast<double>(i) * coeff[static_cast<std::size_t>(i)];
        return acc;
    };
    std::vector<Complex> zs;
    for (long i = 0; i < degree; ++i) {
        Complex z = eig(i);
        for (int it = 0; it < 50; ++it) {
            Complex dp = dpoly(z);
            if (std::abs(dp) < 1e-300) break;
            Complex step = poly(z) / dp;
            z -= step;
            if (std::abs(step) < 1e-16 * (1.0 + std::abs(z))) break;
        }
        zs.push_back(z);
    }
    // group repeated polynomial roots into multiplicities
    std::vector<std::pair<Complex, int>> grouped;
    for (Complex z : zs) {
        bool merged = false;
        for (auto& g : grouped)
            if (std::abs(g.first - z) < 1e-8) {
                ++g.second;
                merged = true;
                break;
            }
        if (!merged) grouped.emplace_back(z, 1);
    }

    double logx = std::log(info.base);  // negative
    double period = info.oscillatory_period;
    std::vector<ComplexRoot> out;
    for (const auto& [z0, order] : grouped) {
        if (std::abs(poly(z0)) > 1e-12 * (1.0 + std::abs(z0)))
            throw Error("lattice_roots: polynomial root failed to polish");
        Complex w0 = std::log(z0) / logx;
        // walk the vertical line w0 + i k * period through the window
        double kmid = (0.5 * (window.im_min + window.im_max) - w0.imag()) / period;
        long k0 = static_cast<long>(std::llround(kmid));
        auto emit = [&](long k) {
            Complex omega = w0 + Complex(0.0, static_cast<double>(k) * period);
            if (!window.contains(omega, 1e-12)) return false;
            ComplexRoot root;
            root.omega = omega;
            root.order = order;
            root.method = ComplexRoot::Method::lattice_closed_form;
            if (std::abs(op.moran_denominator(omega)) > 1e-10)
                throw Error("lattice_roots: closed-form root fails the Moran equation");
            if (order == 1) root.residue_zeta_L = residue_zeta_L(op, omega);
            out.push_back(root);
            return true;
        };
        for (long k = k0; emit(k); ++k) {}
        for (long k = k0 - 1; emit(k); --k) {}
    }
    detail::sort_roots(out);
    return out;
}

}  // namespace koch
