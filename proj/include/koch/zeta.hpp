#pragma once

#include <functional>

#include "koch/moran.hpp"

namespace koch {

/// Ambient dimension for all tube zeta integrals here (plane drums).
inline constexpr int kAmbientDim = 2;

struct ZetaConfig {
    /// Mellin truncation delta; must lie inside the tube table range.
    double delta = 0.05;
    /// Leading exponent of V at 0+ (2 - D) for the endpoint model.
    double singular_exponent_hint = 2.0 - 1.2618595071429148;
};

enum class ZetaPath { direct, continued };

struct ZetaEval {
    Complex s{0.0, 0.0};
    Complex value{0.0, 0.0};
    ZetaPath path = ZetaPath::direct;
    double err = 0.0;
};

struct ResidueTerm {
    Complex omega{0.0, 0.0};
    /// Res(tube zeta; omega)
    Complex a_omega{0.0, 0.0};
    double err = 0.0;
    /// |Im| cutoff of the term list this entry belongs to
    double truncation_T = std::numeric_limits<double>::infinity();
};

enum class InterpMode { loglog, linear };

struct MellinResult {
    Complex value{0.0, 0.0};
    double err = 0.0;
};

namespace detail {

/// Interpolated sample value at t inside interval [a, b] of the table, with
/// the interval's interpolation mode.
inline double interval_value(double t, double ta, double va, double tb, double vb,
                             bool loglog) {
    if (t == ta) return va;
    if (t == tb) return vb;
    if (loglog) {
        double w = std::log(t / ta) / std::log(tb / ta);
        return std::exp((1.0 - w) * std::log(va) + w * std::log(vb));
    }
    return va + (vb - va) * (t - ta) / (tb - ta);
}

}  // namespace detail

/// Truncated Mellin transform of the tabulated function: the exact integral
/// of the chosen interpolant of f, integral t^(s-1) f(t) dt over [alpha,
/// beta]. In loglog mode each table interval is a power law and integrates
/// in closed form; intervals with nonpositive values fall back to the linear
/// form. With alpha = 0 the panel (0, t0] uses the power model
/// c t^gamma fitted at the first sample. The reported error integrates the
/// table's error column against t^(Re s - 1).
inline MellinResult mellin_truncated(const std::vector<TubeSample>& f, Complex s, double alpha,
                                     double beta, InterpMode mode, double gamma_hint = 0.0) {
    if (f.empty()) throw Error("mellin_truncated: empty table");
    if (!(alpha >= 0.0) || !(alpha < beta)) throw Error("mellin_truncated: requires 0 <= alpha < beta");
    double t0 = f.front().eps, tmax = f.back().eps;
    if (alpha > 0.0 && alpha < t0 * (1.0 - 1e-12))
        throw Error("mellin_truncated: alpha below the table range");
    if (beta > tmax * (1.0 + 1e-12))
        throw Error("mellin_truncated: beta above the table range");
    beta = std::min(beta, tmax);

    Complex value{0.0, 0.0};
    double err = 0.0;
    double sigma = s.real();

    if (alpha == 0.0) {
        double gamma = gamma_hint;
        if (sigma + gamma <= 0.0)
            throw Error("mellin_truncated: integral diverges at 0 (Re(s) + gamma = " +
                        fmt_double(sigma + gamma) + " <= 0)");
        double tEnd = std::min(t0, beta);
        double c = f.front().volume / std::pow(t0, gamma);
        double cErr = f.front().err / std::pow(t0, gamma);
        value += c * std::exp((s + gamma) * std::log(tEnd)) / (s + gamma);
        err += cErr * std::pow(tEnd, sigma + gamma) / (sigma + gamma);
        if (beta <= t0) return {value, err};
        alpha = t0;
    }
    alpha = std::max(alpha, t0);

    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        double ta = f[i].eps, tb = f[i + 1].eps;
        double a = std::max(ta, alpha), b = std::min(tb, beta);
        if (!(a < b)) continue;
        double va = f[i].volume, vb = f[i + 1].volume;
        bool loglog = mode == InterpMode::loglog && va > 0.0 && vb > 0.0;
        if (loglog) {
            double m = std::log(vb / va) / std::log(tb / ta);
            double fa = detail::interval_value(a, ta, va, tb, vb, true);
            value += fa * std::exp(-m * std::log(a)) * power_integral(s + m, a, b);
        } else {
            double c1 = (vb - va) / (tb - ta);
            double c0 = va - c1 * ta;
            value += c0 * power_integral(s, a, b) + c1 * power_integral(s + 1.0, a, b);
        }
        double ea = f[i].err, eb = f[i + 1].err;
        double e1 = (eb - ea) / (tb - ta);
        double e0 = ea - e1 * ta;
        err += std::abs(e0 * power_integral(Complex(sigma, 0.0), a, b).real() +
                        e1 * power_integral(Complex(sigma + 1.0, 0.0), a, b).real());
    }
    return {value, err};
}

/// Tube zeta by direct quadrature: integral t^(s-N-1) V(t) dt over [0, delta];
/// valid for Re(s) > D + margin, with D = 2 - singular_exponent_hint.
inline ZetaEval tube_zeta_direct(const TubeTable& table, Complex s, const ZetaConfig& cfg,
                                 double margin = 0.05) {
    double D = 2.0 - cfg.singular_exponent_hint;
    if (s.real() <= D + margin)
        throw Error("tube_zeta_direct: Re(s) = " + fmt_double(s.real()) +
                    " is not above D + margin = " + fmt_double(D + margin) +
                    "; use the functional-equation continuation instead");
    MellinResult r = mellin_truncated(table.samples(), s - static_cast<double>(kAmbientDim), 0.0,
                                      cfg.delta, InterpMode::loglog, cfg.singular_exponent_hint);
    return {s, r.value, ZetaPath::direct, r.err};
}

/// Partial tube zeta integral t^(s-N-1) V(t) dt over [delta1, delta2]; entire in s.
inline MellinResult partial_tube_zeta(const TubeTable& table, Complex s, double delta1,
                                      double delta2) {
    if (!(delta1 > 0.0) || !(delta1 < delta2))
        throw Error("partial_tube_zeta: requires 0 < delta1 < delta2");
    if (!table.in_range(delta1) || !table.in_range(delta2))
        throw Error("partial_tube_zeta: [delta1, delta2] = [" + fmt_double(delta1) + ", " +
                    fmt_double(delta2) + "] not inside the table range");
    return mellin_truncated(table.samples(), s - static_cast<double>(kAmbientDim), delta1, delta2,
                            InterpMode::loglog);
}

/// E(s; delta) = sum a_i lambda_i^s partial_tube_zeta(s; delta, delta/lambda_i).
inline MellinResult entire_E(const ScalingOperator& op, const TubeTable& table, Complex s,
                             const ZetaConfig& cfg) {
    Complex value{0.0, 0.0};
    double err = 0.0;
    for (const auto& t : op.terms()) {
        double upper = cfg.delta / t.ratio;
        if (!table.in_range(upper))
            throw Error("entire_E: delta/lambda = " + fmt_double(upper) + " for ratio " +
                        fmt_double(t.ratio) + " is outside the table range");
        MellinResult part = partial_tube_zeta(table, s, cfg.delta, upper);
        Complex wgt = static_cast<double>(t.multiplicity) * std::exp(s * std::log(t.ratio));
        value += wgt * part.value;
        err += std::abs(wgt) * part.err;
    }
    return {value, err};
}

/// zeta_R(s; delta) = integral t^(s-N-1) R(t) dt over [0, delta] for the
/// whole-snowflake residual R = V - L[V]; holomorphic on Re(s) > 0 since
/// R = O(t^2). Linear interpolation (residuals may cross zero), endpoint
/// model c t^2 below the table.
inline MellinResult zeta_R(const ResidualTable& res, Complex s, const ZetaConfig& cfg) {
    if (s.real() <= 0.0)
        throw Error("zeta_R: integral diverges for Re(s) <= 0");
    if (res.empty()) throw Error("zeta_R: empty residual table");
    std::vector<TubeSample> f;
    f.reserve(res.samples().size());
    for (const auto& r : res.samples()) f.push_back({r.eps, r.residual, r.err});
    if (cfg.delta > res.eps_max() * (1.0 + 1e-12))
        throw Error("zeta_R: delta above the residual table range");
    return mellin_truncated(f, s - static_cast<double>(kAmbientDim), 0.0, cfg.delta,
                            InterpMode::linear, 2.0);
}

/// Functional-equation continuation zeta_L(s) (E(s) + zeta_R(s)), valid on
/// Re(s) > 0 away from the Moran root set.
inline ZetaEval tube_zeta_continued(const ScalingOperator& op, const TubeTable& table,
                                    const ResidualTable& res, Complex s, const ZetaConfig& cfg) {
    if (s.real() <= 0.0)
        throw Error("tube_zeta_continued: continuation is valid only for Re(s) > 0");
    Complex den = op.moran_denominator(s);
    Complex dden = op.moran_derivative(s);
    if (std::abs(den) / std::max(std::abs(dden), 1e-12) < 1e-8)
        throw Error("tube_zeta_continued: s lies within 1e-8 of a complex dimension; "
                    "query the pole through residue_at instead");
    Complex zl = 1.0 / den;
    MellinResult e = entire_E(op, table, s, cfg);
    MellinResult r = zeta_R(res, s, cfg);
    return {s, zl * (e.value + r.value), ZetaPath::continued,
            std::abs(zl) * (e.err + r.err)};
}

/// Residue of the tube zeta at a simple complex dimension:
/// a_omega = Res(zeta_L; omega) (E(omega) + zeta_R(omega)).
inline ResidueTerm residue_at(const ScalingOperator& op, const TubeTable& table,
                              const ResidualTable& res, const ComplexRoot& root,
                              const ZetaConfig& cfg) {
    if (root.order != 1)
        throw Error("residue_at: pole of order " + std::to_string(root.order) +
                    " is not simple");
    Complex rzl = residue_zeta_L(op, root.omega);
    MellinResult e = entire_E(op, table, root.omega, cfg);
    MellinResult r = zeta_R(res, root.omega, cfg);
    ResidueTerm term;
    term.omega = root.omega;
    term.a_omega = rzl * (e.value + r.value);
    term.err = std::abs(rzl) * (e.err + r.err);
    return term;
}

/// Numerical Mellin inversion (1/2pi) integral over tau in [-T, T] of
/// x^-(c+i tau) F(c+i tau) by trapezoid; returns the real part. The error
/// estimate is the magnitude of the contribution of the last decade
/// |tau| in [T/10, T].
inline ValueWithError mellin_inverse_numeric(const std::function<Complex(Complex)>& transform,
                                             double x, double c, double T, int points) {
    if (!(x > 0.0)) throw Error("mellin_inverse_numeric: x must be positive");
    if (!(T > 0.0)) throw Error("mellin_inverse_numeric: T must be positive");
    if (points < 16) throw Error("mellin_inverse_numeric: needs at least 16 points");
    double dt = 2.0 * T / (points - 1);
    Complex sum{0.0, 0.0}, tail{0.0, 0.0};
    for (int j = 0; j < points; ++j) {
        double tau = -T + j * dt;
        Complex s{c, tau};
        Complex g = std::exp(-s * std::log(x)) * transform(s);
        double w = (j == 0 || j == points - 1) ? 0.5 : 1.0;
        sum += w * g;
        if (std::abs(tau) >= T / 10.0) tail += w * g;
    }
    double scale = dt / (2.0 * kPi);
    return {(sum * scale).real(), std::abs(tail) * scale};
}

}  // namespace koch
