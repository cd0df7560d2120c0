#pragma once

#include "koch/tube.hpp"

namespace koch {

struct ScalingTerm {
    int multiplicity = 1;
    double ratio = 0.5;
};

/// Mixed scaling operator L = sum_i a_i M_{lambda_i} with distinct ratios in
/// (0,1) and positive integer multiplicities. Acting on tube tables it
/// carries the ambient-dimension weights: L[V](eps) = sum a_i lambda_i^N
/// V(eps/lambda_i).
class ScalingOperator {
public:
    ScalingOperator(std::vector<ScalingTerm> terms, int ambient_dim = 2)
        : terms_(std::move(terms)), dim_(ambient_dim) {
        if (terms_.empty()) throw Error("ScalingOperator: no terms");
        for (const auto& t : terms_) {
            if (t.multiplicity < 1)
                throw Error("ScalingOperator: multiplicities must be positive integers");
            if (!(t.ratio > 0.0 && t.ratio < 1.0))
                throw Error("ScalingOperator: ratios must lie strictly inside (0,1)");
        }
        std::sort(terms_.begin(), terms_.end(),
                  [](const ScalingTerm& a, const ScalingTerm& b) { return a.ratio > b.ratio; });
        for (std::size_t i = 0; i + 1 < terms_.size(); ++i)
            if (terms_[i].ratio == terms_[i + 1].ratio)
                throw Error("ScalingOperator: ratios must be pairwise distinct");
    }

    const std::vector<ScalingTerm>& terms() const { return terms_; }
    int ambient_dim() const { return dim_; }
    double min_ratio() const { return terms_.back().ratio; }

    /// sum a_i lambda_i^s
    Complex moran_sum(Complex s) const {
        Complex acc{0.0, 0.0};
        for (const auto& t : terms_)
            acc += static_cast<double>(t.multiplicity) * std::exp(s * std::log(t.ratio));
        return acc;
    }
    /// f(s) = 1 - sum a_i lambda_i^s, the zeta_L denominator
    Complex moran_denominator(Complex s) const { return 1.0 - moran_sum(s); }
    /// f'(s) = sum a_i log(1/lambda_i) lambda_i^s
    Complex moran_derivative(Complex s) const {
        Complex acc{0.0, 0.0};
        for (const auto& t : terms_)
            acc += static_cast<double>(t.multiplicity) * std::log(1.0 / t.ratio) *
                   std::exp(s * std::log(t.ratio));
        return acc;
    }

private:
    std::vector<ScalingTerm> terms_;
    int dim_;
};

/// {(2, ell), (n-1, r)}, merged to {(n+1, r)} when ell == r (exactly when r
/// is supplied as a rational with (1-r)/2 == r; within 1e-12 otherwise).
inline ScalingOperator koch_operator(const KochParams& p) {
    bool merged;
    if (p.r_exact) {
        merged = (*p.ell_exact() == *p.r_exact);
    } else {
        merged = std::abs(p.ell - p.r) < 1e-12;
    }
    if (merged) return ScalingOperator({{p.n + 1, p.r}}, 2);
    return ScalingOperator({{2, p.ell}, {p.n - 1, p.r}}, 2);
}

/// L[V](eps) = sum a_i lambda_i^N V(eps/lambda_i), V interpolated log-log
/// between samples; interpolation error is folded into the reported error.
inline ValueWithError apply_operator(const ScalingOperator& op, const TubeTable& table,
                                     double eps) {
    double acc = 0.0, err = 0.0;
    for (const auto& t : op.terms()) {
        double arg = eps / t.ratio;
        if (!table.in_range(arg))
            throw Error("apply_operator: eps/lambda = " + fmt_double(arg) +
                        " for ratio " + fmt_double(t.ratio) + " is outside the table range");
        ValueWithError val = table.interpolate(arg);
        double wgt = t.multiplicity * std::pow(t.ratio, op.ambient_dim());
        acc += wgt * val.value;
        err += wgt * val.err;
    }
    return {acc, err};
}

/// R(eps) = V(eps) - L[V](eps), defined at the grid points whose scaled
/// arguments all stay inside the table (no extrapolation here).
struct ResidualSample {
    double eps = 0.0;
    double residual = 0.0;
    double err = 0.0;
};

class ResidualTable {
public:
    ResidualTable() = default;
    explicit ResidualTable(std::vector<ResidualSample> s) : samples_(std::move(s)) {
        for (std::size_t i = 0; i + 1 < samples_.size(); ++i)
            if (!(samples_[i].eps < samples_[i + 1].eps))
                throw Error("ResidualTable: eps values must be strictly increasing");
    }
    const std::vector<ResidualSample>& samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }
    double eps_min() const { return samples_.front().eps; }
    double eps_max() const { return samples_.back().eps; }

private:
    std::vector<ResidualSample> samples_;
};

inline ResidualTable residual(const ScalingOperator& op, const TubeTable& table) {
    std::vector<ResidualSample> out;
    for (const auto& s : table.samples()) {
        double maxArg = s.eps / op.min_ratio();
        if (!table.in_range(maxArg)) continue;
        ValueWithError lv = apply_operator(op, table, s.eps);
        out.push_back({s.eps, s.volume - lv.value, s.err + lv.err});
    }
    if (out.empty())
        throw Error("residual: no admissible grid points (table range too narrow)");
    return ResidualTable(std::move(out));
}

/// Per-sector remainder coefficient theta_n + 2 cot(theta_n / 2); the whole
/// snowflake obeys the same bound with an extra factor n.
inline double remainder_bound(const KochParams& p) {
    return p.theta_n + 2.0 / std::tan(p.theta_n / 2.0);
}

struct RemainderReport {
    bool passes = true;
    /// largest residual - upper_bound excess (positive = violation)
    double worst_upper_excess = -std::numeric_limits<double>::infinity();
    /// most negative residual + tolerance margin (positive = violation)
    double worst_lower_excess = -std::numeric_limits<double>::infinity();
    double worst_eps = 0.0;
    std::size_t checked = 0;
    double coefficient = 0.0;  // n * (theta_n + 2 cot(theta_n/2))
};

/// Pass iff -err <= R(eps) <= n * coefficient * eps^2 + err at every point,
/// with err the propagated estimator error. R is itself a volume, hence the
/// nonnegativity side of the check.
inline RemainderReport check_remainder(const ResidualTable& res, const KochParams& p) {
    RemainderReport rep;
    rep.coefficient = p.n * remainder_bound(p);
    for (const auto& s : res.samples()) {
        ++rep.checked;
        double upper = rep.coefficient * s.eps * s.eps + s.err;
        double upperExcess = s.residual - upper;
        double lowerExcess = -(s.residual + s.err);
        if (upperExcess > rep.worst_upper_excess) {
            rep.worst_upper_excess = upperExcess;
            rep.worst_eps = s.eps;
        }
        rep.worst_lower_excess = std::max(rep.worst_lower_excess, lowerExcess);
        if (upperExcess > 0.0 || lowerExcess > 0.0) rep.passes = false;
    }
    return rep;
}

}  // namespace koch
