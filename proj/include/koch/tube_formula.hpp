#pragma once

#include "koch/zeta.hpp"

namespace koch {

/// Pochhammer symbol (s)_k = s (s+1) ... (s+k-1), with (s)_0 = 1.
inline Complex pochhammer(Complex s, int k) {
    if (k < 0) throw Error("pochhammer: k must be nonnegative");
    Complex acc{1.0, 0.0};
    for (int i = 0; i < k; ++i) acc *= s + static_cast<double>(i);
    return acc;
}

/// V^[k](t) = sum over terms with |Im omega| <= T of
/// a_omega t^(2-omega+k) / (3-omega)_k, for simple poles and k >= 2.
/// Terms must be closed under conjugation; conjugate pairs are summed as
/// 2 Re(...) so the result is exactly real.
inline std::vector<double> reconstruct_Vk(const std::vector<ResidueTerm>& terms, int k,
                                          const std::vector<double>& t_grid,
                                          double truncation_T =
                                              std::numeric_limits<double>::infinity()) {
    if (k < 2)
        throw Error("reconstruct_Vk: pointwise tube formulas require k >= 2");
    for (double t : t_grid)
        if (!(t > 0.0)) throw Error("reconstruct_Vk: grid points must be positive");

    std::vector<const ResidueTerm*> real_terms;
    std::vector<const ResidueTerm*> upper_terms;
    for (const auto& term : terms) {
        if (std::abs(term.omega.imag()) > truncation_T) continue;
        if (std::abs(term.omega.imag()) <= 1e-12) {
            real_terms.push_back(&term);
            continue;
        }
        if (term.omega.imag() < 0.0) continue;  // matched below to its partner
        upper_terms.push_back(&term);
    }
    // conjugate-closure check: every upper-half term needs a lower-half partner
    for (const ResidueTerm* up : upper_terms) {
        bool found = false;
        for (const auto& term : terms) {
            if (term.omega.imag() > 0.0) continue;
            if (std::abs(term.omega - std::conj(up->omega)) < 1e-8 &&
                std::abs(term.a_omega - std::conj(up->a_omega)) <
                    1e-8 * (1.0 + std::abs(up->a_omega))) {
                found = true;
                break;
            }
        }
        if (!found)
            throw Error("reconstruct_Vk: term at omega = " + fmt_double(up->omega.real()) +
                        " + " + fmt_double(up->omega.imag()) +
                        "i has no conjugate partner");
    }

    std::vector<double> out(t_grid.size(), 0.0);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double lt = std::log(t_grid[i]);
        double acc = 0.0;
        for (const ResidueTerm* rt : real_terms) {
            Complex expo = 2.0 - rt->omega + static_cast<double>(k);
            Complex v = rt->a_omega * std::exp(expo * lt) / pochhammer(3.0 - rt->omega, k);
            acc += v.real();
        }
        for (const ResidueTerm* rt : upper_terms) {
            Complex expo = 2.0 - rt->omega + static_cast<double>(k);
            Complex v = rt->a_omega * std::exp(expo * lt) / pochhammer(3.0 - rt->omega, k);
            acc += 2.0 * v.real();
        }
        out[i] = acc;
    }
    return out;
}

struct ReconstructionRow {
    double t = 0.0;
    double measured = 0.0;
    double reconstructed = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
};

struct ReconstructionReport {
    int k = 2;
    double truncation_T = 0.0;
    std::vector<ReconstructionRow> rows;
    double max_rel_err = 0.0;
    double l2_rel_err = 0.0;
    /// fitted exponent of the discrepancy ~ c t^beta over the lower half of
    /// the range; NaN when too few points carry a nonzero discrepancy
    double beta = std::numeric_limits<double>::quiet_NaN();
};

/// Compares a measured V^[k] table against reconstructed values on the same
/// grid, restricted to [t_lo, t_hi].
inline ReconstructionReport compare(const TubeTable& measured,
                                    const std::vector<double>& reconstructed, double t_lo,
                                    double t_hi, int k,
                                    double truncation_T =
                                        std::numeric_limits<double>::infinity()) {
    if (measured.size() != reconstructed.size())
        throw Error("compare: reconstruction must be evaluated on the measured grid");
    ReconstructionReport rep;
    rep.k = k;
    rep.truncation_T = truncation_T;
    double l2num = 0.0, l2den = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        const TubeSample& s = measured.samples()[i];
        if (s.eps < t_lo || s.eps > t_hi) continue;
        ReconstructionRow row;
        row.t = s.eps;
        row.measured = s.volume;
        row.reconstructed = reconstructed[i];
        row.abs_err = std::abs(row.measured - row.reconstructed);
        row.rel_err = row.measured != 0.0 ? row.abs_err / std::abs(row.measured)
                                          : std::numeric_limits<double>::infinity();
        rep.max_rel_err = std::max(rep.max_rel_err, row.rel_err);
        l2num += row.abs_err * row.abs_err;
        l2den += row.measured * row.measured;
        rep.rows.push_back(row);
    }
    if (rep.rows.empty()) throw Error("compare: empty overlap between grid and range");
    rep.l2_rel_err = l2den > 0.0 ? std::sqrt(l2num / l2den)
                                 : std::numeric_limits<double>::infinity();

    // discrepancy exponent fit on the lower half of the log range
    double tmid = std::sqrt(rep.rows.front().t * rep.rows.back().t);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (const auto& row : rep.rows) {
        if (row.t > tmid || row.abs_err <= 0.0) continue;
        double lx = std::log(row.t), ly = std::log(row.abs_err);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n >= 2) {
        double det = n * sxx - sx * sx;
        if (std::abs(det) > 1e-30) rep.beta = (n * sxy - sx * sy) / det;
    }
    return rep;
}

}  // namespace koch
