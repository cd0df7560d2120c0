#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace koch {

using Complex = std::complex<double>;

/// Library-wide error type. Thrown by operations whose contracts are violated
/// or whose numerical preconditions fail; the message names the offender.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// A value with a propagated error estimate attached.
struct ValueWithError {
    double value = 0.0;
    double err = 0.0;
};

struct ComplexWithError {
    Complex value{0.0, 0.0};
    double err = 0.0;
};

/// Compensated (Kahan) accumulator. Summation order fixes the result bit for
/// bit, so reductions stay deterministic across thread counts when the tile
/// order is fixed.
class KahanSum {
public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// exp(z) - 1 with small-|z| care, for complex z.
inline Complex cexpm1(Complex z) {
    if (std::abs(z) < 1e-4) {
        // z + z^2/2 + z^3/6 + z^4/24, relative error below 1e-21 here
        return z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0))));
    }
    return std::exp(z) - 1.0;
}

/// Integral of t^(w-1) over [a, b] for 0 < a <= b: (b^w - a^w)/w, with the
/// w -> 0 limit log(b/a) handled smoothly.
inline Complex power_integral(Complex w, double a, double b) {
    double logRatio = std::log(b / a);
    Complex aw = std::exp(w * std::log(a));
    if (std::abs(w) * logRatio < 1e-8) {
        return aw * logRatio * (1.0 + 0.5 * w * logRatio);
    }
    return aw * cexpm1(w * logRatio) / w;
}

/// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware count).
/// Work items are claimed through an atomic counter; fn must not assume any
/// particular assignment of items to workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    unsigned t = threads > 0 ? static_cast<unsigned>(threads) : (hw ? hw : 1u);
    if (t > n) t = static_cast<unsigned>(n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(t - 1);
    for (unsigned k = 0; k + 1 < t; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace koch
