#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>

#include "koch/common.hpp"

namespace koch {

/// Exact rational in lowest terms, 0 < num/den expected for scaling ratios.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw Error("rational: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

/// Parses "p/q" or a plain integer as a rational; returns nullopt for
/// anything else (e.g. a decimal, which stays floating point).
inline std::optional<Rational> parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        std::size_t pos = 0;
        if (slash == std::string::npos) {
            std::int64_t n = std::stoll(s, &pos);
            if (pos != s.size()) return std::nullopt;
            return Rational(n, 1);
        }
        std::int64_t n = std::stoll(s.substr(0, slash), &pos);
        if (pos != slash) return std::nullopt;
        std::int64_t d = std::stoll(s.substr(slash + 1), &pos);
        if (pos != s.size() - slash - 1) return std::nullopt;
        return Rational(n, d);
    } catch (...) {
        return std::nullopt;
    }
}

/// Signed prime factorization exponents of num/den (den primes negative).
inline std::map<std::int64_t, std::int64_t> factor_exponents(const Rational& q) {
    std::map<std::int64_t, std::int64_t> out;
    auto accumulate = [&out](std::int64_t v, std::int64_t sign) {
        for (std::int64_t p = 2; p * p <= v; ++p) {
            while (v % p == 0) { out[p] += sign; v /= p; }
        }
        if (v > 1) out[v] += sign;
    };
    if (q.num <= 0) throw Error("factor_exponents: expects a positive rational");
    accumulate(q.num, +1);
    accumulate(q.den, -1);
    for (auto it = out.begin(); it != out.end();) {
        it = it->second == 0 ? out.erase(it) : std::next(it);
    }
    return out;
}

}  // namespace koch
