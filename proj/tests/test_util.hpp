// Shared helpers for the test suites: relative error at guard precision and
// seeded random value generators.
#pragma once

#include <demm/decimal.hpp>

#include <random>
#include <vector>

namespace demm::test {

using Rng = std::mt19937_64;

template <unsigned D>
DecGuard rel_error(const DecT<D>& actual, const DecT<D>& expect) {
    const DecGuard a(actual), e(expect);
    const DecGuard scale = (std::max)(abs(a), abs(e));
    if (scale.is_zero()) return DecGuard(0);
    return abs(a - e) / scale;
}

template <unsigned D>
bool close_rel(const DecT<D>& actual, const DecT<D>& expect, const DecGuard& tol) {
    return rel_error(actual, expect) <= tol;
}

inline DecGuard tol(const char* s) { return DecGuard(s); }

// Positive value with log10 magnitude uniform in [lo, hi].
inline Dec random_positive(Rng& rng, double lo = -3.0, double hi = 3.0) {
    std::uniform_real_distribution<double> mag(lo, hi);
    std::uniform_real_distribution<double> mant(1.0, 10.0);
    const double m = mant(rng);
    const int e = static_cast<int>(mag(rng));
    return Dec(m) * pow_d(Dec(10), Dec(e));
}

inline std::vector<Dec> random_positive_vec(Rng& rng, std::size_t n, double lo = -3.0, double hi = 3.0) {
    std::vector<Dec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_positive(rng, lo, hi));
    return out;
}

// Trade size that cannot push the output reserve through the positivity
// floor: caps the input so (r_in/(r_in+dx))^(w_in/w_out) stays above ~1e-18.
inline Dec safe_trade_size(Rng& rng, const Dec& r_in, const Dec& w_in, const Dec& w_out) {
    const double e = (w_in / w_out).convert_to<double>();
    const double cap = std::expm1(40.0 / std::max(1.0, e)) * 0.5;
    std::uniform_real_distribution<double> mag(-3.0, 0.3);
    const double frac = std::min(cap, std::pow(10.0, mag(rng)));
    return r_in * Dec(frac);
}

}  // namespace demm::test
