// Exact decimal layer: canonical strings, significant-digit rounding, and
// guard-digit transcendentals (pow_d, geo_mean) on top of cpp_dec_float.
#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace demm {

namespace mp = boost::multiprecision;

template <unsigned Digits>
using DecT = mp::number<mp::cpp_dec_float<Digits>, mp::et_off>;

inline constexpr unsigned kWorkingDigits = 50;
inline constexpr unsigned kGuardDigits = 20;

// Working type for all protocol quantities. Guard computations promote to
// DecT<kWorkingDigits + kGuardDigits> and round back.
using Dec = DecT<kWorkingDigits>;
using DecGuard = DecT<kWorkingDigits + kGuardDigits>;

namespace detail {

// Normalized digit form: value = sign * 0.<digits> * 10^exp10 where digits has
// no leading and no trailing zero. Empty digits means zero.
struct Digits10 {
    bool negative = false;
    std::string digits;
    long exp10 = 0;
};

template <unsigned D>
Digits10 decompose(const DecT<D>& x) {
    Digits10 out;
    if (x.is_zero()) return out;
    const int full = std::numeric_limits<DecT<D>>::max_digits10;
    const std::string s = x.str(full, std::ios_base::scientific);

    std::size_t pos = 0;
    if (s[pos] == '-') {
        out.negative = true;
        ++pos;
    } else if (s[pos] == '+') {
        ++pos;
    }
    const std::size_t epos = s.find_first_of("eE", pos);
    std::string mantissa = s.substr(pos, epos - pos);
    long exp = 0;
    if (epos != std::string::npos) exp = std::stol(s.substr(epos + 1));

    const std::size_t dot = mantissa.find('.');
    if (dot != std::string::npos) mantissa.erase(dot, 1);
    // mantissa is d.ddd -> first digit is the 10^exp place
    out.exp10 = exp + 1;
    const std::size_t last = mantissa.find_last_not_of('0');
    if (last == std::string::npos) return Digits10{};  // all zeros
    out.digits = mantissa.substr(0, last + 1);
    return out;
}

// Round the digit string to at most n significant digits. Truncation drops the
// tail; otherwise round half away from zero.
inline void round_digits(Digits10& p, unsigned n, bool truncate) {
    if (p.digits.size() <= n) return;
    const char next = p.digits[n];
    p.digits.resize(n);
    if (!truncate && next >= '5') {
        int i = static_cast<int>(p.digits.size()) - 1;
        for (; i >= 0; --i) {
            if (p.digits[i] != '9') {
                ++p.digits[i];
                break;
            }
            p.digits[i] = '0';
        }
        if (i < 0) {
            p.digits.insert(p.digits.begin(), '1');
            ++p.exp10;
        }
    }
    const std::size_t last = p.digits.find_last_not_of('0');
    if (last == std::string::npos) {
        p = Digits10{};
    } else {
        p.digits.resize(last + 1);
    }
}

template <unsigned D>
DecT<D> compose(const Digits10& p) {
    if (p.digits.empty()) return DecT<D>(0);
    std::string s;
    if (p.negative) s += '-';
    s += "0.";
    s += p.digits;
    s += 'e';
    s += std::to_string(p.exp10);
    return DecT<D>(s);
}

template <unsigned DTo, unsigned DFrom>
DecT<DTo> demote_round(const DecT<DFrom>& x) {
    Digits10 p = decompose(x);
    round_digits(p, DTo, /*truncate=*/false);
    return compose<DTo>(p);
}

}  // namespace detail

// Plain decimal form: optional sign, digits, optional fraction. No exponent
// notation; this is the only format accepted in persisted files.
template <unsigned D>
DecT<D> parse_decimal(std::string_view text) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    if (n > 0 && (text[0] == '+' || text[0] == '-')) i = 1;
    std::size_t int_digits = 0;
    while (i < n && text[i] >= '0' && text[i] <= '9') {
        ++i;
        ++int_digits;
    }
    if (int_digits == 0) throw std::invalid_argument("malformed decimal: '" + std::string(text) + "'");
    if (i < n && text[i] == '.') {
        ++i;
        std::size_t frac_digits = 0;
        while (i < n && text[i] >= '0' && text[i] <= '9') {
            ++i;
            ++frac_digits;
        }
        if (frac_digits == 0) throw std::invalid_argument("malformed decimal: '" + std::string(text) + "'");
    }
    if (i != n) throw std::invalid_argument("malformed decimal: '" + std::string(text) + "'");
    return DecT<D>(std::string(text));
}

inline Dec parse_dec(std::string_view text) { return parse_decimal<kWorkingDigits>(text); }

// Lossless plain-decimal rendering of the stored value, trailing zeros trimmed.
template <unsigned D>
std::string format_decimal(const DecT<D>& x) {
    const detail::Digits10 p = detail::decompose(x);
    if (p.digits.empty()) return "0";
    std::string s;
    if (p.negative) s += '-';
    const long len = static_cast<long>(p.digits.size());
    if (p.exp10 >= len) {
        s += p.digits;
        s.append(static_cast<std::size_t>(p.exp10 - len), '0');
    } else if (p.exp10 > 0) {
        s += p.digits.substr(0, static_cast<std::size_t>(p.exp10));
        s += '.';
        s += p.digits.substr(static_cast<std::size_t>(p.exp10));
    } else {
        s += "0.";
        s.append(static_cast<std::size_t>(-p.exp10), '0');
        s += p.digits;
    }
    return s;
}

// Truncate toward zero at n significant digits. Protocol outputs (amounts
// leaving a pool, LP tokens minted) pass through this so rounding always
// favors the pool.
template <unsigned D>
DecT<D> trunc_sig(const DecT<D>& x, unsigned n = kWorkingDigits) {
    detail::Digits10 p = detail::decompose(x);
    detail::round_digits(p, n, /*truncate=*/true);
    return detail::compose<D>(p);
}

// Round half away from zero at n significant digits.
template <unsigned D>
DecT<D> round_sig(const DecT<D>& x, unsigned n = kWorkingDigits) {
    detail::Digits10 p = detail::decompose(x);
    detail::round_digits(p, n, /*truncate=*/false);
    return detail::compose<D>(p);
}

// base^exponent for base > 0. Exact short-circuits for exponent 0/1, base 1,
// and integral exponents; everything else runs exp(e*ln b) with kGuardDigits
// extra digits and rounds back to the working precision.
template <unsigned D>
DecT<D> pow_d(const DecT<D>& base, const DecT<D>& exponent) {
    if (!(base > 0)) throw std::domain_error("pow_d: base must be > 0");
    if (exponent.is_zero()) return DecT<D>(1);
    if (exponent == 1) return base;
    if (base == 1) return DecT<D>(1);
    if (exponent == floor(exponent) && abs(exponent) <= 1000000) {
        return pow(base, exponent.template convert_to<long long>());
    }
    using Guard = DecT<D + kGuardDigits>;
    const Guard r = exp(Guard(exponent) * log(Guard(base)));
    return detail::demote_round<D>(r);
}

// Geometric mean of strictly positive values, computed as exp(mean of ln).
template <unsigned D>
DecT<D> geo_mean(const std::vector<DecT<D>>& values) {
    if (values.empty()) throw std::domain_error("geo_mean: empty input");
    bool all_equal = true;
    for (const auto& v : values) {
        if (!(v > 0)) throw std::domain_error("geo_mean: entries must be > 0");
        if (v != values.front()) all_equal = false;
    }
    if (all_equal) return values.front();
    using Guard = DecT<D + kGuardDigits>;
    Guard sum = 0;
    for (const auto& v : values) sum += log(Guard(v));
    return detail::demote_round<D>(exp(sum / Guard(values.size())));
}

}  // namespace demm
