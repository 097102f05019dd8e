// Weighted constant-product pool with a scalar LP supply. Weights are fixed
// at launch; trades move reserves along the invariant surface.
#pragma once

#include <demm/decimal.hpp>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace demm {

// Reserves and weights must stay at or above this; operations that would
// cross it are rejected.
inline const Dec kPositivityFloor = Dec("1e-30");

// Output of a swap of dx_effective into a pool leg: r_out * (1 - (r_in /
// (r_in + dx))^(w_in/w_out)). Evaluated entirely at guard precision and
// truncated once, so rounding can only shrink the payout and the invariant
// value never decreases.
inline Dec quote_swap_output(const Dec& r_in, const Dec& r_out, const Dec& w_in, const Dec& w_out,
                             const Dec& dx_effective) {
    using G = DecGuard;
    const G ratio = G(r_in) / (G(r_in) + G(dx_effective));
    const G e = G(w_in) / G(w_out);
    G q;
    if (e == floor(e) && abs(e) <= 1000000) {
        q = pow(ratio, e.convert_to<long long>());
    } else {
        q = exp(e * log(ratio));
    }
    return trunc_sig(Dec(G(r_out) * (G(1) - q)));
}

struct CpmmProvideResult {
    Dec minted;
    std::vector<Dec> deposited;
};

struct CpmmPool {
    std::vector<std::string> tokens;
    std::vector<Dec> reserves;
    std::vector<Dec> weights;
    Dec lp_supply;

    static CpmmPool create(std::vector<std::string> tokens, std::vector<Dec> reserves,
                           std::vector<Dec> weights, Dec initial_lp = Dec(1)) {
        if (reserves.size() < 2) throw std::invalid_argument("pool needs at least two tokens");
        if (reserves.size() != weights.size()) throw std::invalid_argument("reserves/weights length mismatch");
        if (tokens.empty()) {
            for (std::size_t t = 0; t < reserves.size(); ++t) tokens.push_back("t" + std::to_string(t + 1));
        }
        if (tokens.size() != reserves.size()) throw std::invalid_argument("tokens/reserves length mismatch");
        for (std::size_t a = 0; a < tokens.size(); ++a)
            for (std::size_t b = a + 1; b < tokens.size(); ++b)
                if (tokens[a] == tokens[b]) throw std::invalid_argument("duplicate token id: " + tokens[a]);
        for (const Dec& r : reserves)
            if (!(r > 0)) throw std::invalid_argument("reserves must be > 0");
        for (const Dec& w : weights)
            if (!(w > 0)) throw std::invalid_argument("weights must be > 0");
        if (!(initial_lp > 0)) throw std::invalid_argument("initial LP supply must be > 0");
        return CpmmPool{std::move(tokens), std::move(reserves), std::move(weights), std::move(initial_lp)};
    }

    std::size_t size() const { return reserves.size(); }

    std::size_t index_of(std::string_view token) const {
        for (std::size_t t = 0; t < tokens.size(); ++t)
            if (tokens[t] == token) return t;
        throw std::invalid_argument("unknown token: " + std::string(token));
    }

    void check_pair(std::size_t in, std::size_t out) const {
        if (in >= size() || out >= size()) throw std::invalid_argument("token index out of range");
        if (in == out) throw std::invalid_argument("same-token trade");
    }

    // Swap amount_in of token `in` for token `out`; returns the amount paid
    // out. Output is truncated at working precision so the invariant value
    // never decreases.
    Dec trade(std::size_t in, std::size_t out, const Dec& amount_in) {
        check_pair(in, out);
        if (!(amount_in > 0)) throw std::invalid_argument("trade amount must be > 0");
        const Dec amount_out =
            quote_swap_output(reserves[in], reserves[out], weights[in], weights[out], amount_in);
        if (reserves[out] - amount_out < kPositivityFloor)
            throw std::domain_error("trade would deplete output reserve");
        reserves[in] += amount_in;
        reserves[out] -= amount_out;
        return amount_out;
    }

    // Deposit alpha*reserves, minting alpha*lp_supply LP tokens.
    CpmmProvideResult provide(const Dec& alpha) {
        if (!(alpha > 0)) throw std::invalid_argument("alpha must be > 0");
        CpmmProvideResult res;
        res.minted = trunc_sig(alpha * lp_supply);
        res.deposited.reserve(size());
        for (Dec& r : reserves) {
            const Dec in = alpha * r;
            res.deposited.push_back(in);
            r += in;
        }
        lp_supply += res.minted;
        return res;
    }

    // Redeem alpha of the LP supply for alpha of every reserve.
    std::vector<Dec> withdraw(const Dec& alpha) {
        if (!(alpha > 0) || alpha > 1) throw std::invalid_argument("alpha must be in (0,1]");
        std::vector<Dec> payout;
        payout.reserve(size());
        if (alpha == 1) {
            payout = reserves;
            for (Dec& r : reserves) r = 0;
            lp_supply = 0;
            return payout;
        }
        for (Dec& r : reserves) {
            const Dec out = trunc_sig(alpha * r);
            if (r - out < kPositivityFloor) throw std::domain_error("withdrawal would deplete reserve");
            payout.push_back(out);
            r -= out;
        }
        lp_supply -= alpha * lp_supply;
        return payout;
    }

    // Relative spot price P_{out/in} = (r_in/w_in) / (r_out/w_out).
    Dec spot_price(std::size_t out, std::size_t in) const {
        check_pair(in, out);
        return (reserves[in] / weights[in]) / (reserves[out] / weights[out]);
    }
};

// Sum of w_t * ln(r_t) at guard precision; the invariant value itself is
// never materialized.
inline DecGuard log_invariant(const std::vector<Dec>& reserves, const std::vector<Dec>& weights) {
    DecGuard acc = 0;
    for (std::size_t t = 0; t < reserves.size(); ++t) acc += DecGuard(weights[t]) * log(DecGuard(reserves[t]));
    return acc;
}

}  // namespace demm
