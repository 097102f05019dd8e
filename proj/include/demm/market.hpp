// External price environment and the no-arbitrage fixed point. Equilibria are
// computed in log-space; the invariant value itself is never materialized.
#pragma once

#include <demm/cpmm.hpp>
#include <demm/demm.hpp>

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace demm {

// External unit prices (dollars per token).
struct PriceVector {
    std::map<std::string, Dec> prices;

    static PriceVector of(std::initializer_list<std::pair<std::string, Dec>> entries) {
        PriceVector pv;
        for (const auto& [token, price] : entries) pv.set(token, price);
        return pv;
    }

    void set(const std::string& token, const Dec& price) {
        if (!(price > 0)) throw std::invalid_argument("price must be > 0 for " + token);
        prices[token] = price;
    }

    const Dec& at(const std::string& token) const {
        const auto it = prices.find(token);
        if (it == prices.end()) throw std::invalid_argument("missing price for " + token);
        return it->second;
    }
};

namespace detail {

// Unique reserves with the same weights, the same log-invariant, and value
// shares proportional to the weights:
//   r'_t = c * w_t / p_t,  ln c = sum_t w_t*(ln r_t - ln(w_t/p_t)) / sum_t w_t
inline std::vector<Dec> equilibrium_reserves(const std::vector<std::string>& tokens,
                                             const std::vector<Dec>& reserves,
                                             const std::vector<Dec>& weights,
                                             const PriceVector& prices) {
    using G = DecGuard;
    const std::size_t n = reserves.size();
    std::vector<G> value_scale(n);  // w_t / p_t
    G num = 0, den = 0;
    for (std::size_t t = 0; t < n; ++t) {
        value_scale[t] = G(weights[t]) / G(prices.at(tokens[t]));
        num += G(weights[t]) * (log(G(reserves[t])) - log(value_scale[t]));
        den += G(weights[t]);
    }
    const G c = exp(num / den);
    std::vector<Dec> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = Dec(c * value_scale[t]);
    return out;
}

}  // namespace detail

inline DemmPool demm_equilibrium(const DemmPool& pool, const PriceVector& prices) {
    DemmPool out = pool;
    out.reserves = detail::equilibrium_reserves(pool.tokens, pool.reserves, pool.weights, prices);
    return out;
}

inline CpmmPool cpmm_equilibrium(const CpmmPool& pool, const PriceVector& prices) {
    CpmmPool out = pool;
    out.reserves = detail::equilibrium_reserves(pool.tokens, pool.reserves, pool.weights, prices);
    return out;
}

// Verification oracle for two-token pools: picks the trade direction from the
// spot-vs-external comparison and bisects the trade size until the spot price
// matches the external ratio, then performs that one trade.
inline DemmPool arbitrage_oracle(const DemmPool& pool, const PriceVector& prices) {
    if (pool.size() != 2) throw std::invalid_argument("arbitrage oracle handles two-token pools only");
    using G = DecGuard;
    const G tol("1e-31");

    // E = external price of token1 in units of token0; pool spot P_{1/0}.
    const G external = G(prices.at(pool.tokens[1])) / G(prices.at(pool.tokens[0]));
    const G spot0 = G(pool.spot_price(1, 0));
    if (abs(spot0 - external) <= tol * external) return pool;  // no arbitrage, no trade

    // Buying token `out` raises P_{out/in}; pick the underpriced side as `out`.
    const std::size_t in = spot0 < external ? 0 : 1;
    const std::size_t out = 1 - in;
    // target spot P_{out/in}
    const G target = in == 0 ? external : G(1) / external;

    const G r_in(pool.reserves[in]), r_out(pool.reserves[out]);
    const G w_in(pool.weights[in]), w_out(pool.weights[out]);
    const G e = w_in / w_out;
    const G log_r_in = log(r_in);
    const auto spot_after = [&](const G& x) {
        const G rin = r_in + x;
        const G rout = r_out * exp(e * (log_r_in - log(rin)));
        return (rin / w_in) / (rout / w_out);
    };

    G lo = 0, hi = r_in;
    while (spot_after(hi) < target) hi *= 2;

    // Pre-narrow the bracket at hardware precision, with a slack factor so
    // double rounding cannot exclude the root; verify before adopting it.
    {
        const double rind = r_in.convert_to<double>();
        const double routd = r_out.convert_to<double>();
        const double ed = e.convert_to<double>();
        const double targetd = target.convert_to<double>();
        const double wratio = (w_out / w_in).convert_to<double>();
        double lod = 0, hid = hi.convert_to<double>();
        if (std::isfinite(rind) && std::isfinite(routd) && std::isfinite(ed) &&
            std::isfinite(targetd) && std::isfinite(hid) && hid > 0 && routd > 0) {
            for (int iter = 0; iter < 80; ++iter) {
                const double midd = (lod + hid) / 2;
                const double rin2 = rind + midd;
                const double p = (rin2 / routd) * std::exp(ed * (std::log(rind) - std::log(rin2))) * wratio;
                if (!std::isfinite(p)) break;
                if (p < targetd)
                    lod = midd;
                else
                    hid = midd;
            }
            const G nlo = G(lod) * G("0.99999");
            G nhi = G(hid) * G("1.00001") + r_in * G("1e-12");
            if (nhi > hi) nhi = hi;
            if (nlo < nhi && !(spot_after(nlo) > target) && !(spot_after(nhi) < target)) {
                lo = nlo;
                hi = nhi;
            }
        }
    }

    G mid = (lo + hi) / 2;
    for (int iter = 0; iter < 260; ++iter) {
        mid = (lo + hi) / 2;
        const G p = spot_after(mid);
        if (abs(p - target) <= tol * target) break;
        if (p < target)
            lo = mid;
        else
            hi = mid;
    }

    DemmPool result = pool;
    LpLedger unused;
    result.trade(in, out, Dec(mid), FeePolicy::fee_free(), unused);
    return result;
}

}  // namespace demm
