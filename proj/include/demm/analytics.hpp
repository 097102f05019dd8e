// Portfolio shares, impermanent loss/gain accounting, and CSV curve emission.
#pragma once

#include <demm/market.hpp>

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace demm {

struct PositionReport {
    std::string account;
    std::vector<Dec> entitled;  // per-token pool entitlement, aligned with pool.tokens
    Dec pool_value;             // dollars at the quoted prices
    Dec hold_value;             // dollars of the original deposit at the quoted prices
    Dec il_abs;                 // pool_value - hold_value
    Dec il_rel;                 // pool_value / hold_value
};

inline Dec portfolio_value(const std::vector<std::string>& tokens, const std::vector<Dec>& amounts,
                           const PriceVector& prices) {
    Dec value = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) value += prices.at(tokens[t]) * amounts[t];
    return value;
}

// Entitlement of one account: r_t * balance / w_t per token, valued against
// the counterfactual of holding the original deposit.
inline PositionReport position(const DemmPool& pool, const LpLedger& ledger,
                               const std::string& account, const PriceVector& prices,
                               const std::vector<Dec>& hold_basis) {
    if (hold_basis.size() != pool.size()) throw std::invalid_argument("hold basis length mismatch");
    PositionReport report;
    report.account = account;
    report.entitled.assign(pool.size(), Dec(0));
    bool known = false;
    for (std::size_t t = 0; t < pool.size(); ++t) {
        const Dec bal = ledger.balance(account, pool.tokens[t]);
        if (bal.is_zero()) continue;
        known = true;
        report.entitled[t] = pool.reserves[t] * bal / pool.weights[t];
    }
    if (!known) throw std::invalid_argument("unknown account: " + account);
    report.pool_value = portfolio_value(pool.tokens, report.entitled, prices);
    report.hold_value = portfolio_value(pool.tokens, hold_basis, prices);
    report.il_abs = report.pool_value - report.hold_value;
    report.il_rel = report.pool_value / report.hold_value;
    return report;
}

// Whole-pool variant: the pool's "position" is its own reserves against the
// deposit-time reserves.
inline PositionReport pool_position(const DemmPool& pool, const PriceVector& prices,
                                    const std::vector<Dec>& hold_basis) {
    if (hold_basis.size() != pool.size()) throw std::invalid_argument("hold basis length mismatch");
    PositionReport report;
    report.account = "(pool)";
    report.entitled = pool.reserves;
    report.pool_value = portfolio_value(pool.tokens, pool.reserves, prices);
    report.hold_value = portfolio_value(pool.tokens, hold_basis, prices);
    report.il_abs = report.pool_value - report.hold_value;
    report.il_rel = report.pool_value / report.hold_value;
    return report;
}

struct IlCurveRow {
    Dec rel_price;
    Dec il_rel;
};

// One row per grid point: equilibrate the pool at those prices, then report
// the relative loss/gain of the account (or of the whole pool). rel_price is
// the price of the last token relative to the first, normalized to 1 at the
// base prices.
inline std::vector<IlCurveRow> il_curve(const DemmPool& pool, const LpLedger& ledger,
                                        const std::optional<std::string>& account,
                                        const std::vector<PriceVector>& grid,
                                        const std::vector<Dec>& hold_basis,
                                        const PriceVector& base_prices) {
    if (grid.empty()) throw std::invalid_argument("empty price grid");
    const std::string& first = pool.tokens.front();
    const std::string& last = pool.tokens.back();
    const Dec base_ratio = base_prices.at(last) / base_prices.at(first);
    std::vector<IlCurveRow> rows;
    rows.reserve(grid.size());
    for (const PriceVector& prices : grid) {
        const DemmPool eq = demm_equilibrium(pool, prices);
        const PositionReport report = account ? position(eq, ledger, *account, prices, hold_basis)
                                              : pool_position(eq, prices, hold_basis);
        rows.push_back({(prices.at(last) / prices.at(first)) / base_ratio, report.il_rel});
    }
    return rows;
}

// Default sweep: multipliers log-spaced over [lo, hi] applied to the last
// token's base price.
inline std::vector<PriceVector> price_grid(const DemmPool& pool, const PriceVector& base_prices,
                                           double lo = 1.0 / 16, double hi = 16.0, std::size_t n = 101) {
    if (n < 2 || !(lo > 0) || !(hi > lo)) throw std::invalid_argument("bad grid bounds");
    std::vector<PriceVector> grid;
    grid.reserve(n);
    const std::string& last = pool.tokens.back();
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(n - 1));
        PriceVector p = base_prices;
        p.set(last, base_prices.at(last) * Dec(m));
        grid.push_back(std::move(p));
    }
    return grid;
}

// Personal-weight CPMM counterpart of one provider: a fixed-weight pool
// seeded with the account's own deposit, weights equal to the LP holdings.
// Tokens the account never supplied are left out; a single-token "pool"
// degenerates to holding.
inline Dec cpmm_counterpart_il(const DemmPool& pool, const LpLedger& ledger,
                               const std::string& account, const std::vector<Dec>& hold_basis,
                               const PriceVector& prices) {
    std::vector<std::string> tokens;
    std::vector<Dec> reserves, weights;
    for (std::size_t t = 0; t < pool.size(); ++t) {
        const Dec bal = ledger.balance(account, pool.tokens[t]);
        if (bal.is_zero() || hold_basis[t].is_zero()) continue;
        tokens.push_back(pool.tokens[t]);
        reserves.push_back(hold_basis[t]);
        weights.push_back(bal);
    }
    const Dec hold = portfolio_value(pool.tokens, hold_basis, prices);
    if (tokens.size() < 2) return Dec(1);
    auto mini = CpmmPool::create(tokens, reserves, weights, Dec(1));
    const auto eq = cpmm_equilibrium(mini, prices);
    return portfolio_value(eq.tokens, eq.reserves, prices) / hold;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<Dec>> rows;

    std::string to_csv() const {
        std::ostringstream out;
        for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
        out << "\n";
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out << (c ? "," : "") << format_decimal(row[c]);
            out << "\n";
        }
        return out.str();
    }
};

// Relative loss/gain curves for the pool, each account, and each account's
// personal-weight CPMM counterpart, on a shared grid.
inline CsvTable relative_il_table(const DemmPool& pool, const LpLedger& ledger,
                                     const std::vector<std::pair<std::string, std::vector<Dec>>>& bases,
                                     const std::vector<PriceVector>& grid,
                                     const PriceVector& base_prices) {
    if (grid.empty()) throw std::invalid_argument("empty price grid");
    CsvTable table;
    table.header = {"rel_price", "pool_il"};
    for (const auto& [account, basis] : bases) {
        table.header.push_back(account + "_il");
        table.header.push_back(account + "_cpmm_il");
    }
    std::vector<Dec> pool_basis(pool.size(), Dec(0));
    for (const auto& [account, basis] : bases)
        for (std::size_t t = 0; t < pool.size(); ++t) pool_basis[t] += basis[t];

    const std::string& first = pool.tokens.front();
    const std::string& last = pool.tokens.back();
    const Dec base_ratio = base_prices.at(last) / base_prices.at(first);
    for (const PriceVector& prices : grid) {
        std::vector<Dec> row;
        row.push_back((prices.at(last) / prices.at(first)) / base_ratio);
        const DemmPool eq = demm_equilibrium(pool, prices);
        row.push_back(pool_position(eq, prices, pool_basis).il_rel);
        for (const auto& [account, basis] : bases) {
            row.push_back(position(eq, ledger, account, prices, basis).il_rel);
            row.push_back(cpmm_counterpart_il(pool, ledger, account, basis, prices));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Swap-outcome sweep at one state: amount in vs amount out for a token pair.
inline CsvTable trade_outcome_table(const DemmPool& pool, std::size_t in, std::size_t out,
                                       const std::vector<Dec>& amounts) {
    CsvTable table;
    table.header = {"amount_in", "amount_out"};
    for (const Dec& dx : amounts) {
        DemmPool scratch = pool;
        LpLedger unused;
        const auto quote = scratch.trade(in, out, dx, FeePolicy::fee_free(), unused);
        table.rows.push_back({dx, quote.amount_out});
    }
    return table;
}

}  // namespace demm
