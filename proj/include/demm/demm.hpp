// Dynamic-exponent pool: the invariant exponent doubles as the per-token LP
// supply, so the ledger's column sums track the weight vector at all times.
#pragma once

#include <demm/cpmm.hpp>
#include <demm/decimal.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace demm {

// rho is the fraction of the input that actually trades; 1-rho is kept as fee.
struct FeePolicy {
    Dec rho = Dec(1);

    static FeePolicy fee_free() { return FeePolicy{}; }
    static FeePolicy with_rho(Dec rho) {
        if (!(rho > 0) || rho > 1) throw std::invalid_argument("rho must be in (0,1]");
        return FeePolicy{std::move(rho)};
    }
};

struct TradeQuote {
    std::size_t token_in = 0;
    std::size_t token_out = 0;
    Dec amount_in;
    Dec amount_out;
    Dec fee_charged;
};

// Per-account LP balances and fee pots, keyed by token name so columns
// survive token removal and pool splits.
struct LpLedger {
    using Column = std::map<std::string, Dec>;  // account -> amount
    std::map<std::string, Column> balances;     // token -> column
    std::map<std::string, Column> fee_pots;

    Dec balance(const std::string& account, const std::string& token) const {
        const auto col = balances.find(token);
        if (col == balances.end()) return Dec(0);
        const auto it = col->second.find(account);
        return it == col->second.end() ? Dec(0) : it->second;
    }

    Dec fee_pot(const std::string& account, const std::string& token) const {
        const auto col = fee_pots.find(token);
        if (col == fee_pots.end()) return Dec(0);
        const auto it = col->second.find(account);
        return it == col->second.end() ? Dec(0) : it->second;
    }

    void credit(const std::string& account, const std::string& token, const Dec& amount) {
        if (amount.is_zero()) return;
        balances[token][account] += amount;
    }

    void debit(const std::string& account, const std::string& token, const Dec& amount) {
        if (amount.is_zero()) return;
        Dec& bal = balances[token][account];
        if (amount > bal) throw std::invalid_argument("insufficient LP balance for " + account);
        bal -= amount;
        if (bal.is_zero()) balances[token].erase(account);
    }

    Dec column_sum(const std::string& token) const {
        Dec sum = 0;
        const auto col = balances.find(token);
        if (col == balances.end()) return sum;
        for (const auto& [account, bal] : col->second) sum += bal;
        return sum;
    }

    // Returns and zeroes the account's fee pot; unknown account or token is a
    // zero payout, not an error.
    Dec claim_fees(const std::string& account, const std::string& token) {
        const auto col = fee_pots.find(token);
        if (col == fee_pots.end()) return Dec(0);
        const auto it = col->second.find(account);
        if (it == col->second.end()) return Dec(0);
        Dec out = it->second;
        col->second.erase(it);
        return out;
    }
};

struct DemmPool {
    std::vector<std::string> tokens;
    std::vector<Dec> reserves;
    std::vector<Dec> weights;

    // Genesis provider supplies reserves asserted to be of equal value and
    // receives one LP token of each kind; weights start at the all-ones vector.
    static std::pair<DemmPool, LpLedger> create(std::vector<std::string> tokens,
                                                std::vector<Dec> reserves,
                                                const std::string& genesis) {
        if (reserves.size() < 2) throw std::invalid_argument("pool needs at least two tokens");
        if (tokens.size() != reserves.size()) throw std::invalid_argument("tokens/reserves length mismatch");
        for (std::size_t a = 0; a < tokens.size(); ++a)
            for (std::size_t b = a + 1; b < tokens.size(); ++b)
                if (tokens[a] == tokens[b]) throw std::invalid_argument("duplicate token id: " + tokens[a]);
        for (const Dec& r : reserves)
            if (!(r > 0)) throw std::invalid_argument("reserves must be > 0");
        if (genesis.empty()) throw std::invalid_argument("genesis account required");
        const std::size_t n = reserves.size();
        DemmPool pool{std::move(tokens), std::move(reserves), std::vector<Dec>(n, Dec(1))};
        LpLedger ledger;
        for (const auto& token : pool.tokens) ledger.credit(genesis, token, Dec(1));
        return {std::move(pool), std::move(ledger)};
    }

    std::size_t size() const { return reserves.size(); }

    bool has_token(std::string_view token) const {
        for (const auto& t : tokens)
            if (t == token) return true;
        return false;
    }

    std::size_t index_of(std::string_view token) const {
        for (std::size_t t = 0; t < tokens.size(); ++t)
            if (tokens[t] == token) return t;
        throw std::invalid_argument("unknown token: " + std::string(token));
    }

    void check_pair(std::size_t in, std::size_t out) const {
        if (in >= size() || out >= size()) throw std::invalid_argument("token index out of range");
        if (in == out) throw std::invalid_argument("same-token trade");
    }

    // Swap. Only rho*amount_in trades; the rest is credited as fee to holders
    // of the input token's LP, pro rata at trade time. Weights are untouched.
    TradeQuote trade(std::size_t in, std::size_t out, const Dec& amount_in, const FeePolicy& fee,
                     LpLedger& ledger) {
        check_pair(in, out);
        if (!(amount_in > 0)) throw std::invalid_argument("trade amount must be > 0");
        if (!(fee.rho > 0) || fee.rho > 1) throw std::invalid_argument("rho must be in (0,1]");
        const Dec effective_in = fee.rho * amount_in;
        const Dec fee_charged = amount_in - effective_in;
        const Dec amount_out =
            quote_swap_output(reserves[in], reserves[out], weights[in], weights[out], effective_in);
        if (reserves[out] - amount_out < kPositivityFloor)
            throw std::domain_error("trade would deplete output reserve");
        reserves[in] += effective_in;
        reserves[out] -= amount_out;
        if (fee_charged > 0) distribute_fee(ledger, in, fee_charged);
        return TradeQuote{in, out, amount_in, amount_out, fee_charged};
    }

    // Deposit any non-negative vector (at least one positive entry). Each
    // touched coordinate scales its weight by the reserve growth factor; the
    // minted LP amounts are credited to the provider and added to the weights
    // so ledger column sums track w exactly.
    std::vector<Dec> provide(const std::string& account, const std::vector<Dec>& deposit,
                             LpLedger& ledger) {
        if (deposit.size() != size()) throw std::invalid_argument("deposit length mismatch");
        bool any = false;
        for (const Dec& d : deposit) {
            if (d < 0) throw std::invalid_argument("deposit entries must be >= 0");
            if (d > 0) any = true;
        }
        if (!any) throw std::invalid_argument("all-zero deposit");
        std::vector<Dec> minted(size(), Dec(0));
        for (std::size_t t = 0; t < size(); ++t) {
            if (deposit[t].is_zero()) continue;
            minted[t] = trunc_sig(deposit[t] / reserves[t] * weights[t]);
            reserves[t] += deposit[t];
            weights[t] += minted[t];
            ledger.credit(account, tokens[t], minted[t]);
        }
        return minted;
    }

    // Redeem LP tokens per coordinate. Redeeming a full column pays out the
    // whole reserve and removes the token from the pool; partial redemptions
    // must leave reserves and weights above the positivity floor.
    std::vector<Dec> withdraw(const std::string& account, const std::vector<Dec>& redeem,
                              LpLedger& ledger) {
        if (redeem.size() != size()) throw std::invalid_argument("redeem length mismatch");
        bool any = false;
        for (std::size_t t = 0; t < size(); ++t) {
            if (redeem[t] < 0) throw std::invalid_argument("redeem entries must be >= 0");
            if (redeem[t].is_zero()) continue;
            any = true;
            if (redeem[t] > ledger.balance(account, tokens[t]))
                throw std::invalid_argument("insufficient LP balance for " + account);
        }
        if (!any) throw std::invalid_argument("all-zero redemption");

        std::vector<Dec> payout(size(), Dec(0));
        std::vector<bool> drained(size(), false);
        for (std::size_t t = 0; t < size(); ++t) {
            if (redeem[t].is_zero()) continue;
            if (redeem[t] == weights[t]) {
                payout[t] = reserves[t];
                drained[t] = true;
            } else {
                payout[t] = trunc_sig(reserves[t] * redeem[t] / weights[t]);
                if (weights[t] - redeem[t] < kPositivityFloor ||
                    reserves[t] - payout[t] < kPositivityFloor)
                    throw std::domain_error("redemption would cross the positivity floor");
            }
        }
        for (std::size_t t = 0; t < size(); ++t) {
            if (redeem[t].is_zero()) continue;
            ledger.debit(account, tokens[t], redeem[t]);
            reserves[t] -= payout[t];
            weights[t] -= redeem[t];
        }
        for (std::size_t t = size(); t-- > 0;) {
            if (!drained[t]) continue;
            ledger.balances.erase(tokens[t]);
            tokens.erase(tokens.begin() + static_cast<long>(t));
            reserves.erase(reserves.begin() + static_cast<long>(t));
            weights.erase(weights.begin() + static_cast<long>(t));
        }
        return payout;
    }

    Dec spot_price(std::size_t out, std::size_t in) const {
        check_pair(in, out);
        return (reserves[in] / weights[in]) / (reserves[out] / weights[out]);
    }

    // Introduce a token by pairing it with an equal-value anchor deposit. The
    // depositor receives the same LP amount of the anchor and the new token;
    // that amount is also the new coordinate's weight.
    Dec add_token(const std::string& account, std::size_t anchor, const Dec& anchor_amount,
                  const std::string& new_token, const Dec& new_reserve, LpLedger& ledger) {
        if (anchor >= size()) throw std::invalid_argument("anchor index out of range");
        if (has_token(new_token)) throw std::invalid_argument("duplicate token id: " + new_token);
        if (!(anchor_amount > 0)) throw std::invalid_argument("anchor amount must be > 0");
        if (!(new_reserve > 0)) throw std::invalid_argument("new reserve must be > 0");
        const Dec minted = trunc_sig(anchor_amount / reserves[anchor] * weights[anchor]);
        if (minted < kPositivityFloor) throw std::domain_error("anchor deposit below positivity floor");
        reserves[anchor] += anchor_amount;
        weights[anchor] += minted;
        ledger.credit(account, tokens[anchor], minted);
        tokens.push_back(new_token);
        reserves.push_back(new_reserve);
        weights.push_back(minted);
        ledger.credit(account, new_token, minted);
        return minted;
    }

    // Partition the pool into two; LP balances and fee pots are re-homed with
    // their token columns, never changed.
    static std::pair<std::pair<DemmPool, LpLedger>, std::pair<DemmPool, LpLedger>> split(
        const DemmPool& pool, const LpLedger& ledger, const std::vector<std::size_t>& group_a) {
        std::vector<bool> in_a(pool.size(), false);
        for (std::size_t t : group_a) {
            if (t >= pool.size()) throw std::invalid_argument("partition index out of range");
            if (in_a[t]) throw std::invalid_argument("duplicate partition index");
            in_a[t] = true;
        }
        if (group_a.empty() || group_a.size() == pool.size())
            throw std::invalid_argument("partition sides must be non-empty");

        auto restrict_to = [&](bool side) {
            DemmPool child;
            LpLedger child_ledger;
            for (std::size_t t = 0; t < pool.size(); ++t) {
                if (in_a[t] != side) continue;
                child.tokens.push_back(pool.tokens[t]);
                child.reserves.push_back(pool.reserves[t]);
                child.weights.push_back(pool.weights[t]);
                const auto bal = ledger.balances.find(pool.tokens[t]);
                if (bal != ledger.balances.end()) child_ledger.balances[pool.tokens[t]] = bal->second;
                const auto pot = ledger.fee_pots.find(pool.tokens[t]);
                if (pot != ledger.fee_pots.end()) child_ledger.fee_pots[pool.tokens[t]] = pot->second;
            }
            return std::make_pair(std::move(child), std::move(child_ledger));
        };
        return {restrict_to(true), restrict_to(false)};
    }

private:
    // Split the fee across holders of the input token's LP by their share of
    // the column; the last holder absorbs the truncation remainder so the
    // pots sum to the fee exactly.
    void distribute_fee(LpLedger& ledger, std::size_t in, const Dec& fee_charged) {
        const auto col = ledger.balances.find(tokens[in]);
        if (col == ledger.balances.end() || col->second.empty())
            throw std::domain_error("no LP holders to receive fee");
        Dec assigned = 0;
        const auto last = std::prev(col->second.end());
        for (auto it = col->second.begin(); it != col->second.end(); ++it) {
            Dec share;
            if (it == last) {
                share = fee_charged - assigned;
            } else {
                share = trunc_sig(fee_charged * it->second / weights[in]);
                assigned += share;
            }
            if (share > 0) ledger.fee_pots[tokens[in]][it->first] += share;
        }
    }
};

}  // namespace demm
