// Flash-loan attack replay and the two mitigations: delayed liquidity
// activation and TWAP-guarded minting.
#pragma once

#include <demm/market.hpp>

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace demm {

// Block counter plus the state seen at the start of each block.
struct BlockClock {
    struct Snapshot {
        std::uint64_t height;
        std::vector<std::string> tokens;
        std::vector<Dec> reserves;
        std::vector<Dec> weights;
    };
    std::uint64_t height = 0;
    std::vector<Snapshot> block_starts;
};

// Per-token w_t/r_t ratios at the starts of the last k+1 blocks (or fewer,
// while the pool is younger than the window).
struct TwapWindow {
    std::size_t k = 1;
    std::map<std::string, std::deque<Dec>> ratios;

    void record(const DemmPool& pool) {
        // drop history of tokens that left the pool
        for (auto it = ratios.begin(); it != ratios.end();) {
            if (pool.has_token(it->first))
                ++it;
            else
                it = ratios.erase(it);
        }
        for (std::size_t t = 0; t < pool.size(); ++t) {
            auto& ring = ratios[pool.tokens[t]];
            ring.push_back(pool.weights[t] / pool.reserves[t]);
            while (ring.size() > k + 1) ring.pop_front();
        }
    }

    bool empty() const { return ratios.empty(); }

    // Geometric average over all available history for the token.
    Dec average(const std::string& token) const {
        const auto it = ratios.find(token);
        if (it == ratios.end() || it->second.empty())
            throw std::domain_error("no TWAP history for " + token);
        return geo_mean(std::vector<Dec>(it->second.begin(), it->second.end()));
    }
};

struct TwapQuote {
    bool accepted = false;
    std::vector<Dec> minted;  // valid only when accepted
};

// TWAP-guarded mint: proposed w'_t = (r_t + dr_t) * G_t for each deposited
// coordinate. If any proposed mint is not strictly positive the deposit is
// rejected rather than clamped.
inline TwapQuote twap_mint_quote(const TwapWindow& window, const DemmPool& pool,
                                 const std::vector<Dec>& deposit) {
    if (window.empty()) throw std::domain_error("empty TWAP window");
    if (deposit.size() != pool.size()) throw std::invalid_argument("deposit length mismatch");
    bool any = false;
    for (const Dec& d : deposit) {
        if (d < 0) throw std::invalid_argument("deposit entries must be >= 0");
        if (d > 0) any = true;
    }
    if (!any) throw std::invalid_argument("all-zero deposit");
    TwapQuote quote;
    quote.minted.assign(pool.size(), Dec(0));
    for (std::size_t t = 0; t < pool.size(); ++t) {
        if (deposit[t].is_zero()) continue;
        const Dec proposed = (pool.reserves[t] + deposit[t]) * window.average(pool.tokens[t]);
        const Dec minted = trunc_sig(proposed - pool.weights[t]);
        if (!(minted > 0)) return TwapQuote{};  // mitigation triggered
        quote.minted[t] = minted;
    }
    quote.accepted = true;
    return quote;
}

// Deposit held back for a random number of blocks before it prices in.
struct PendingDeposit {
    std::string provider;
    std::map<std::string, Dec> deposit;  // token name -> amount
    std::uint64_t submit_height = 0;
    std::uint64_t activation_height = 0;
};

struct ActivationResult {
    PendingDeposit pending;
    bool applied = false;  // false means the deposit was refunded
    std::vector<Dec> minted;
    std::string note;
};

// Single-pool block engine: snapshots state at block starts, feeds the TWAP
// window, and activates delayed deposits in FIFO submission order.
class BlockEngine {
  public:
    BlockEngine(DemmPool pool, LpLedger ledger, std::size_t twap_k, std::uint64_t seed,
                std::uint64_t delay_min, std::uint64_t delay_max)
        : pool_(std::move(pool)), ledger_(std::move(ledger)), rng_(seed), delay_min_(delay_min),
          delay_max_(delay_max) {
        if (delay_max_ < delay_min_) throw std::invalid_argument("delay range inverted");
        window_.k = twap_k;
        clock_.height = 1;
        take_snapshot();
    }

    DemmPool& pool() { return pool_; }
    const DemmPool& pool() const { return pool_; }
    LpLedger& ledger() { return ledger_; }
    const LpLedger& ledger() const { return ledger_; }
    const BlockClock& clock() const { return clock_; }
    const TwapWindow& window() const { return window_; }
    std::uint64_t height() const { return clock_.height; }
    const std::deque<PendingDeposit>& pending() const { return pending_; }

    // Enqueue a deposit; d = 0 applies immediately in place. Returns the
    // pending entry (activation height already drawn).
    PendingDeposit provide_delayed(const std::string& provider, const std::vector<Dec>& deposit,
                                   std::vector<Dec>* minted_now = nullptr) {
        if (deposit.size() != pool_.size()) throw std::invalid_argument("deposit length mismatch");
        PendingDeposit entry;
        entry.provider = provider;
        for (std::size_t t = 0; t < pool_.size(); ++t)
            if (!deposit[t].is_zero()) entry.deposit[pool_.tokens[t]] = deposit[t];
        entry.submit_height = clock_.height;
        entry.activation_height = clock_.height + draw_delay();
        if (entry.activation_height == clock_.height) {
            const auto minted = pool_.provide(provider, deposit, ledger_);
            if (minted_now) *minted_now = minted;
            return entry;
        }
        pending_.push_back(entry);
        return entry;
    }

    // TWAP-guarded immediate provide; returns the quote (rejected quotes
    // leave all state untouched).
    TwapQuote twap_provide(const std::string& provider, const std::vector<Dec>& deposit) {
        const TwapQuote quote = twap_mint_quote(window_, pool_, deposit);
        if (!quote.accepted) return quote;
        for (std::size_t t = 0; t < pool_.size(); ++t) {
            if (deposit[t].is_zero()) continue;
            pool_.reserves[t] += deposit[t];
            pool_.weights[t] += quote.minted[t];
            ledger_.credit(provider, pool_.tokens[t], quote.minted[t]);
        }
        return quote;
    }

    // Close the current block: bump the height, snapshot the carried-over
    // state (before any activation), then apply due deposits FIFO.
    std::vector<ActivationResult> advance_block() {
        ++clock_.height;
        take_snapshot();
        std::vector<ActivationResult> results;
        while (!pending_.empty() && pending_.front().activation_height <= clock_.height) {
            PendingDeposit entry = pending_.front();
            pending_.pop_front();
            results.push_back(apply_pending(std::move(entry)));
        }
        return results;
    }

  private:
    std::uint64_t draw_delay() {
        if (delay_max_ == delay_min_) return delay_min_;
        return delay_min_ + rng_() % (delay_max_ - delay_min_ + 1);
    }

    void take_snapshot() {
        clock_.block_starts.push_back({clock_.height, pool_.tokens, pool_.reserves, pool_.weights});
        window_.record(pool_);
    }

    ActivationResult apply_pending(PendingDeposit entry) {
        ActivationResult result;
        std::vector<Dec> deposit(pool_.size(), Dec(0));
        bool missing = false;
        for (const auto& [token, amount] : entry.deposit) {
            if (!pool_.has_token(token)) {
                missing = true;
                break;
            }
            deposit[pool_.index_of(token)] = amount;
        }
        result.pending = std::move(entry);
        if (missing) {
            result.note = "token left the pool; deposit refunded";
            return result;
        }
        try {
            result.minted = pool_.provide(result.pending.provider, deposit, ledger_);
            result.applied = true;
        } catch (const std::exception& e) {
            result.note = std::string("activation failed, deposit refunded: ") + e.what();
        }
        return result;
    }

    DemmPool pool_;
    LpLedger ledger_;
    BlockClock clock_;
    TwapWindow window_;
    std::deque<PendingDeposit> pending_;
    std::mt19937_64 rng_;
    std::uint64_t delay_min_;
    std::uint64_t delay_max_;
};

// Four-step drain: swap in, one-sided deposit, swap back, redeem. The
// counterfactual flag quotes the third swap with the pre-attack exponent.
struct AttackConfig {
    Dec swap_in;                     // token-s endowment pushed in at step 1
    Dec deposit;                     // token-t amount contributed at step 2
    bool frozen_invariant = false;
};

struct AttackReport {
    std::vector<DemmPool> step_states;  // state after each executed step
    std::vector<Dec> endowment;         // (s, t) the attacker starts with
    std::vector<Dec> final_holdings;    // (s, t) the attacker ends with
    std::vector<Dec> profit;            // final - endowment
    Dec step3_output;                   // token s received at step 3
};

inline AttackReport replay_flash_attack(const DemmPool& initial, const LpLedger& initial_ledger,
                                        const AttackConfig& config) {
    if (initial.size() != 2) throw std::invalid_argument("attack replay handles two-token pools only");
    if (config.swap_in < 0 || config.deposit < 0) throw std::invalid_argument("negative attack amounts");
    AttackReport report;
    report.endowment = {config.swap_in, Dec(0)};
    report.step3_output = 0;
    if (config.swap_in.is_zero()) {
        report.step_states.assign(4, initial);
        report.final_holdings = report.endowment;
        report.profit = {Dec(0), Dec(0)};
        return report;
    }

    DemmPool pool = initial;
    LpLedger ledger = initial_ledger;
    const std::vector<Dec> frozen_weights = initial.weights;
    const FeePolicy no_fee = FeePolicy::fee_free();

    // 1. swap the endowment of token s for token t
    const Dec got_t = pool.trade(0, 1, config.swap_in, no_fee, ledger).amount_out;
    report.step_states.push_back(pool);
    if (config.deposit > got_t) throw std::invalid_argument("attack deposit exceeds swap proceeds");

    // 2. one-sided deposit of token t
    const auto minted = pool.provide("attacker", {Dec(0), config.deposit}, ledger);
    report.step_states.push_back(pool);

    // 3. swap the remaining token t back to s
    const Dec back_in = got_t - config.deposit;
    Dec got_s = 0;
    if (back_in > 0) {
        if (config.frozen_invariant) {
            got_s = quote_swap_output(pool.reserves[1], pool.reserves[0], frozen_weights[1],
                                      frozen_weights[0], back_in);
            pool.reserves[1] += back_in;
            pool.reserves[0] -= got_s;
        } else {
            got_s = pool.trade(1, 0, back_in, no_fee, ledger).amount_out;
        }
    }
    report.step3_output = got_s;
    report.step_states.push_back(pool);

    // 4. redeem the LP tokens earned at step 2
    std::vector<Dec> payout(2, Dec(0));
    if (minted[1] > 0) payout = pool.withdraw("attacker", {Dec(0), minted[1]}, ledger);
    report.step_states.push_back(pool);

    report.final_holdings = {got_s, payout[1]};
    report.profit = {got_s - config.swap_in, payout[1]};
    return report;
}

}  // namespace demm
