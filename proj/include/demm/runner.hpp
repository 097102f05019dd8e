// Deterministic scenario execution: drives the pools through the scripted
// blocks, tracks per-account token flows, and emits a digestable transcript.
#pragma once

#include <demm/analytics.hpp>
#include <demm/scenario.hpp>
#include <demm/security.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace demm {

struct RunTranscript {
    json doc;
    std::string digest;
    bool ok = true;
    std::string failure_kind;     // "assertion" or "module_error" when not ok
    std::string failure_message;  // includes the event coordinates
    std::filesystem::path transcript_path;
    std::vector<std::filesystem::path> artifacts;
};

namespace runner_detail {

struct AssertionFailure {
    std::string message;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace runner_detail

class ScenarioRunner {
  public:
    ScenarioRunner(const ScenarioScript& script, std::filesystem::path out_dir)
        : script_(script), out_dir_(std::move(out_dir)) {}

    RunTranscript run() {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir_);
        RunTranscript result;
        events_out_ = json::array();

        for (std::size_t b = 0; b < script_.blocks.size() && result.ok; ++b) {
            for (std::size_t e = 0; e < script_.blocks[b].size(); ++e) {
                const auto& ev = script_.blocks[b][e];
                const std::string where =
                    "block " + std::to_string(b + 1) + " event " + std::to_string(e + 1);
                json record{{"block", b + 1}, {"index", e}, {"pool", ev.pool}};
                record["pre_digest"] = state_digest();
                try {
                    execute(ev, record);
                } catch (const runner_detail::AssertionFailure& fail) {
                    result.ok = false;
                    result.failure_kind = "assertion";
                    result.failure_message = where + ": " + fail.message;
                    record["failure"] = result.failure_message;
                } catch (const std::exception& err) {
                    result.ok = false;
                    result.failure_kind = "module_error";
                    result.failure_message = where + ": " + err.what();
                    record["failure"] = result.failure_message;
                }
                record["post_digest"] = state_digest();
                events_out_.push_back(std::move(record));
                if (!result.ok) break;
            }
            if (result.ok && b + 1 < script_.blocks.size()) advance_all_blocks(b + 1);
        }

        result.doc = json{{"format_version", 1},
                          {"name", script_.name},
                          {"seed", script_.seed},
                          {"ok", result.ok},
                          {"events", events_out_},
                          {"final_states", final_states_json()},
                          {"net_flows", flows_json()},
                          {"prices", prices_json()},
                          {"deposits", deposits_json()},
                          {"artifacts", artifact_names_}};
        result.digest = fnv1a64_hex(result.doc.dump());
        result.doc["digest"] = result.digest;

        result.transcript_path = out_dir_ / "transcript.json";
        runner_detail::write_file(result.transcript_path, result.doc.dump(2) + "\n");
        write_final_snapshots();
        for (const auto& name : artifact_names_) result.artifacts.push_back(out_dir_ / name);
        return result;
    }

  private:
    struct DemmEntry {
        std::unique_ptr<BlockEngine> engine;
    };
    struct CpmmEntry {
        CpmmPool pool;
        std::map<std::string, Dec> lp;
    };

    using Kind = ScenarioEvent::Kind;

    void execute(const ScenarioEvent& ev, json& record) {
        record["kind"] = kind_name(ev.kind);
        switch (ev.kind) {
            case Kind::Init: return do_init(ev, record);
            case Kind::Trade: return do_trade(ev, record);
            case Kind::Provide: return do_provide(ev, record);
            case Kind::ProvideDelayed: return do_provide_delayed(ev, record);
            case Kind::TwapProvide: return do_twap_provide(ev, record);
            case Kind::Withdraw: return do_withdraw(ev, record);
            case Kind::ClaimFees: return do_claim_fees(ev, record);
            case Kind::SetPrices: return do_set_prices(ev, record);
            case Kind::Arbitrage: return do_arbitrage(ev, record);
            case Kind::AddToken: return do_add_token(ev, record);
            case Kind::SplitPool: return do_split_pool(ev, record);
            case Kind::AssertState: return do_assert_state(ev, record);
            case Kind::Report: return do_report(ev, record);
        }
        throw std::logic_error("unhandled event kind");
    }

    static const char* kind_name(Kind kind) {
        switch (kind) {
            case Kind::Init: return "init";
            case Kind::Trade: return "trade";
            case Kind::Provide: return "provide";
            case Kind::ProvideDelayed: return "provide_delayed";
            case Kind::TwapProvide: return "twap_provide";
            case Kind::Withdraw: return "withdraw";
            case Kind::ClaimFees: return "claim_fees";
            case Kind::SetPrices: return "set_prices";
            case Kind::Arbitrage: return "arbitrage";
            case Kind::AddToken: return "add_token";
            case Kind::SplitPool: return "split_pool";
            case Kind::AssertState: return "assert_state";
            case Kind::Report: return "report";
        }
        return "?";
    }

    // ---- event handlers ----

    void do_init(const ScenarioEvent& ev, json& record) {
        if (demm_pools_.count(ev.pool) || cpmm_pools_.count(ev.pool))
            throw std::invalid_argument("pool '" + ev.pool + "' already initialized");
        if (!ev.from_snapshot.empty()) {
            const json snapshot = json::parse(runner_detail::read_file(ev.from_snapshot));
            const json payload = open_snapshot(snapshot);
            const std::string protocol = payload.at("protocol").get<std::string>();
            if (protocol == "demm") {
                auto [pool, ledger] = demm_pool_from_json(payload);
                install_demm(ev.pool, std::move(pool), std::move(ledger));
            } else {
                auto [pool, lp] = cpmm_pool_from_json(payload);
                cpmm_pools_[ev.pool] = CpmmEntry{std::move(pool), std::move(lp)};
            }
            record["from_snapshot"] = ev.from_snapshot;
            return;
        }
        if (ev.protocol == "cpmm") {
            auto pool = CpmmPool::create(ev.tokens, ev.reserves, ev.weights, ev.initial_lp);
            CpmmEntry entry{std::move(pool), {}};
            entry.lp[ev.genesis] = ev.initial_lp;
            for (std::size_t t = 0; t < ev.tokens.size(); ++t) {
                add_flow(ev.genesis, ev.tokens[t], -ev.reserves[t]);
                deposits_[ev.genesis][ev.tokens[t]] += ev.reserves[t];
            }
            cpmm_pools_[ev.pool] = std::move(entry);
        } else {
            auto [pool, ledger] = DemmPool::create(ev.tokens, ev.reserves, ev.genesis);
            for (std::size_t t = 0; t < ev.tokens.size(); ++t) {
                add_flow(ev.genesis, ev.tokens[t], -ev.reserves[t]);
                deposits_[ev.genesis][ev.tokens[t]] += ev.reserves[t];
            }
            install_demm(ev.pool, std::move(pool), std::move(ledger));
        }
    }

    void do_trade(const ScenarioEvent& ev, json& record) {
        if (auto* entry = find_demm(ev.pool)) {
            DemmPool& pool = entry->engine->pool();
            const auto quote = pool.trade(pool.index_of(ev.token_in), pool.index_of(ev.token_out),
                                          ev.amount, FeePolicy::with_rho(script_.fee_rho),
                                          entry->engine->ledger());
            add_flow(ev.account, ev.token_in, -ev.amount);
            add_flow(ev.account, ev.token_out, quote.amount_out);
            record["amount_out"] = format_decimal(quote.amount_out);
            record["fee_charged"] = format_decimal(quote.fee_charged);
            return;
        }
        CpmmEntry& entry = require_cpmm(ev.pool);
        const Dec out = entry.pool.trade(entry.pool.index_of(ev.token_in),
                                         entry.pool.index_of(ev.token_out), ev.amount);
        add_flow(ev.account, ev.token_in, -ev.amount);
        add_flow(ev.account, ev.token_out, out);
        record["amount_out"] = format_decimal(out);
    }

    void do_provide(const ScenarioEvent& ev, json& record) {
        if (auto* entry = find_demm(ev.pool)) {
            DemmPool& pool = entry->engine->pool();
            const auto deposit = amounts_to_vector(pool, ev.token_amounts);
            const auto minted = pool.provide(ev.account, deposit, entry->engine->ledger());
            for (std::size_t t = 0; t < pool.size(); ++t) {
                if (deposit[t].is_zero()) continue;
                add_flow(ev.account, pool.tokens[t], -deposit[t]);
                deposits_[ev.account][pool.tokens[t]] += deposit[t];
            }
            record["minted"] = amounts_json(pool.tokens, minted);
            return;
        }
        CpmmEntry& entry = require_cpmm(ev.pool);
        const auto res = entry.pool.provide(ev.alpha);
        entry.lp[ev.account] += res.minted;
        for (std::size_t t = 0; t < entry.pool.size(); ++t) {
            add_flow(ev.account, entry.pool.tokens[t], -res.deposited[t]);
            deposits_[ev.account][entry.pool.tokens[t]] += res.deposited[t];
        }
        record["minted"] = format_decimal(res.minted);
        record["deposited"] = amounts_json(entry.pool.tokens, res.deposited);
    }

    void do_provide_delayed(const ScenarioEvent& ev, json& record) {
        auto* entry = find_demm(ev.pool);
        if (!entry) throw std::invalid_argument("provide_delayed needs a demm pool");
        DemmPool& pool = entry->engine->pool();
        const auto deposit = amounts_to_vector(pool, ev.token_amounts);
        std::vector<Dec> minted_now;
        const auto pending = entry->engine->provide_delayed(ev.account, deposit, &minted_now);
        for (std::size_t t = 0; t < deposit.size(); ++t)
            if (!deposit[t].is_zero()) add_flow(ev.account, pool.tokens[t], -deposit[t]);
        record["submit_height"] = pending.submit_height;
        record["activation_height"] = pending.activation_height;
        if (!minted_now.empty()) {
            // zero delay: applied in place
            for (std::size_t t = 0; t < deposit.size(); ++t)
                if (!deposit[t].is_zero()) deposits_[ev.account][pool.tokens[t]] += deposit[t];
            record["minted"] = amounts_json(pool.tokens, minted_now);
        }
    }

    void do_twap_provide(const ScenarioEvent& ev, json& record) {
        auto* entry = find_demm(ev.pool);
        if (!entry) throw std::invalid_argument("twap_provide needs a demm pool");
        DemmPool& pool = entry->engine->pool();
        const auto deposit = amounts_to_vector(pool, ev.token_amounts);
        const auto quote = entry->engine->twap_provide(ev.account, deposit);
        if (!quote.accepted) {
            record["outcome"] = "rejected";
            return;
        }
        record["outcome"] = "accepted";
        for (std::size_t t = 0; t < pool.size(); ++t) {
            if (deposit[t].is_zero()) continue;
            add_flow(ev.account, pool.tokens[t], -deposit[t]);
            deposits_[ev.account][pool.tokens[t]] += deposit[t];
        }
        record["minted"] = amounts_json(pool.tokens, quote.minted);
    }

    void do_withdraw(const ScenarioEvent& ev, json& record) {
        if (auto* entry = find_demm(ev.pool)) {
            DemmPool& pool = entry->engine->pool();
            const auto tokens_before = pool.tokens;
            const auto redeem = amounts_to_vector(pool, ev.token_amounts);
            const auto payout = pool.withdraw(ev.account, redeem, entry->engine->ledger());
            for (std::size_t t = 0; t < tokens_before.size(); ++t)
                if (!payout[t].is_zero()) add_flow(ev.account, tokens_before[t], payout[t]);
            record["payout"] = amounts_json(tokens_before, payout);
            return;
        }
        CpmmEntry& entry = require_cpmm(ev.pool);
        const Dec burn = ev.alpha * entry.pool.lp_supply;
        const Dec held = entry.lp.count(ev.account) ? entry.lp[ev.account] : Dec(0);
        if (burn > held + Dec("1e-45"))
            throw std::invalid_argument("insufficient LP balance for " + ev.account);
        const auto payout = entry.pool.withdraw(ev.alpha);
        entry.lp[ev.account] = held < burn ? Dec(0) : held - burn;
        for (std::size_t t = 0; t < entry.pool.tokens.size(); ++t)
            add_flow(ev.account, entry.pool.tokens[t], payout[t]);
        record["payout"] = amounts_json(entry.pool.tokens, payout);
        record["burned"] = format_decimal(burn);
    }

    void do_claim_fees(const ScenarioEvent& ev, json& record) {
        auto* entry = find_demm(ev.pool);
        if (!entry) throw std::invalid_argument("claim_fees needs a demm pool");
        const Dec amount = entry->engine->ledger().claim_fees(ev.account, ev.token_in);
        add_flow(ev.account, ev.token_in, amount);
        record["claimed"] = format_decimal(amount);
    }

    void do_set_prices(const ScenarioEvent& ev, json& record) {
        PriceVector pv;
        for (const auto& [token, price] : ev.prices) pv.set(token, price);
        prices_ = std::move(pv);
        record["prices"] = map_json(ev.prices);
    }

    void do_arbitrage(const ScenarioEvent& ev, json& record) {
        if (!prices_) throw std::invalid_argument("arbitrage before any set_prices");
        if (auto* entry = find_demm(ev.pool)) {
            entry->engine->pool() = demm_equilibrium(entry->engine->pool(), *prices_);
            record["reserves"] = amounts_json(entry->engine->pool().tokens, entry->engine->pool().reserves);
            return;
        }
        CpmmEntry& entry = require_cpmm(ev.pool);
        entry.pool = cpmm_equilibrium(entry.pool, *prices_);
        record["reserves"] = amounts_json(entry.pool.tokens, entry.pool.reserves);
    }

    void do_add_token(const ScenarioEvent& ev, json& record) {
        if (!ev.governance) throw std::invalid_argument("add_token requires governance approval");
        auto* entry = find_demm(ev.pool);
        if (!entry) throw std::invalid_argument("add_token needs a demm pool");
        DemmPool& pool = entry->engine->pool();
        const Dec minted = pool.add_token(ev.account, pool.index_of(ev.anchor), ev.anchor_amount,
                                          ev.new_token, ev.new_reserve, entry->engine->ledger());
        add_flow(ev.account, ev.anchor, -ev.anchor_amount);
        add_flow(ev.account, ev.new_token, -ev.new_reserve);
        deposits_[ev.account][ev.anchor] += ev.anchor_amount;
        deposits_[ev.account][ev.new_token] += ev.new_reserve;
        record["minted"] = format_decimal(minted);
    }

    void do_split_pool(const ScenarioEvent& ev, json& record) {
        if (!ev.governance) throw std::invalid_argument("split_pool requires governance approval");
        auto* entry = find_demm(ev.pool);
        if (!entry) throw std::invalid_argument("split_pool needs a demm pool");
        if (!entry->engine->pending().empty())
            throw std::invalid_argument("cannot split a pool with pending deposits");
        if (demm_pools_.count(ev.left_pool) || cpmm_pools_.count(ev.left_pool) ||
            demm_pools_.count(ev.right_pool) || cpmm_pools_.count(ev.right_pool))
            throw std::invalid_argument("split target pool id already in use");
        DemmPool& pool = entry->engine->pool();
        std::vector<std::size_t> left_idx;
        for (const auto& token : ev.partition_left) left_idx.push_back(pool.index_of(token));
        // the right side must be exactly the complement
        std::set<std::string> right_set(ev.partition_right.begin(), ev.partition_right.end());
        if (right_set.size() != ev.partition_right.size())
            throw std::invalid_argument("duplicate token in partition");
        for (const auto& token : ev.partition_right) pool.index_of(token);
        if (ev.partition_left.size() + ev.partition_right.size() != pool.size())
            throw std::invalid_argument("partition does not cover the pool");
        for (const auto& token : ev.partition_left)
            if (right_set.count(token)) throw std::invalid_argument("partition sides overlap");

        auto [left, right] = DemmPool::split(pool, entry->engine->ledger(), left_idx);
        demm_pools_.erase(ev.pool);
        install_demm(ev.left_pool, std::move(left.first), std::move(left.second));
        install_demm(ev.right_pool, std::move(right.first), std::move(right.second));
        record["left_tokens"] = demm_pools_[ev.left_pool].engine->pool().tokens;
        record["right_tokens"] = demm_pools_[ev.right_pool].engine->pool().tokens;
    }

    void do_assert_state(const ScenarioEvent& ev, json& record) {
        record["tolerance"] = format_decimal(ev.tolerance);
        const auto check = [&](const std::string& what, const Dec& actual, const Dec& expect) {
            const Dec scale = expect.is_zero() ? Dec(1) : abs(expect);
            if (abs(actual - expect) > ev.tolerance * scale)
                throw runner_detail::AssertionFailure{what + ": expected " + format_decimal(expect) +
                                                      ", got " + format_decimal(actual)};
        };
        if (auto* entry = find_demm(ev.pool)) {
            const DemmPool& pool = entry->engine->pool();
            const LpLedger& ledger = entry->engine->ledger();
            if (ev.has_expect_lp_supply)
                throw runner_detail::AssertionFailure{"lp_supply does not apply to a demm pool"};
            for (const auto& [token, expect] : ev.expect_reserves)
                check("reserves." + token, pool.reserves[require_token(pool, token)], expect);
            for (const auto& [token, expect] : ev.expect_weights)
                check("weights." + token, pool.weights[require_token(pool, token)], expect);
            for (const auto& [account, amounts] : ev.expect_balances)
                for (const auto& [token, expect] : amounts)
                    check("balances." + account + "." + token, ledger.balance(account, token), expect);
            return;
        }
        CpmmEntry& entry = require_cpmm(ev.pool);
        if (ev.has_expect_balances)
            throw runner_detail::AssertionFailure{"balances do not apply to a cpmm pool"};
        for (const auto& [token, expect] : ev.expect_reserves)
            check("reserves." + token, entry.pool.reserves[entry.pool.index_of(token)], expect);
        for (const auto& [token, expect] : ev.expect_weights)
            check("weights." + token, entry.pool.weights[entry.pool.index_of(token)], expect);
        if (ev.has_expect_lp_supply) check("lp_supply", entry.pool.lp_supply, ev.expect_lp_supply);
    }

    void do_report(const ScenarioEvent& ev, json& record) {
        auto* entry = find_demm(ev.pool);
        if (!entry) throw std::invalid_argument("reports need a demm pool");
        const DemmPool& pool = entry->engine->pool();
        const LpLedger& ledger = entry->engine->ledger();
        const std::filesystem::path out_path = artifact_path(ev.out_file);

        if (ev.report_kind == "position") {
            if (!prices_) throw std::invalid_argument("position report before any set_prices");
            const auto basis = basis_for(pool, ev, ev.account);
            const auto rep = position(pool, ledger, ev.account, *prices_, basis);
            json doc{{"account", rep.account},
                     {"entitled", amounts_json(pool.tokens, rep.entitled)},
                     {"pool_value", format_decimal(rep.pool_value)},
                     {"hold_value", format_decimal(rep.hold_value)},
                     {"il_abs", format_decimal(rep.il_abs)},
                     {"il_rel", format_decimal(rep.il_rel)}};
            runner_detail::write_file(out_path, doc.dump(2) + "\n");
        } else if (ev.report_kind == "il_curve") {
            if (!prices_) throw std::invalid_argument("il_curve report before any set_prices");
            std::vector<std::pair<std::string, std::vector<Dec>>> bases;
            if (!ev.bases.empty()) {
                for (const auto& [account, basis] : ev.bases)
                    bases.emplace_back(account, basis_for(pool, ev, account));
            } else {
                for (const auto& [account, dep] : deposits_)
                    bases.emplace_back(account, basis_for(pool, ev, account));
            }
            const auto grid = price_grid(pool, *prices_, ev.grid_lo.convert_to<double>(),
                                         ev.grid_hi.convert_to<double>(), ev.grid_n);
            const auto table = relative_il_table(pool, ledger, bases, grid, *prices_);
            runner_detail::write_file(out_path, table.to_csv());
        } else {  // trade_curve
            const auto table = trade_outcome_table(pool, pool.index_of(ev.token_in),
                                                   pool.index_of(ev.token_out), ev.sweep_amounts);
            runner_detail::write_file(out_path, table.to_csv());
        }
        artifact_names_.push_back(ev.out_file);
        record["artifact"] = ev.out_file;
    }

    // ---- helpers ----

    void install_demm(const std::string& name, DemmPool pool, LpLedger ledger) {
        auto engine = std::make_unique<BlockEngine>(
            std::move(pool), std::move(ledger), script_.mitigation.k,
            script_.seed ^ fnv1a64(name), script_.mitigation.d_min, script_.mitigation.d_max);
        demm_pools_[name] = DemmEntry{std::move(engine)};
    }

    DemmEntry* find_demm(const std::string& name) {
        const auto it = demm_pools_.find(name);
        return it == demm_pools_.end() ? nullptr : &it->second;
    }

    CpmmEntry& require_cpmm(const std::string& name) {
        const auto it = cpmm_pools_.find(name);
        if (it == cpmm_pools_.end()) throw std::invalid_argument("unknown pool '" + name + "'");
        return it->second;
    }

    static std::size_t require_token(const DemmPool& pool, const std::string& token) {
        return pool.index_of(token);
    }

    static std::vector<Dec> amounts_to_vector(const DemmPool& pool,
                                              const std::map<std::string, Dec>& amounts) {
        std::vector<Dec> out(pool.size(), Dec(0));
        for (const auto& [token, amount] : amounts) out[pool.index_of(token)] = amount;
        return out;
    }

    std::vector<Dec> basis_for(const DemmPool& pool, const ScenarioEvent& ev,
                               const std::string& account) const {
        std::vector<Dec> basis(pool.size(), Dec(0));
        const auto explicit_it = ev.bases.find(account);
        if (explicit_it != ev.bases.end()) {
            for (const auto& [token, amount] : explicit_it->second)
                basis[pool.index_of(token)] = amount;
            return basis;
        }
        const auto it = deposits_.find(account);
        if (it == deposits_.end()) throw std::invalid_argument("no deposit history for " + account);
        for (std::size_t t = 0; t < pool.size(); ++t) {
            const auto amount = it->second.find(pool.tokens[t]);
            if (amount != it->second.end()) basis[t] = amount->second;
        }
        return basis;
    }

    void add_flow(const std::string& account, const std::string& token, const Dec& delta) {
        if (delta.is_zero()) return;
        flows_[account][token] += delta;
    }

    void advance_all_blocks(std::size_t next_block) {
        for (auto& [name, entry] : demm_pools_) {
            const auto results = entry.engine->advance_block();
            for (const auto& res : results) {
                json record{{"block", next_block + 1},
                            {"index", -1},
                            {"kind", "activation"},
                            {"pool", name},
                            {"provider", res.pending.provider},
                            {"applied", res.applied}};
                json dep = json::object();
                for (const auto& [token, amount] : res.pending.deposit)
                    dep[token] = format_decimal(amount);
                record["deposit"] = std::move(dep);
                if (res.applied) {
                    for (const auto& [token, amount] : res.pending.deposit)
                        deposits_[res.pending.provider][token] += amount;
                    record["minted"] = amounts_json(entry.engine->pool().tokens, res.minted);
                } else {
                    // refund: the escrowed tokens come back
                    for (const auto& [token, amount] : res.pending.deposit)
                        add_flow(res.pending.provider, token, amount);
                    record["note"] = res.note;
                }
                record["post_digest"] = state_digest();
                events_out_.push_back(std::move(record));
            }
        }
    }

    static json amounts_json(const std::vector<std::string>& tokens, const std::vector<Dec>& amounts) {
        json out = json::object();
        for (std::size_t t = 0; t < tokens.size() && t < amounts.size(); ++t)
            out[tokens[t]] = format_decimal(amounts[t]);
        return out;
    }

    static json map_json(const std::map<std::string, Dec>& amounts) {
        json out = json::object();
        for (const auto& [key, amount] : amounts) out[key] = format_decimal(amount);
        return out;
    }

    json final_states_json() const {
        json out = json::object();
        for (const auto& [name, entry] : demm_pools_)
            out[name] = demm_pool_to_json(entry.engine->pool(), entry.engine->ledger());
        for (const auto& [name, entry] : cpmm_pools_) out[name] = cpmm_pool_to_json(entry.pool, entry.lp);
        return out;
    }

    json flows_json() const {
        json out = json::object();
        for (const auto& [account, tokens] : flows_) {
            json entry = json::object();
            for (const auto& [token, amount] : tokens)
                if (!amount.is_zero()) entry[token] = format_decimal(amount);
            if (!entry.empty()) out[account] = std::move(entry);
        }
        return out;
    }

    json prices_json() const {
        if (!prices_) return json();
        return map_json(prices_->prices);
    }

    json deposits_json() const {
        json out = json::object();
        for (const auto& [account, tokens] : deposits_) {
            json entry = json::object();
            for (const auto& [token, amount] : tokens)
                if (!amount.is_zero()) entry[token] = format_decimal(amount);
            if (!entry.empty()) out[account] = std::move(entry);
        }
        return out;
    }

    std::string state_digest() const { return fnv1a64_hex(final_states_json().dump()); }

    std::filesystem::path artifact_path(const std::string& name) const {
        const std::filesystem::path rel(name);
        if (rel.is_absolute()) throw std::invalid_argument("artifact paths must be relative: " + name);
        for (const auto& part : rel)
            if (part == "..") throw std::invalid_argument("artifact paths cannot escape the output dir");
        auto full = out_dir_ / rel;
        std::filesystem::create_directories(full.parent_path());
        return full;
    }

    void write_final_snapshots() const {
        for (const auto& [name, entry] : demm_pools_) {
            const json snap = make_snapshot(demm_pool_to_json(entry.engine->pool(), entry.engine->ledger()));
            runner_detail::write_file(out_dir_ / ("final_state_" + name + ".json"), snap.dump(2) + "\n");
        }
        for (const auto& [name, entry] : cpmm_pools_) {
            const json snap = make_snapshot(cpmm_pool_to_json(entry.pool, entry.lp));
            runner_detail::write_file(out_dir_ / ("final_state_" + name + ".json"), snap.dump(2) + "\n");
        }
    }

    const ScenarioScript& script_;
    std::filesystem::path out_dir_;
    std::map<std::string, DemmEntry> demm_pools_;
    std::map<std::string, CpmmEntry> cpmm_pools_;
    std::optional<PriceVector> prices_;
    std::map<std::string, std::map<std::string, Dec>> flows_;     // account -> token -> net gain
    std::map<std::string, std::map<std::string, Dec>> deposits_;  // account -> token -> supplied
    json events_out_;
    std::vector<std::string> artifact_names_;
};

inline RunTranscript run_scenario(const ScenarioScript& script, const std::filesystem::path& out_dir) {
    return ScenarioRunner(script, out_dir).run();
}

}  // namespace demm
