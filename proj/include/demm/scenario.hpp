// Scenario script model: JSON parsing and validation, plus checksummed
// snapshot files. Amounts travel as canonical decimal strings only.
#pragma once

#include <demm/cpmm.hpp>
#include <demm/demm.hpp>

#include <json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace demm {

using nlohmann::json;

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view text) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(text);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

struct ScenarioEvent {
    enum class Kind {
        Init,
        Trade,
        Provide,
        ProvideDelayed,
        TwapProvide,
        Withdraw,
        ClaimFees,
        SetPrices,
        Arbitrage,
        AddToken,
        SplitPool,
        AssertState,
        Report,
    };

    Kind kind = Kind::Init;
    std::string pool = "main";

    // init
    std::string protocol;  // "demm" or "cpmm"
    std::vector<std::string> tokens;
    std::vector<Dec> reserves;
    std::vector<Dec> weights;  // cpmm only
    Dec initial_lp = Dec(1);   // cpmm only
    std::string genesis;
    std::string from_snapshot;

    // trade / provide / withdraw / claim_fees
    std::string account;
    std::string token_in, token_out;
    Dec amount;
    std::map<std::string, Dec> token_amounts;  // deposit or redeem, by token name
    Dec alpha;                                 // cpmm provide/withdraw

    // set_prices
    std::map<std::string, Dec> prices;

    // add_token / split_pool
    bool governance = false;
    std::string anchor;
    Dec anchor_amount;
    std::string new_token;
    Dec new_reserve;
    std::vector<std::string> partition_left, partition_right;
    std::string left_pool, right_pool;

    // assert_state
    bool has_expect_reserves = false, has_expect_weights = false, has_expect_balances = false,
         has_expect_lp_supply = false;
    std::map<std::string, Dec> expect_reserves, expect_weights;
    std::map<std::string, std::map<std::string, Dec>> expect_balances;
    Dec expect_lp_supply;
    Dec tolerance;

    // report
    std::string report_kind;  // "position" | "il_curve" | "trade_curve"
    std::string out_file;
    std::map<std::string, std::map<std::string, Dec>> bases;  // account -> basis by token
    Dec grid_lo = Dec(1) / 16, grid_hi = Dec(16);
    std::size_t grid_n = 101;
    std::vector<Dec> sweep_amounts;
};

struct ScenarioScript {
    int format_version = 1;
    std::string name;
    std::uint64_t seed = 0;
    Dec fee_rho = Dec(1);
    struct Mitigation {
        enum class Kind { None, Delay, Twap };
        Kind kind = Kind::None;
        std::uint64_t d_min = 0, d_max = 0;  // delay range for provide_delayed
        std::size_t k = 1;                   // TWAP window length
    } mitigation;
    std::vector<std::vector<ScenarioEvent>> blocks;

    std::size_t event_count() const {
        std::size_t n = 0;
        for (const auto& block : blocks) n += block.size();
        return n;
    }
};

namespace scenario_detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
    throw std::invalid_argument("scenario: " + where + ": " + what);
}

inline void expect_keys(const json& j, const std::string& where, const std::set<std::string>& allowed,
                        const std::set<std::string>& required) {
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
    for (const auto& key : required)
        if (!j.contains(key)) fail(where, "missing key '" + key + "'");
}

inline Dec get_dec(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "amounts must be canonical decimal strings");
    try {
        return parse_dec(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
}

inline std::map<std::string, Dec> get_dec_map(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected token->amount object");
    std::map<std::string, Dec> out;
    for (const auto& [token, value] : j.items()) out[token] = get_dec(value, where + "." + token);
    return out;
}

inline std::vector<Dec> get_dec_list(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected a list of decimal strings");
    std::vector<Dec> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_dec(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<std::string> get_str_list(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected a list of strings");
    std::vector<std::string> out;
    for (const auto& item : j) {
        if (!item.is_string()) fail(where, "expected a list of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

inline std::string get_str(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

inline ScenarioEvent parse_event(const json& j, const std::string& where) {
    ScenarioEvent ev;
    if (!j.is_object() || !j.contains("kind")) fail(where, "event needs a 'kind'");
    const std::string kind = get_str(j["kind"], where + ".kind");
    const auto opt_pool = [&] {
        if (j.contains("pool")) ev.pool = get_str(j["pool"], where + ".pool");
    };

    if (kind == "init") {
        ev.kind = ScenarioEvent::Kind::Init;
        if (j.contains("from_snapshot")) {
            expect_keys(j, where, {"kind", "pool", "from_snapshot"}, {"kind", "from_snapshot"});
            opt_pool();
            ev.from_snapshot = get_str(j["from_snapshot"], where + ".from_snapshot");
            return ev;
        }
        opt_pool();
        expect_keys(j, where,
                    {"kind", "pool", "protocol", "tokens", "reserves", "weights", "initial_lp",
                     "genesis"},
                    {"kind", "tokens", "reserves", "genesis"});
        ev.protocol = j.contains("protocol") ? get_str(j["protocol"], where + ".protocol") : "demm";
        if (ev.protocol != "demm" && ev.protocol != "cpmm") fail(where, "protocol must be demm or cpmm");
        ev.tokens = get_str_list(j["tokens"], where + ".tokens");
        ev.reserves = get_dec_list(j["reserves"], where + ".reserves");
        ev.genesis = get_str(j["genesis"], where + ".genesis");
        if (ev.protocol == "cpmm") {
            if (!j.contains("weights")) fail(where, "cpmm init needs weights");
            ev.weights = get_dec_list(j["weights"], where + ".weights");
            if (j.contains("initial_lp")) ev.initial_lp = get_dec(j["initial_lp"], where + ".initial_lp");
        } else if (j.contains("weights") || j.contains("initial_lp")) {
            fail(where, "weights/initial_lp are cpmm-only");
        }
        return ev;
    }
    if (kind == "trade") {
        ev.kind = ScenarioEvent::Kind::Trade;
        expect_keys(j, where, {"kind", "pool", "account", "token_in", "token_out", "amount_in"},
                    {"kind", "account", "token_in", "token_out", "amount_in"});
        opt_pool();
        ev.account = get_str(j["account"], where + ".account");
        ev.token_in = get_str(j["token_in"], where + ".token_in");
        ev.token_out = get_str(j["token_out"], where + ".token_out");
        ev.amount = get_dec(j["amount_in"], where + ".amount_in");
        return ev;
    }
    if (kind == "provide" || kind == "provide_delayed" || kind == "twap_provide") {
        ev.kind = kind == "provide"           ? ScenarioEvent::Kind::Provide
                  : kind == "provide_delayed" ? ScenarioEvent::Kind::ProvideDelayed
                                              : ScenarioEvent::Kind::TwapProvide;
        expect_keys(j, where, {"kind", "pool", "account", "deposit", "alpha"}, {"kind", "account"});
        opt_pool();
        ev.account = get_str(j["account"], where + ".account");
        if (j.contains("alpha") == j.contains("deposit"))
            fail(where, "needs exactly one of 'deposit' (demm) or 'alpha' (cpmm)");
        if (j.contains("alpha")) {
            if (ev.kind != ScenarioEvent::Kind::Provide) fail(where, "alpha form is cpmm-only");
            ev.alpha = get_dec(j["alpha"], where + ".alpha");
        } else {
            ev.token_amounts = get_dec_map(j["deposit"], where + ".deposit");
        }
        return ev;
    }
    if (kind == "withdraw") {
        ev.kind = ScenarioEvent::Kind::Withdraw;
        expect_keys(j, where, {"kind", "pool", "account", "redeem", "alpha"}, {"kind", "account"});
        opt_pool();
        ev.account = get_str(j["account"], where + ".account");
        if (j.contains("alpha") == j.contains("redeem"))
            fail(where, "needs exactly one of 'redeem' (demm) or 'alpha' (cpmm)");
        if (j.contains("alpha"))
            ev.alpha = get_dec(j["alpha"], where + ".alpha");
        else
            ev.token_amounts = get_dec_map(j["redeem"], where + ".redeem");
        return ev;
    }
    if (kind == "claim_fees") {
        ev.kind = ScenarioEvent::Kind::ClaimFees;
        expect_keys(j, where, {"kind", "pool", "account", "token"}, {"kind", "account", "token"});
        opt_pool();
        ev.account = get_str(j["account"], where + ".account");
        ev.token_in = get_str(j["token"], where + ".token");
        return ev;
    }
    if (kind == "set_prices") {
        ev.kind = ScenarioEvent::Kind::SetPrices;
        expect_keys(j, where, {"kind", "prices"}, {"kind", "prices"});
        ev.prices = get_dec_map(j["prices"], where + ".prices");
        for (const auto& [token, price] : ev.prices)
            if (!(price > 0)) fail(where, "price must be > 0 for " + token);
        return ev;
    }
    if (kind == "arbitrage") {
        ev.kind = ScenarioEvent::Kind::Arbitrage;
        expect_keys(j, where, {"kind", "pool"}, {"kind"});
        opt_pool();
        return ev;
    }
    if (kind == "add_token") {
        ev.kind = ScenarioEvent::Kind::AddToken;
        expect_keys(j, where,
                    {"kind", "pool", "governance", "account", "anchor", "anchor_amount", "token",
                     "reserve"},
                    {"kind", "governance", "account", "anchor", "anchor_amount", "token", "reserve"});
        opt_pool();
        if (!j["governance"].is_boolean()) fail(where, "governance must be a boolean");
        ev.governance = j["governance"].get<bool>();
        ev.account = get_str(j["account"], where + ".account");
        ev.anchor = get_str(j["anchor"], where + ".anchor");
        ev.anchor_amount = get_dec(j["anchor_amount"], where + ".anchor_amount");
        ev.new_token = get_str(j["token"], where + ".token");
        ev.new_reserve = get_dec(j["reserve"], where + ".reserve");
        return ev;
    }
    if (kind == "split_pool") {
        ev.kind = ScenarioEvent::Kind::SplitPool;
        expect_keys(j, where, {"kind", "pool", "governance", "left", "right", "left_pool", "right_pool"},
                    {"kind", "governance", "left", "right", "left_pool", "right_pool"});
        opt_pool();
        if (!j["governance"].is_boolean()) fail(where, "governance must be a boolean");
        ev.governance = j["governance"].get<bool>();
        ev.partition_left = get_str_list(j["left"], where + ".left");
        ev.partition_right = get_str_list(j["right"], where + ".right");
        ev.left_pool = get_str(j["left_pool"], where + ".left_pool");
        ev.right_pool = get_str(j["right_pool"], where + ".right_pool");
        return ev;
    }
    if (kind == "assert_state") {
        ev.kind = ScenarioEvent::Kind::AssertState;
        expect_keys(j, where,
                    {"kind", "pool", "reserves", "weights", "balances", "lp_supply", "tolerance"},
                    {"kind", "tolerance"});
        opt_pool();
        ev.tolerance = get_dec(j["tolerance"], where + ".tolerance");
        if (ev.tolerance < 0) fail(where, "tolerance must be >= 0");
        if (j.contains("reserves")) {
            ev.has_expect_reserves = true;
            ev.expect_reserves = get_dec_map(j["reserves"], where + ".reserves");
        }
        if (j.contains("weights")) {
            ev.has_expect_weights = true;
            ev.expect_weights = get_dec_map(j["weights"], where + ".weights");
        }
        if (j.contains("lp_supply")) {
            ev.has_expect_lp_supply = true;
            ev.expect_lp_supply = get_dec(j["lp_supply"], where + ".lp_supply");
        }
        if (j.contains("balances")) {
            ev.has_expect_balances = true;
            if (!j["balances"].is_object()) fail(where, "balances must be account->token->amount");
            for (const auto& [account, amounts] : j["balances"].items())
                ev.expect_balances[account] = get_dec_map(amounts, where + ".balances." + account);
        }
        if (!ev.has_expect_reserves && !ev.has_expect_weights && !ev.has_expect_balances &&
            !ev.has_expect_lp_supply)
            fail(where, "assert_state checks nothing");
        return ev;
    }
    if (kind == "report") {
        ev.kind = ScenarioEvent::Kind::Report;
        expect_keys(j, where,
                    {"kind", "pool", "report", "out", "account", "basis", "accounts", "grid_lo",
                     "grid_hi", "grid_n", "token_in", "token_out", "amounts"},
                    {"kind", "report", "out"});
        opt_pool();
        ev.report_kind = get_str(j["report"], where + ".report");
        ev.out_file = get_str(j["out"], where + ".out");
        if (ev.report_kind == "position") {
            if (!j.contains("account")) fail(where, "position report needs an account");
            ev.account = get_str(j["account"], where + ".account");
            if (j.contains("basis")) ev.bases[ev.account] = get_dec_map(j["basis"], where + ".basis");
        } else if (ev.report_kind == "il_curve") {
            if (j.contains("accounts")) {
                for (const auto& [account, basis] : j["accounts"].items())
                    ev.bases[account] = get_dec_map(basis, where + ".accounts." + account);
            }
            if (j.contains("grid_lo")) ev.grid_lo = get_dec(j["grid_lo"], where + ".grid_lo");
            if (j.contains("grid_hi")) ev.grid_hi = get_dec(j["grid_hi"], where + ".grid_hi");
            if (j.contains("grid_n")) {
                if (!j["grid_n"].is_number_unsigned()) fail(where, "grid_n must be a positive integer");
                ev.grid_n = j["grid_n"].get<std::size_t>();
            }
            if (!(ev.grid_lo > 0) || !(ev.grid_hi > ev.grid_lo) || ev.grid_n < 2)
                fail(where, "bad il_curve grid");
        } else if (ev.report_kind == "trade_curve") {
            if (!j.contains("token_in") || !j.contains("token_out") || !j.contains("amounts"))
                fail(where, "trade_curve needs token_in, token_out, amounts");
            ev.token_in = get_str(j["token_in"], where + ".token_in");
            ev.token_out = get_str(j["token_out"], where + ".token_out");
            ev.sweep_amounts = get_dec_list(j["amounts"], where + ".amounts");
            if (ev.sweep_amounts.empty()) fail(where, "trade_curve needs at least one amount");
        } else {
            fail(where, "unknown report kind '" + ev.report_kind + "'");
        }
        return ev;
    }
    fail(where, "unknown event kind '" + kind + "'");
}

}  // namespace scenario_detail

// Parse and validate a scenario document. Throws std::invalid_argument with a
// JSON-path diagnostic on any schema violation.
inline ScenarioScript parse_scenario(std::string_view text) {
    using namespace scenario_detail;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario: not valid JSON: ") + e.what());
    }
    expect_keys(doc, "$", {"format_version", "name", "seed", "fee_rho", "mitigation", "blocks"},
                {"format_version", "name", "blocks"});
    ScenarioScript script;
    if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != 1)
        fail("$.format_version", "unsupported format version");
    script.name = get_str(doc["name"], "$.name");
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) fail("$.seed", "seed must be a non-negative integer");
        script.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("fee_rho")) {
        script.fee_rho = get_dec(doc["fee_rho"], "$.fee_rho");
        if (!(script.fee_rho > 0) || script.fee_rho > 1) fail("$.fee_rho", "rho must be in (0,1]");
    }
    if (doc.contains("mitigation")) {
        const json& m = doc["mitigation"];
        expect_keys(m, "$.mitigation", {"kind", "d_min", "d_max", "k"}, {"kind"});
        const std::string kind = get_str(m["kind"], "$.mitigation.kind");
        if (kind == "none") {
            script.mitigation.kind = ScenarioScript::Mitigation::Kind::None;
        } else if (kind == "delay") {
            script.mitigation.kind = ScenarioScript::Mitigation::Kind::Delay;
            if (m.contains("d_min")) script.mitigation.d_min = m["d_min"].get<std::uint64_t>();
            if (m.contains("d_max")) script.mitigation.d_max = m["d_max"].get<std::uint64_t>();
            if (script.mitigation.d_max < script.mitigation.d_min)
                fail("$.mitigation", "d_max < d_min");
        } else if (kind == "twap") {
            script.mitigation.kind = ScenarioScript::Mitigation::Kind::Twap;
            if (m.contains("k")) {
                if (!m["k"].is_number_unsigned() || m["k"].get<std::size_t>() < 1)
                    fail("$.mitigation.k", "k must be a positive integer");
                script.mitigation.k = m["k"].get<std::size_t>();
            }
        } else {
            fail("$.mitigation.kind", "must be none, delay, or twap");
        }
    }
    if (!doc["blocks"].is_array() || doc["blocks"].empty()) fail("$.blocks", "needs at least one block");
    for (std::size_t b = 0; b < doc["blocks"].size(); ++b) {
        const json& block = doc["blocks"][b];
        const std::string bwhere = "$.blocks[" + std::to_string(b) + "]";
        expect_keys(block, bwhere, {"events"}, {"events"});
        if (!block["events"].is_array()) fail(bwhere + ".events", "expected a list");
        std::vector<ScenarioEvent> events;
        for (std::size_t e = 0; e < block["events"].size(); ++e)
            events.push_back(parse_event(block["events"][e], bwhere + ".events[" + std::to_string(e) + "]"));
        script.blocks.push_back(std::move(events));
    }
    if (script.blocks[0].empty() || script.blocks[0][0].kind != ScenarioEvent::Kind::Init)
        fail("$.blocks[0].events[0]", "the first event must be an init");
    if (script.fee_rho != 1) {
        for (const auto& block : script.blocks)
            for (const auto& ev : block)
                if (ev.kind == ScenarioEvent::Kind::Arbitrage)
                    fail("$", "arbitrage events require fee_rho = 1");
    }
    return script;
}

// ---- pool serialization and checksummed snapshots --------------------------

inline json ledger_to_json(const LpLedger& ledger) {
    json balances = json::object();
    for (const auto& [token, col] : ledger.balances) {
        json entry = json::object();
        for (const auto& [account, amount] : col)
            if (!amount.is_zero()) entry[account] = format_decimal(amount);
        if (!entry.empty()) balances[token] = std::move(entry);
    }
    json pots = json::object();
    for (const auto& [token, col] : ledger.fee_pots) {
        json entry = json::object();
        for (const auto& [account, amount] : col)
            if (!amount.is_zero()) entry[account] = format_decimal(amount);
        if (!entry.empty()) pots[token] = std::move(entry);
    }
    return json{{"balances", std::move(balances)}, {"fee_pots", std::move(pots)}};
}

inline LpLedger ledger_from_json(const json& j) {
    LpLedger ledger;
    if (j.contains("balances"))
        for (const auto& [token, col] : j["balances"].items())
            for (const auto& [account, amount] : col.items())
                ledger.balances[token][account] = parse_dec(amount.get<std::string>());
    if (j.contains("fee_pots"))
        for (const auto& [token, col] : j["fee_pots"].items())
            for (const auto& [account, amount] : col.items())
                ledger.fee_pots[token][account] = parse_dec(amount.get<std::string>());
    return ledger;
}

inline json demm_pool_to_json(const DemmPool& pool, const LpLedger& ledger) {
    json reserves = json::array(), weights = json::array();
    for (const Dec& r : pool.reserves) reserves.push_back(format_decimal(r));
    for (const Dec& w : pool.weights) weights.push_back(format_decimal(w));
    return json{{"protocol", "demm"},
                {"tokens", pool.tokens},
                {"reserves", std::move(reserves)},
                {"weights", std::move(weights)},
                {"ledger", ledger_to_json(ledger)}};
}

inline json cpmm_pool_to_json(const CpmmPool& pool, const std::map<std::string, Dec>& lp_balances) {
    json reserves = json::array(), weights = json::array();
    for (const Dec& r : pool.reserves) reserves.push_back(format_decimal(r));
    for (const Dec& w : pool.weights) weights.push_back(format_decimal(w));
    json lp = json::object();
    for (const auto& [account, amount] : lp_balances)
        if (!amount.is_zero()) lp[account] = format_decimal(amount);
    return json{{"protocol", "cpmm"},
                {"tokens", pool.tokens},
                {"reserves", std::move(reserves)},
                {"weights", std::move(weights)},
                {"lp_supply", format_decimal(pool.lp_supply)},
                {"lp_balances", std::move(lp)}};
}

// Snapshot envelope: format_version + checksum over the serialized payload.
inline json make_snapshot(const json& payload) {
    return json{{"format_version", 1}, {"checksum", fnv1a64_hex(payload.dump())}, {"payload", payload}};
}

inline json open_snapshot(const json& snapshot) {
    if (!snapshot.is_object() || !snapshot.contains("format_version") ||
        !snapshot.contains("checksum") || !snapshot.contains("payload"))
        throw std::runtime_error("snapshot: missing envelope fields");
    if (snapshot["format_version"].get<int>() != 1)
        throw std::runtime_error("snapshot: unsupported format version");
    const std::string expect = snapshot["checksum"].get<std::string>();
    const std::string actual = fnv1a64_hex(snapshot["payload"].dump());
    if (expect != actual)
        throw std::runtime_error("snapshot: checksum mismatch (expected " + expect + ", computed " +
                                 actual + ")");
    return snapshot["payload"];
}

inline std::pair<DemmPool, LpLedger> demm_pool_from_json(const json& payload) {
    DemmPool pool;
    pool.tokens = payload.at("tokens").get<std::vector<std::string>>();
    for (const auto& r : payload.at("reserves")) pool.reserves.push_back(parse_dec(r.get<std::string>()));
    for (const auto& w : payload.at("weights")) pool.weights.push_back(parse_dec(w.get<std::string>()));
    if (pool.tokens.size() != pool.reserves.size() || pool.tokens.size() != pool.weights.size())
        throw std::runtime_error("snapshot: inconsistent vector lengths");
    return {std::move(pool), ledger_from_json(payload.at("ledger"))};
}

inline std::pair<CpmmPool, std::map<std::string, Dec>> cpmm_pool_from_json(const json& payload) {
    CpmmPool pool;
    pool.tokens = payload.at("tokens").get<std::vector<std::string>>();
    for (const auto& r : payload.at("reserves")) pool.reserves.push_back(parse_dec(r.get<std::string>()));
    for (const auto& w : payload.at("weights")) pool.weights.push_back(parse_dec(w.get<std::string>()));
    pool.lp_supply = parse_dec(payload.at("lp_supply").get<std::string>());
    std::map<std::string, Dec> lp;
    if (payload.contains("lp_balances"))
        for (const auto& [account, amount] : payload["lp_balances"].items())
            lp[account] = parse_dec(amount.get<std::string>());
    return {std::move(pool), std::move(lp)};
}

}  // namespace demm
