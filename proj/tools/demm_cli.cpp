// Command-line front end: scenario replay, attack demos, loss/gain curves,
// and checksummed state snapshots.
#include <CLI11.hpp>

#include <demm/runner.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace demm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitRunFailure = 2;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + path.string());
    out << text;
}

ScenarioScript load_script(const std::string& path, const std::optional<std::uint64_t>& seed) {
    ScenarioScript script = parse_scenario(slurp(path));
    if (seed) script.seed = *seed;
    return script;
}

void emit(const json& doc, const std::string& out_file) {
    const std::string text = doc.dump(2) + "\n";
    if (out_file.empty())
        std::cout << text;
    else
        spill(out_file, text);
}

int cmd_run(const std::string& script_path, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed) {
    const ScenarioScript script = load_script(script_path, seed);
    const RunTranscript result = run_scenario(script, out_dir);
    if (!result.ok) {
        std::cerr << "run failed (" << result.failure_kind << "): " << result.failure_message << "\n";
        return kExitRunFailure;
    }
    std::cout << "ok: " << script.name << "  digest " << result.digest << "  transcript "
              << result.transcript_path.string() << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& script_path) {
    const ScenarioScript script = load_script(script_path, std::nullopt);
    std::cout << "valid: " << script.name << " (" << script.blocks.size() << " blocks, "
              << script.event_count() << " events)\n";
    return kExitOk;
}

json attack_steps_json(const AttackReport& report) {
    json steps = json::array();
    const char* labels[] = {"swap_in", "one_sided_provide", "swap_back", "redeem"};
    for (std::size_t i = 0; i < report.step_states.size(); ++i) {
        const DemmPool& state = report.step_states[i];
        json reserves = json::object(), weights = json::object();
        for (std::size_t t = 0; t < state.size(); ++t) {
            reserves[state.tokens[t]] = format_decimal(state.reserves[t]);
            weights[state.tokens[t]] = format_decimal(state.weights[t]);
        }
        steps.push_back(json{{"step", labels[i]}, {"reserves", reserves}, {"weights", weights}});
    }
    return steps;
}

// The documented drain: pool (4,10), prices $5/$2, endowment 36 s, deposit 1 t.
int cmd_replay_attack(const std::string& mitigation, const std::string& out_file,
                      std::uint64_t seed) {
    const PriceVector attack_prices = PriceVector::of({{"s", Dec(5)}, {"t", Dec(2)}});
    auto [pool, ledger] = DemmPool::create({"s", "t"}, {Dec(4), Dec(10)}, "lp0");
    const Dec unmitigated_value = Dec(5) * Dec("2.4") + Dec(2) * Dec(5);

    json doc{{"mitigation", mitigation},
             {"attack_prices", json{{"s", "5"}, {"t", "2"}}},
             {"endowment", json{{"s", "36"}}}};

    if (mitigation == "none") {
        const auto report = replay_flash_attack(pool, ledger, {Dec(36), Dec(1), false});
        const auto frozen = replay_flash_attack(pool, ledger, {Dec(36), Dec(1), true});
        doc["steps"] = attack_steps_json(report);
        doc["profit"] = json{{"s", format_decimal(report.profit[0])},
                             {"t", format_decimal(report.profit[1])}};
        doc["profit_value"] = format_decimal(Dec(5) * report.profit[0] + Dec(2) * report.profit[1]);
        doc["fixed_invariant_counterfactual"] =
            json{{"swap_back_output", format_decimal(frozen.step3_output)},
                 {"profit",
                  json{{"s", format_decimal(frozen.profit[0])}, {"t", format_decimal(frozen.profit[1])}}}};
    } else if (mitigation == "twap") {
        BlockEngine engine(pool, ledger, 1, seed, 0, 0);
        engine.advance_block();  // one quiet block of history
        const Dec got_t =
            engine.pool().trade(0, 1, Dec(36), FeePolicy::fee_free(), engine.ledger()).amount_out;
        const auto quote = engine.twap_provide("eve", {Dec(0), Dec(1)});
        doc["swap_received"] = format_decimal(got_t);
        doc["deposit_outcome"] = quote.accepted ? "accepted" : "rejected";
        doc["attack_aborted"] = !quote.accepted;
    } else if (mitigation == "delay") {
        BlockEngine engine(pool, ledger, 1, seed, 1, 1);
        const Dec got_t =
            engine.pool().trade(0, 1, Dec(36), FeePolicy::fee_free(), engine.ledger()).amount_out;
        engine.provide_delayed("eve", {Dec(0), Dec(1)});
        engine.pool() = arbitrage_oracle(engine.pool(), attack_prices);  // corrected before activation
        const auto results = engine.advance_block();
        Dec minted_t = 0;
        if (!results.empty() && results[0].applied) minted_t = results[0].minted[1];
        const Dec got_s =
            engine.pool().trade(1, 0, got_t - Dec(1), FeePolicy::fee_free(), engine.ledger()).amount_out;
        std::vector<Dec> payout{Dec(0), Dec(0)};
        if (minted_t > 0) payout = engine.pool().withdraw("eve", {Dec(0), minted_t}, engine.ledger());
        const Dec value = Dec(5) * (got_s - Dec(36)) + Dec(2) * payout[1];
        doc["delay_blocks"] = 1;
        doc["minted_t"] = format_decimal(minted_t);
        doc["attacker_value"] = format_decimal(value);
        doc["unmitigated_value"] = format_decimal(unmitigated_value);
        doc["strictly_below_unmitigated"] = value < unmitigated_value;
    } else {
        throw std::invalid_argument("mitigation must be none, delay, or twap");
    }
    emit(doc, out_file);
    return kExitOk;
}

int cmd_il_curve(const std::string& script_path, const std::string& grid_spec,
                 const std::string& out_dir, const std::string& pool_name,
                 const std::optional<std::uint64_t>& seed) {
    double lo = 1.0 / 16, hi = 16.0;
    std::size_t n = 101;
    if (!grid_spec.empty()) {
        std::istringstream in(grid_spec);
        char c1 = 0, c2 = 0;
        if (!(in >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || !(lo > 0) || !(hi > lo) ||
            n < 2)
            throw std::invalid_argument("grid must be lo:hi:n with 0 < lo < hi and n >= 2");
    }
    const ScenarioScript script = load_script(script_path, seed);
    const RunTranscript result = run_scenario(script, out_dir);
    if (!result.ok) {
        std::cerr << "run failed (" << result.failure_kind << "): " << result.failure_message << "\n";
        return kExitRunFailure;
    }
    const json& states = result.doc["final_states"];
    if (!states.contains(pool_name)) throw std::invalid_argument("no pool '" + pool_name + "' in run");
    if (states[pool_name]["protocol"] != "demm")
        throw std::invalid_argument("il-curve needs a demm pool");
    if (result.doc["prices"].is_null())
        throw std::invalid_argument("script sets no prices; add a set_prices event");
    auto [pool, ledger] = demm_pool_from_json(states[pool_name]);
    PriceVector base;
    for (const auto& [token, price] : result.doc["prices"].items())
        base.set(token, parse_dec(price.get<std::string>()));

    std::vector<std::pair<std::string, std::vector<Dec>>> bases;
    for (const auto& [account, dep] : result.doc["deposits"].items()) {
        std::vector<Dec> basis(pool.size(), Dec(0));
        bool in_pool = false;
        for (std::size_t t = 0; t < pool.size(); ++t) {
            if (dep.contains(pool.tokens[t])) basis[t] = parse_dec(dep[pool.tokens[t]].get<std::string>());
            if (!ledger.balance(account, pool.tokens[t]).is_zero()) in_pool = true;
        }
        if (in_pool) bases.emplace_back(account, std::move(basis));
    }
    const auto grid = price_grid(pool, base, lo, hi, n);
    const auto table = relative_il_table(pool, ledger, bases, grid, base);
    const fs::path out_path = fs::path(out_dir) / "il_curve.csv";
    spill(out_path, table.to_csv());
    std::cout << "wrote " << out_path.string() << " (" << table.rows.size() << " rows)\n";
    return kExitOk;
}

int cmd_snapshot(const std::string& script_path, const std::string& out_file,
                 const std::string& pool_name, const std::optional<std::uint64_t>& seed) {
    const ScenarioScript script = load_script(script_path, seed);
    const fs::path tmp = fs::temp_directory_path() / ("demm-snapshot-" + std::to_string(::getpid()));
    const RunTranscript result = run_scenario(script, tmp);
    if (!result.ok) {
        std::cerr << "run failed (" << result.failure_kind << "): " << result.failure_message << "\n";
        return kExitRunFailure;
    }
    const json& states = result.doc["final_states"];
    if (!states.contains(pool_name)) throw std::invalid_argument("no pool '" + pool_name + "' in run");
    spill(out_file, make_snapshot(states[pool_name]).dump(2) + "\n");
    std::cout << "wrote " << out_file << "\n";
    return kExitOk;
}

int cmd_restore(const std::string& snapshot_path) {
    const json payload = open_snapshot(json::parse(slurp(snapshot_path)));
    std::cout << "checksum ok; protocol " << payload.at("protocol").get<std::string>() << "\n";
    for (std::size_t t = 0; t < payload.at("tokens").size(); ++t) {
        std::cout << "  " << payload["tokens"][t].get<std::string>() << ": reserve "
                  << payload["reserves"][t].get<std::string>() << ", weight "
                  << payload["weights"][t].get<std::string>() << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic-exponent market maker simulator"};
    app.require_subcommand(1);

    std::string script_path, out_dir = "out", out_file, grid_spec, pool_name = "main";
    std::string mitigation = "none", snapshot_path;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "execute a scenario script");
    run->add_option("script", script_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "override the script seed");

    auto* validate = app.add_subcommand("validate", "parse and validate a scenario script");
    validate->add_option("script", script_path, "scenario JSON file")->required();

    auto* attack = app.add_subcommand("replay-attack", "replay the documented flash-loan drain");
    attack->add_option("--mitigation", mitigation, "none|delay|twap")
        ->check(CLI::IsMember({"none", "delay", "twap"}));
    attack->add_option("--out", out_file, "write the report JSON here instead of stdout");
    attack->add_option("--seed", seed, "seed for the delay draw");

    auto* curve = app.add_subcommand("il-curve", "emit relative loss/gain curves for a scenario");
    curve->add_option("script", script_path, "scenario JSON file")->required();
    curve->add_option("--grid", grid_spec, "lo:hi:n sweep of the last token's relative price");
    curve->add_option("--out", out_dir, "output directory");
    curve->add_option("--pool", pool_name, "pool id (default main)");
    curve->add_option("--seed", seed, "override the script seed");

    auto* snapshot = app.add_subcommand("snapshot", "run a scenario and save the final pool state");
    snapshot->add_option("script", script_path, "scenario JSON file")->required();
    snapshot->add_option("--out", out_file, "snapshot file")->required();
    snapshot->add_option("--pool", pool_name, "pool id (default main)");
    snapshot->add_option("--seed", seed, "override the script seed");

    auto* restore = app.add_subcommand("restore", "verify a snapshot file and print its contents");
    restore->add_option("snapshot", snapshot_path, "snapshot JSON file")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(script_path, out_dir, seed);
        if (validate->parsed()) return cmd_validate(script_path);
        if (attack->parsed()) return cmd_replay_attack(mitigation, out_file, seed.value_or(1));
        if (curve->parsed()) return cmd_il_curve(script_path, grid_spec, out_dir, pool_name, seed);
        if (snapshot->parsed()) return cmd_snapshot(script_path, out_file, pool_name, seed);
        if (restore->parsed()) return cmd_restore(snapshot_path);
        return kExitInputError;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}
