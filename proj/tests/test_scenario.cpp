#include <catch2/catch_amalgamated.hpp>

#include <demm/runner.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace demm;
namespace fs = std::filesystem;

namespace {

const fs::path kRepo = DEMM_REPO_DIR;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("demm_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ScenarioScript load_fixture(const std::string& name) {
    return parse_scenario(slurp(kRepo / "scenarios" / name));
}

}  // namespace

TEST_CASE("the attack fixture parses to one block of five events") {
    const auto script = load_fixture("flash_loan_attack.json");
    REQUIRE(script.blocks.size() == 1);
    CHECK(script.blocks[0].size() == 5);
    CHECK(script.name == "flash_loan_attack");
}

TEST_CASE("schema violations are rejected with diagnostics") {
    const auto bad = [](const char* text) {
        CHECK_THROWS_AS(parse_scenario(text), std::invalid_argument);
    };
    bad("not json at all");
    bad(R"({"format_version":1,"name":"x","blocks":[]})");
    bad(R"({"format_version":2,"name":"x","blocks":[{"events":[]}]})");
    // exponent notation is banned in amounts
    bad(R"({"format_version":1,"name":"x","blocks":[{"events":[
         {"kind":"init","tokens":["a","b"],"reserves":["1e3","1"],"genesis":"g"}]}]})");
    // unknown event kind
    bad(R"({"format_version":1,"name":"x","blocks":[{"events":[
         {"kind":"init","tokens":["a","b"],"reserves":["1","1"],"genesis":"g"},
         {"kind":"transmogrify"}]}]})");
    // first event must be an init
    bad(R"({"format_version":1,"name":"x","blocks":[{"events":[
         {"kind":"set_prices","prices":{"a":"1"}}]}]})");
    // assert_state needs an explicit tolerance
    bad(R"({"format_version":1,"name":"x","blocks":[{"events":[
         {"kind":"init","tokens":["a","b"],"reserves":["1","1"],"genesis":"g"},
         {"kind":"assert_state","reserves":{"a":"1"}}]}]})");
    // unknown keys are schema violations
    bad(R"({"format_version":1,"name":"x","blocks":[{"events":[
         {"kind":"init","tokens":["a","b"],"reserves":["1","1"],"genesis":"g","bogus":1}]}]})");
    // equilibrium jumps assume fee-free arbitrage
    bad(R"({"format_version":1,"name":"x","fee_rho":"0.9","blocks":[{"events":[
         {"kind":"init","tokens":["a","b"],"reserves":["1","1"],"genesis":"g"},
         {"kind":"arbitrage"}]}]})");
    CHECK_NOTHROW(parse_scenario(
        R"({"format_version":1,"name":"x","blocks":[{"events":[
         {"kind":"init","tokens":["a","b"],"reserves":["1","1"],"genesis":"g"}]}]})"));
}

TEST_CASE("every bundled fixture runs clean") {
    for (const auto& entry : fs::directory_iterator(kRepo / "scenarios")) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().filename().string());
        const auto script = parse_scenario(slurp(entry.path()));
        const auto result = run_scenario(script, fresh_dir("fixture_" + script.name));
        CHECK(result.ok);
        if (!result.ok) FAIL(result.failure_message);
    }
}

TEST_CASE("the attack transcript shows the documented profit") {
    const auto script = load_fixture("flash_loan_attack.json");
    const auto result = run_scenario(script, fresh_dir("attack_profit"));
    REQUIRE(result.ok);
    CHECK(result.doc["net_flows"]["eve"]["s"] == "2.4");
    CHECK(result.doc["net_flows"]["eve"]["t"] == "5");
}

TEST_CASE("reruns with the same seed reproduce the digest") {
    for (const char* name : {"flash_loan_attack.json", "delay_mitigation.json"}) {
        const auto script = parse_scenario(slurp(kRepo / "scenarios" / name));
        const auto a = run_scenario(script, fresh_dir("digest_a"));
        const auto b = run_scenario(script, fresh_dir("digest_b"));
        REQUIRE(a.ok);
        CHECK(a.digest == b.digest);
    }
}

TEST_CASE("assert_state mismatches fail the run") {
    const auto script = parse_scenario(
        R"({"format_version":1,"name":"boom","blocks":[{"events":[
            {"kind":"init","tokens":["a","b"],"reserves":["1","2"],"genesis":"g"},
            {"kind":"assert_state","reserves":{"a":"999"},"tolerance":"0.001"}]}]})");
    const auto result = run_scenario(script, fresh_dir("assert_fail"));
    CHECK_FALSE(result.ok);
    CHECK(result.failure_kind == "assertion");
    CHECK(result.failure_message.find("reserves.a") != std::string::npos);
    CHECK(result.doc["ok"] == false);
}

TEST_CASE("module errors abort with the event coordinates") {
    const auto script = parse_scenario(
        R"({"format_version":1,"name":"boom","blocks":[{"events":[
            {"kind":"init","tokens":["a","b"],"reserves":["1","2"],"genesis":"g"},
            {"kind":"trade","account":"x","token_in":"zz","token_out":"b","amount_in":"1"}]}]})");
    const auto result = run_scenario(script, fresh_dir("module_fail"));
    CHECK_FALSE(result.ok);
    CHECK(result.failure_kind == "module_error");
    CHECK(result.failure_message.find("block 1 event 2") != std::string::npos);
    CHECK(result.failure_message.find("zz") != std::string::npos);
}

TEST_CASE("governance flags gate the admin operations") {
    const auto script = parse_scenario(
        R"({"format_version":1,"name":"gov","blocks":[{"events":[
            {"kind":"init","tokens":["a","b"],"reserves":["1","2"],"genesis":"g"},
            {"kind":"add_token","governance":false,"account":"g","anchor":"a","anchor_amount":"1","token":"c","reserve":"1"}]}]})");
    const auto result = run_scenario(script, fresh_dir("gov_fail"));
    CHECK_FALSE(result.ok);
    CHECK(result.failure_message.find("governance") != std::string::npos);
}

TEST_CASE("add_token and split produce working child pools") {
    const auto script = parse_scenario(
        R"({"format_version":1,"name":"admin","blocks":[{"events":[
            {"kind":"init","tokens":["s","t"],"reserves":["40","16"],"genesis":"g"},
            {"kind":"provide","account":"d","deposit":{"t":"16"}},
            {"kind":"add_token","governance":true,"account":"gov","anchor":"s","anchor_amount":"10","token":"u","reserve":"5"},
            {"kind":"assert_state","reserves":{"s":"50","t":"32","u":"5"},"weights":{"s":"1.25","t":"2","u":"0.25"},"tolerance":"0"},
            {"kind":"split_pool","governance":true,"left":["s"],"right":["t","u"],"left_pool":"solo","right_pool":"pair"},
            {"kind":"assert_state","pool":"solo","reserves":{"s":"50"},"weights":{"s":"1.25"},"tolerance":"0"},
            {"kind":"assert_state","pool":"pair","reserves":{"t":"32","u":"5"},"weights":{"t":"2","u":"0.25"},"balances":{"gov":{"u":"0.25"}},"tolerance":"0"},
            {"kind":"trade","account":"x","token_in":"t","token_out":"u","amount_in":"1","pool":"pair"}]}]})");
    const auto result = run_scenario(script, fresh_dir("admin_ops"));
    REQUIRE(result.ok);
    CHECK(result.doc["final_states"].contains("solo"));
    CHECK(result.doc["final_states"].contains("pair"));
    CHECK_FALSE(result.doc["final_states"].contains("main"));
}

TEST_CASE("snapshots round-trip bit-exactly and detect corruption") {
    const auto script = load_fixture("flash_loan_attack.json");
    const auto dir = fresh_dir("snapshot");
    const auto result = run_scenario(script, dir);
    REQUIRE(result.ok);

    const fs::path snap_path = dir / "final_state_main.json";
    const json snapshot = json::parse(slurp(snap_path));
    const json payload = open_snapshot(snapshot);
    auto [pool, ledger] = demm_pool_from_json(payload);
    CHECK(pool.reserves == std::vector<Dec>{Dec("1.6"), Dec(5)});
    // re-serialization reproduces the payload byte for byte
    CHECK(demm_pool_to_json(pool, ledger).dump() == payload.dump());

    // a new run can begin from the snapshot
    const auto chained = parse_scenario(
        R"({"format_version":1,"name":"chain","blocks":[{"events":[
            {"kind":"init","from_snapshot":")" +
        snap_path.string() +
        R"("},
            {"kind":"assert_state","reserves":{"s":"1.6","t":"5"},"weights":{"s":"1","t":"1"},"tolerance":"0"},
            {"kind":"provide","account":"late","deposit":{"s":"1.6"}},
            {"kind":"assert_state","weights":{"s":"2"},"tolerance":"0"}]}]})");
    const auto chained_result = run_scenario(chained, fresh_dir("snapshot_chain"));
    REQUIRE(chained_result.ok);

    // flip one byte inside the payload: the checksum must catch it
    std::string text = slurp(snap_path);
    const auto pos = text.find("\"1.6\"");
    REQUIRE(pos != std::string::npos);
    text[pos + 1] = '2';
    CHECK_THROWS_AS(open_snapshot(json::parse(text)), std::runtime_error);
}

TEST_CASE("rejected TWAP deposits are recorded, not fatal") {
    const auto script = load_fixture("twap_mitigation.json");
    const auto result = run_scenario(script, fresh_dir("twap_reject"));
    REQUIRE(result.ok);
    bool saw_rejection = false;
    for (const auto& ev : result.doc["events"])
        if (ev["kind"] == "twap_provide" && ev["outcome"] == "rejected") saw_rejection = true;
    CHECK(saw_rejection);
    // eve keeps her swap proceeds; nothing was escrowed
    CHECK(result.doc["net_flows"]["eve"]["t"] == "9");
}

TEST_CASE("position reports land in the output directory") {
    const auto script = load_fixture("two_provider_pool.json");
    const auto dir = fresh_dir("reports");
    const auto result = run_scenario(script, dir);
    REQUIRE(result.ok);
    const json alice = json::parse(slurp(dir / "alice_position.json"));
    const auto close = [](const json& field, const char* expect) {
        const DecGuard a(parse_dec(field.get<std::string>()));
        const DecGuard e((Dec(expect)));
        return abs(a - e) <= DecGuard("1e-30") * (DecGuard(1) + abs(e));
    };
    CHECK(close(alice["entitled"]["s"], "1.25"));
    CHECK(close(alice["entitled"]["t"], "16"));
    CHECK(close(alice["il_abs"], "-1140"));
    const json bob = json::parse(slurp(dir / "bob_position.json"));
    CHECK(close(bob["pool_value"], "320"));
}
