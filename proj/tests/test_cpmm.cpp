#include <catch2/catch_amalgamated.hpp>

#include <demm/cpmm.hpp>

#include "test_util.hpp"

using namespace demm;
using demm::test::close_rel;
using demm::test::Rng;

namespace {

CpmmPool two_token(const char* rs, const char* rt, const char* ws, const char* wt, const char* lp) {
    return CpmmPool::create({"s", "t"}, {Dec(rs), Dec(rt)}, {Dec(ws), Dec(wt)}, Dec(lp));
}

CpmmPool random_pool(Rng& rng, std::size_t n) {
    std::vector<Dec> reserves = test::random_positive_vec(rng, n);
    std::vector<Dec> weights = test::random_positive_vec(rng, n, -1.0, 1.0);
    return CpmmPool::create({}, std::move(reserves), std::move(weights), test::random_positive(rng, 0.0, 1.0));
}

}  // namespace

TEST_CASE("create validates inputs") {
    CHECK_NOTHROW(CpmmPool::create({}, {Dec(1), Dec(1), Dec(1)}, {Dec(1), Dec(1), Dec(1)}, Dec(1)));
    CHECK_THROWS_AS(CpmmPool::create({}, {Dec(1)}, {Dec(1)}, Dec(1)), std::invalid_argument);
    CHECK_THROWS_AS(CpmmPool::create({}, {Dec(1), Dec(1)}, {Dec(1)}, Dec(1)), std::invalid_argument);
    CHECK_THROWS_AS(CpmmPool::create({}, {Dec(1), Dec(0)}, {Dec(1), Dec(1)}, Dec(1)), std::invalid_argument);
    CHECK_THROWS_AS(CpmmPool::create({"s", "s"}, {Dec(1), Dec(1)}, {Dec(1), Dec(1)}, Dec(1)),
                    std::invalid_argument);
}

TEST_CASE("swap quotes at the documented pool depths") {
    // 20/4 pool: 1 s buys 4/21 t; the 80/16 pool quotes better.
    auto shallow = two_token("20", "4", "1", "1", "1");
    const Dec out1 = shallow.trade(0, 1, Dec(1));
    CHECK(close_rel(out1, parse_dec("0.190476190476190476190476190476190476190476190476190476190476"),
                    test::tol("1e-45")));
    CHECK(shallow.reserves[0] == Dec(21));

    auto deep = two_token("80", "16", "1", "1", "4");
    const Dec out2 = deep.trade(0, 1, Dec(1));
    CHECK(close_rel(out2, parse_dec("0.197530864197530864197530864197530864197530864197530864197531"),
                    test::tol("1e-45")));
    CHECK(out2 > out1);

    auto pool = two_token("20", "4", "1", "1", "1");
    const Dec dust = pool.trade(0, 1, Dec("0.00000000000000000001"));
    CHECK(dust > 0);
    CHECK(dust < Dec("0.00000000000000000001"));

    CHECK_THROWS_AS(pool.trade(0, 0, Dec(1)), std::invalid_argument);
    CHECK_THROWS_AS(pool.trade(0, 1, Dec(0)), std::invalid_argument);
    CHECK_THROWS_AS(pool.trade(0, 1, Dec(-1)), std::invalid_argument);
}

TEST_CASE("provide scales reserves and mints pro rata") {
    auto pool = two_token("20", "4", "1", "1", "1");
    const auto res = pool.provide(Dec(3));
    CHECK(res.minted == Dec(3));
    CHECK(res.deposited == std::vector<Dec>{Dec(60), Dec(12)});
    CHECK(pool.reserves == std::vector<Dec>{Dec(80), Dec(16)});
    CHECK(pool.lp_supply == Dec(4));

    auto pool2 = two_token("10", "128", "1", "1", "4");
    const auto res2 = pool2.provide(Dec("0.5"));
    CHECK(res2.minted == Dec(2));
    CHECK(pool2.reserves == std::vector<Dec>{Dec(15), Dec(192)});
    CHECK(pool2.lp_supply == Dec(6));

    CHECK_THROWS_AS(pool.provide(Dec(0)), std::invalid_argument);
}

TEST_CASE("withdraw pays the redeemed share") {
    auto pool = two_token("10", "128", "1", "1", "4");
    CHECK(pool.withdraw(Dec("0.25")) == std::vector<Dec>{Dec("2.5"), Dec(32)});
    CHECK(pool.lp_supply == Dec(3));

    auto pool2 = two_token("10", "128", "1", "1", "4");
    CHECK(pool2.withdraw(Dec("0.75")) == std::vector<Dec>{Dec("7.5"), Dec(96)});

    auto pool3 = two_token("10", "128", "1", "1", "4");
    CHECK(pool3.withdraw(Dec(1)) == std::vector<Dec>{Dec(10), Dec(128)});
    CHECK(pool3.lp_supply == Dec(0));

    auto pool4 = two_token("10", "128", "1", "1", "4");
    CHECK_THROWS_AS(pool4.withdraw(Dec(0)), std::invalid_argument);
    CHECK_THROWS_AS(pool4.withdraw(Dec("1.5")), std::invalid_argument);
}

TEST_CASE("spot prices") {
    CHECK(two_token("20", "4", "1", "1", "1").spot_price(1, 0) == Dec(5));
    CHECK(two_token("10", "128", "1", "1", "4").spot_price(0, 1) == Dec("12.8"));
    CHECK(two_token("7", "7", "3", "3", "1").spot_price(1, 0) == Dec(1));
    CHECK_THROWS_AS(two_token("1", "1", "1", "1", "1").spot_price(0, 0), std::invalid_argument);
}

TEST_CASE("trades preserve the log invariant and never decrease it") {
    Rng rng(424242);
    for (int i = 0; i < 250; ++i) {
        auto pool = random_pool(rng, 2 + i % 3);
        const DecGuard before = log_invariant(pool.reserves, pool.weights);
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::size_t in = pick(rng);
        const std::size_t out = (in + 1) % pool.size();
        pool.trade(in, out, test::safe_trade_size(rng, pool.reserves[in], pool.weights[in], pool.weights[out]));
        const DecGuard after = log_invariant(pool.reserves, pool.weights);
        CHECK(abs(after - before) <= DecGuard("1e-38") * (DecGuard(1) + abs(before)));
        CHECK(after >= before - DecGuard("1e-60"));
    }
}

TEST_CASE("provide and withdraw leave every spot price unchanged") {
    Rng rng(99);
    for (int i = 0; i < 150; ++i) {
        auto pool = random_pool(rng, 3);
        const Dec p01 = pool.spot_price(0, 1);
        const Dec p12 = pool.spot_price(1, 2);
        auto grown = pool;
        grown.provide(test::random_positive(rng, -2.0, 1.0));
        CHECK(close_rel(grown.spot_price(0, 1), p01, test::tol("1e-38")));
        CHECK(close_rel(grown.spot_price(1, 2), p12, test::tol("1e-38")));
        auto shrunk = pool;
        shrunk.withdraw(Dec("0.3"));
        CHECK(close_rel(shrunk.spot_price(0, 1), p01, test::tol("1e-38")));
        CHECK(close_rel(shrunk.spot_price(1, 2), p12, test::tol("1e-38")));
    }
}

TEST_CASE("withdrawing the provided share returns the deposit") {
    Rng rng(2718);
    for (int i = 0; i < 150; ++i) {
        auto pool = random_pool(rng, 2);
        const Dec alpha_in = test::random_positive(rng, -2.0, 1.0);
        const auto res = pool.provide(alpha_in);
        const Dec alpha_out = alpha_in / (Dec(1) + alpha_in);
        const auto payout = pool.withdraw(alpha_out);
        for (std::size_t t = 0; t < pool.size(); ++t)
            CHECK(close_rel(payout[t], res.deposited[t], test::tol("1e-38")));
    }
}
