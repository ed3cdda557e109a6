#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mmtest;

namespace {

std::vector<Market> fixture_markets() {
    std::vector<Market> out;
    for (const char* name : {"market1.mkt", "market2.mkt", "market3.mkt", "market4.mkt", "market5.mkt"})
        out.push_back(load_fixture(name));
    return out;
}

std::vector<Market> random_markets(int count, int max_contracts, GeneratorFilter filter = {}) {
    std::vector<Market> out;
    std::uint64_t seed = 0;
    while (static_cast<int>(out.size()) < count && seed < 100000) {
        RandomMarketParams params;
        params.agents = 2 + static_cast<int>(seed % 4);  // 2..5
        params.contracts = 3 + static_cast<int>(seed % static_cast<std::uint64_t>(max_contracts - 2));
        params.max_signers = 3;
        params.max_acceptable = 6;
        params.seed = seed++;
        auto m = random_market(params, filter);
        if (m) out.push_back(std::move(*m));
    }
    REQUIRE(static_cast<int>(out.size()) == count);
    return out;
}

}  // namespace

TEST_CASE("individual rationality") {
    Market m1 = load_fixture("market1.mkt");
    CHECK(is_individually_rational(m1, cs(m1, "{x}")));
    Market m4 = load_fixture("market4.mkt");
    CHECK(is_individually_rational(m4, cs(m4, "{y,z,u}")));

    const IrResult r = individual_rationality(m1, cs(m1, "{y}"));
    CHECK_FALSE(r.ok);
    REQUIRE(r.failing_agents.size() == 1);
    CHECK(r.failing_agents[0] == m1.agent_index("ana"));
}

TEST_CASE("block search") {
    Market m1 = load_fixture("market1.mkt");
    auto w = find_block(m1, cs(m1, "{x}"));
    REQUIRE(w);
    CHECK(w->added == cs(m1, "{y}"));
    CHECK(valid_block(m1, cs(m1, "{x}"), *w));

    Market m2 = load_fixture("market2.mkt");
    CHECK_FALSE(find_block(m2, cs(m2, "{y}")));

    Market m4 = load_fixture("market4.mkt");
    auto w4 = find_block(m4, ContractSet{});
    REQUIRE(w4);
    CHECK(w4->added == cs(m4, "{y,z,u}"));
}

TEST_CASE("weak setwise block search") {
    Market m1 = load_fixture("market1.mkt");
    CHECK_FALSE(find_weak_setwise_block(m1, cs(m1, "{x}")));
    Market m2 = load_fixture("market2.mkt");
    CHECK_FALSE(find_weak_setwise_block(m2, cs(m2, "{y}")));
    Market m4 = load_fixture("market4.mkt");
    CHECK_FALSE(find_weak_setwise_block(m4, cs(m4, "{y,z,u}")));
}

TEST_CASE("setwise block search") {
    Market m2 = load_fixture("market2.mkt");
    auto w2 = find_setwise_block(m2, cs(m2, "{y}"));
    REQUIRE(w2);
    CHECK(w2->added == cs(m2, "{x,z}"));
    CHECK(w2->deviation == cs(m2, "{x,z}"));
    CHECK(valid_setwise(m2, cs(m2, "{y}"), *w2));

    Market m4 = load_fixture("market4.mkt");
    auto w4 = find_setwise_block(m4, cs(m4, "{y,z,u}"));
    REQUIRE(w4);
    CHECK(w4->added == cs(m4, "{x}"));
    CHECK(w4->deviation == cs(m4, "{x,u}"));
    CHECK(valid_setwise(m4, cs(m4, "{y,z,u}"), *w4));

    Market m1 = load_fixture("market1.mkt");
    CHECK_FALSE(find_setwise_block(m1, cs(m1, "{x}")));
}

TEST_CASE("individually rational outcomes enumerate in canonical order") {
    Market m4 = load_fixture("market4.mkt");
    const auto ir4 = enumerate_individually_rational(m4);
    REQUIRE(ir4.size() == 2);
    CHECK(ir4[0].empty());
    CHECK(ir4[1] == cs(m4, "{y,z,u}"));

    Market m1 = load_fixture("market1.mkt");
    const auto ir1 = enumerate_individually_rational(m1);
    REQUIRE(ir1.size() == 2);
    CHECK(ir1[0].empty());
    CHECK(ir1[1] == cs(m1, "{x}"));

    Market empty = market_from_text("agents a b\ncontract x a b\n");
    const auto ir = enumerate_individually_rational(empty);
    REQUIRE(ir.size() == 1);
    CHECK(ir[0].empty());
}

TEST_CASE("pareto dominance") {
    Market m2 = load_fixture("market2.mkt");
    CHECK(pareto_dominates(m2, cs(m2, "{x,z}"), cs(m2, "{y}")));
    CHECK_FALSE(pareto_dominates(m2, cs(m2, "{y}"), cs(m2, "{y}")));

    Market m5 = load_fixture("market5.mkt");
    CHECK(pareto_dominates(m5, cs(m5, "{x,z,u}"), cs(m5, "{y,z,u}")));
}

TEST_CASE("constrained efficiency") {
    Market m2 = load_fixture("market2.mkt");
    const auto e2 = constrained_efficiency(m2, cs(m2, "{y}"));
    CHECK_FALSE(e2.efficient);
    CHECK(e2.dominated_by == cs(m2, "{x,z}"));

    Market m1 = load_fixture("market1.mkt");
    CHECK(constrained_efficiency(m1, cs(m1, "{x}")).efficient);
    const auto e0 = constrained_efficiency(m1, ContractSet{});
    CHECK_FALSE(e0.efficient);
    CHECK(e0.dominated_by == cs(m1, "{x}"));

    CHECK_THROWS_AS(constrained_efficiency(m1, cs(m1, "{y}")), std::invalid_argument);
}

TEST_CASE("audit reproduces the worked examples") {
    Market m1 = load_fixture("market1.mkt");
    const StabilityReport r1 = audit(m1, cs(m1, "{x}"));
    CHECK(r1.individually_rational);
    CHECK_FALSE(r1.stable);
    REQUIRE(r1.block);
    CHECK(r1.block->added == cs(m1, "{y}"));
    CHECK(r1.weakly_setwise_stable);
    CHECK(r1.setwise_stable);
    REQUIRE(r1.constrained_efficient);
    CHECK(*r1.constrained_efficient);

    Market m2 = load_fixture("market2.mkt");
    const StabilityReport r2 = audit(m2, cs(m2, "{y}"));
    CHECK(r2.individually_rational);
    CHECK(r2.stable);
    CHECK(r2.weakly_setwise_stable);
    CHECK_FALSE(r2.setwise_stable);
    REQUIRE(r2.setwise_block);
    CHECK(r2.setwise_block->added == cs(m2, "{x,z}"));
    REQUIRE(r2.constrained_efficient);
    CHECK_FALSE(*r2.constrained_efficient);
    CHECK(r2.dominated_by == cs(m2, "{x,z}"));

    Market m4 = load_fixture("market4.mkt");
    const StabilityReport r4 = audit(m4, cs(m4, "{y,z,u}"));
    CHECK(r4.individually_rational);
    CHECK(r4.weakly_setwise_stable);
    CHECK_FALSE(r4.setwise_stable);

    // constrained efficiency is undefined off the individually rational set
    const StabilityReport bad = audit(m1, cs(m1, "{y}"));
    CHECK_FALSE(bad.individually_rational);
    CHECK_FALSE(bad.constrained_efficient.has_value());
}

TEST_CASE("returned witnesses validate clause by clause") {
    std::vector<Market> markets = fixture_markets();
    for (auto& m : random_markets(40, 6)) markets.push_back(std::move(m));
    for (const Market& m : markets) {
        for_each_subset_canonical(m.all_contracts(), [&](ContractSet y) {
            if (auto w = find_block(m, y)) REQUIRE(valid_block(m, y, *w));
            if (auto w = find_weak_setwise_block(m, y)) REQUIRE(valid_weak_setwise(m, y, *w));
            if (auto w = find_setwise_block(m, y)) REQUIRE(valid_setwise(m, y, *w));
            return true;
        });
    }
}

TEST_CASE("stability implies weak setwise stability") {
    std::vector<Market> markets = fixture_markets();
    for (auto& m : random_markets(200, 8)) markets.push_back(std::move(m));
    for (const Market& m : markets) {
        for_each_subset_canonical(m.all_contracts(), [&](ContractSet y) {
            if (!is_individually_rational(m, y)) return true;  // neither notion holds
            if (find_weak_setwise_block(m, y)) REQUIRE(find_block(m, y));
            return true;
        });
    }
}

TEST_CASE("both separations between stability and setwise stability") {
    Market m1 = load_fixture("market1.mkt");
    const StabilityReport a = audit(m1, cs(m1, "{x}"));
    CHECK((a.setwise_stable && !a.stable));
    Market m2 = load_fixture("market2.mkt");
    const StabilityReport b = audit(m2, cs(m2, "{y}"));
    CHECK((b.stable && !b.setwise_stable));
}

TEST_CASE("under scale economies, constrained efficient outcomes admit no weak setwise block") {
    GeneratorFilter filter;
    filter.condition = Condition::scale_economies;
    for (const Market& m : random_markets(60, 7, filter)) {
        const auto ir = enumerate_individually_rational(m);
        for (ContractSet y : ir) {
            if (!constrained_efficiency(m, y, ir).efficient) continue;
            REQUIRE_FALSE(find_weak_setwise_block(m, y));
        }
    }
}

TEST_CASE("weak setwise stability does not imply constrained efficiency") {
    Market m2 = load_fixture("market2.mkt");
    const StabilityReport r = audit(m2, cs(m2, "{y}"));
    CHECK(r.weakly_setwise_stable);
    REQUIRE(r.constrained_efficient);
    CHECK_FALSE(*r.constrained_efficient);
}

TEST_CASE("under ordinal scale economies, setwise blocks exist exactly off the efficient set") {
    GeneratorFilter filter;
    filter.condition = Condition::ordinal_se;
    for (const Market& m : random_markets(60, 7, filter)) {
        const auto ir = enumerate_individually_rational(m);
        for (ContractSet y : ir) {
            const bool efficient = constrained_efficiency(m, y, ir).efficient;
            const bool blocked = find_setwise_block(m, y).has_value();
            REQUIRE(efficient == !blocked);
        }
    }
}

TEST_CASE("under complementarity all four stability sets coincide") {
    GeneratorFilter filter;
    filter.condition = Condition::complementary;
    for (const Market& m : random_markets(60, 6, filter)) {
        const auto ir = enumerate_individually_rational(m);
        for (ContractSet y : ir) {
            const bool efficient = constrained_efficiency(m, y, ir).efficient;
            CHECK(efficient == !find_block(m, y).has_value());
            CHECK(efficient == !find_weak_setwise_block(m, y).has_value());
            CHECK(efficient == !find_setwise_block(m, y).has_value());
        }
    }
}

TEST_CASE("consistency-based weak setwise search agrees with the pair enumerator") {
    std::vector<Market> markets = fixture_markets();
    for (auto& m : random_markets(40, 6)) markets.push_back(std::move(m));
    for (const Market& m : markets) {
        REQUIRE(m.contract_count() <= 6);
        for_each_subset_canonical(m.all_contracts(), [&](ContractSet y) {
            const auto fast = find_weak_setwise_block(m, y);
            const auto slow = weak_setwise_block_by_scan(m, y);
            REQUIRE(fast.has_value() == slow.has_value());
            if (fast) {
                REQUIRE(fast->added == slow->added);
                REQUIRE(fast->deviation == slow->deviation);
            }
            return true;
        });
    }
}

TEST_CASE("structured reports parse back exactly") {
    std::vector<std::pair<const char*, const char*>> cases = {
        {"market1.mkt", "{x}"},     {"market1.mkt", "{}"},    {"market1.mkt", "{y}"},
        {"market2.mkt", "{y}"},     {"market2.mkt", "{x,z}"}, {"market4.mkt", "{y,z,u}"},
        {"market3.mkt", "{x,z,u}"}, {"market5.mkt", "{x,z,u}"},
    };
    for (const auto& [name, literal] : cases) {
        Market m = load_fixture(name);
        const StabilityReport r = audit(m, cs(m, literal));
        const std::string text = report_structured(m, r);
        std::string error;
        auto parsed = parse_report_structured(m, text, error);
        REQUIRE(parsed);
        CHECK(reports_equal(r, *parsed));
        CHECK(report_structured(m, *parsed) == text);
    }
}
