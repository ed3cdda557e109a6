#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace mmtest;

namespace {

const char* kTwoCoopSpec =
    "agents a b c\n"
    "coop e1 a b\n"
    "coop e2 a c\n"
    "contract x e1\n"
    "contract y e2\n"
    "target a t e1 e2\n";

Market compile_or_fail(const AtmSpec& spec) {
    std::vector<Diagnostic> diags;
    auto m = compile_atm(spec, diags);
    if (!m) throw std::runtime_error("compile failed:\n" + diagnostics_text(diags));
    return *m;
}

}  // namespace

TEST_CASE("achieved targets") {
    AtmSpec spec = atm_from_text(kTwoCoopSpec);
    const int a = spec.agent_index("a");
    CHECK(achieved_targets(spec, a, ContractSet{}).empty());

    ContractSet both = ContractSet{}.with(0).with(1);  // x and y in file order
    const auto achieved = achieved_targets(spec, a, both);
    REQUIRE(achieved.size() == 1);
    CHECK(spec.target(achieved[0]).id == "t");

    CHECK(achieved_targets(spec, a, ContractSet::single(0)).empty());
}

TEST_CASE("achieved targets grow with the portfolio") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        AtmSpec spec = random_atm_spec(seed);
        for (int a = 0; a < spec.agent_count(); ++a) {
            const ContractSet mine = spec.contracts_of(a);
            for_each_subset_canonical(mine, [&](ContractSet y) {
                const auto base = achieved_targets(spec, a, y);
                mine.for_each([&](int extra) {
                    const auto wider = achieved_targets(spec, a, y.with(extra));
                    for (int t : base) CHECK(std::find(wider.begin(), wider.end(), t) != wider.end());
                });
                return true;
            });
        }
    }
}

TEST_CASE("induced preference ranks targets first, then thrift") {
    AtmSpec spec = atm_from_text(kTwoCoopSpec);
    const auto ranked = induce_preference(spec, spec.agent_index("a"));
    REQUIRE(ranked.size() == 1);  // only {x,y} achieves the target
    CHECK(ranked[0] == (ContractSet{}.with(0).with(1)));

    AtmSpec thrifty = atm_from_text(
        "agents a b\n"
        "coop e1 a b\n"
        "coop e2 a b\n"
        "contract x e1\n"
        "contract xp e1 e2\n"
        "target a t e2\n");
    const auto r = induce_preference(thrifty, thrifty.agent_index("a"));
    REQUIRE(r.size() == 2);
    CHECK(r[0] == ContractSet::single(1));             // {xp} achieves t alone
    CHECK(r[1] == (ContractSet{}.with(0).with(1)));    // {x,xp} achieves it with baggage

    AtmSpec idle = atm_from_text(
        "agents a b\n"
        "coop e1 a b\n"
        "contract x e1\n"
        "target b t e1\n");
    CHECK(induce_preference(idle, idle.agent_index("a")).empty());
}

TEST_CASE("compilation of the bilateral fixture") {
    AtmSpec spec = atm_from_text(read_fixture("bilateral.atm"));
    Market m = compile_or_fail(spec);
    CHECK(m.agent_count() == 3);
    CHECK(m.contract_count() == 4);
    const int usa = m.agent_index("usa");
    REQUIRE(usa >= 0);

    const auto& ranked = m.preference(usa).ranked;
    REQUIRE(ranked.size() >= 2);
    // everything achieved by the thriftiest bundle first
    CHECK(ranked[0] == cs(m, "{trade_ue,security_uj}"));
    CHECK(ranked[1] == cs(m, "{trade_ue,science_ue,security_uj}"));

    // compiled text reloads to the same market
    const std::string text = write_market(m);
    Market reparsed = market_from_text(text);
    CHECK(write_market(reparsed) == text);
}

TEST_CASE("mixed-implementer bundles are rejected at compile time") {
    AtmSpec spec = atm_from_text(read_fixture("mixed_bundle.atm"));
    std::vector<Diagnostic> diags;
    CHECK_FALSE(compile_atm(spec, diags));
    REQUIRE_FALSE(diags.empty());
    CHECK(diags[0].message.find("uniform signer set") != std::string::npos);
}

TEST_CASE("empty specs compile to empty markets") {
    AtmSpec spec = atm_from_text("agents a b\n");
    Market m = compile_or_fail(spec);
    CHECK(m.contract_count() == 0);
    for (int a = 0; a < m.agent_count(); ++a) CHECK(m.preference(a).ranked.empty());
}

TEST_CASE("spec validation diagnostics") {
    std::vector<Diagnostic> diags;
    CHECK_FALSE(load_atm("agents a b\ncoop e1 a\n", diags));
    diags.clear();
    CHECK_FALSE(load_atm("agents a b\ncoop e1 a b\ntarget a t e9\n", diags));
    diags.clear();
    // a target may only require cooperations that involve its agent
    CHECK_FALSE(load_atm("agents a b c\ncoop e1 b c\ncontract x e1\ntarget a t e1\n", diags));
    REQUIRE_FALSE(diags.empty());
    CHECK(diags[0].message.find("does not involve") != std::string::npos);
    diags.clear();
    CHECK_FALSE(load_atm("agents a b\ncoop e1 a b\ncontract x\n", diags));
    diags.clear();
    CHECK_FALSE(load_atm("agents a b\ncoop e1 a b\ncoop e1 a b\n", diags));
}

TEST_CASE("induced orders respect both ranking assumptions") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        AtmSpec spec = random_atm_spec(seed);
        Market m = compile_or_fail(spec);
        for (int a = 0; a < spec.agent_count(); ++a) {
            const ContractSet mine = spec.contracts_of(a);
            std::vector<ContractSet> subsets;
            for_each_subset_canonical(mine, [&](ContractSet s) {
                subsets.push_back(s);
                return true;
            });
            for (ContractSet y : subsets) {
                const auto ty = achieved_targets(spec, a, y);
                for (ContractSet yp : subsets) {
                    if (y == yp) continue;
                    const auto typ = achieved_targets(spec, a, yp);
                    const bool proper_subset =
                        typ.size() < ty.size() && std::includes(ty.begin(), ty.end(), typ.begin(), typ.end());
                    if (proper_subset) CHECK(m.compare(a, y, yp) == Rel::first);
                    if (typ == ty && y.subset_of(yp) && y != yp) CHECK(m.compare(a, y, yp) == Rel::first);
                }
            }
        }
    }
}

TEST_CASE("compiled markets keep different-group contracts complementary") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        AtmSpec spec = random_atm_spec(seed);
        Market m = compile_or_fail(spec);
        for (int a = 0; a < m.agent_count(); ++a) {
            REQUIRE(check_different_group_complementary(m, a).holds);
            REQUIRE(check_scale_economies(m, a).holds);
        }
    }
}

TEST_CASE("serial dictatorship on compiled markets is weakly setwise stable") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        AtmSpec spec = random_atm_spec(seed);
        Market m = compile_or_fail(spec);
        const CsdResult r = run_csd(m, random_ordering(m.agent_count(), seed));
        REQUIRE(is_individually_rational(m, r.outcome));
        REQUIRE_FALSE(find_weak_setwise_block(m, r.outcome));
    }
}
