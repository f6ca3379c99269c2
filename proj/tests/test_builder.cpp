#include "cfsafe/builder.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace cfsafe;
using testutil::parse_ok;

namespace {

FeatureState st(std::vector<std::int64_t> f) { return FeatureState(std::move(f)); }

PolicyModel policy_json(const char* text) { return parse_policy(text, "<test>"); }

}  // namespace

TEST_CASE("induced chain of the coin-flip model under the risky policy") {
    Mdp mdp = testutil::load_asset_model("chain.prism");
    PolicyModel policy = load_policy(testutil::asset_path("chain_policy_a.json"));

    InducedDtmc dtmc = build_induced(mdp, policy, {});
    REQUIRE(dtmc.size() == 3);
    CHECK(dtmc.states[0] == st({0}));
    CHECK(dtmc.states[1] == st({1}));
    CHECK(dtmc.states[2] == st({2}));
    CHECK(dtmc.chosen_action == std::vector<std::string>{"a", "a", "a"});

    REQUIRE(dtmc.transitions[0].size() == 2);
    CHECK(dtmc.transitions[0][0].first == 1);
    CHECK(dtmc.transitions[0][0].second == Prob::exact(1, 2));
    CHECK(dtmc.transitions[0][1].first == 2);
    REQUIRE(dtmc.transitions[1].size() == 1);
    CHECK(dtmc.transitions[1][0].first == 1);
    CHECK(dtmc.transitions[1][0].second.is_one());

    const auto* bad = dtmc.find_label_set("bad");
    REQUIRE(bad != nullptr);
    CHECK(*bad == std::vector<std::uint32_t>{1});
    CHECK(dtmc.all_exact());
    CHECK(dtmc.warnings.empty());
}

TEST_CASE("unreachable states stay out of the chain") {
    Mdp mdp = testutil::load_asset_model("chain.prism");
    PolicyModel policy = load_policy(testutil::asset_path("chain_policy_b.json"));

    InducedDtmc dtmc = build_induced(mdp, policy, {});
    REQUIRE(dtmc.size() == 2);
    CHECK(dtmc.states[0] == st({0}));
    CHECK(dtmc.states[1] == st({2}));
    CHECK(dtmc.chosen_action[0] == "b");

    const auto* bad = dtmc.find_label_set("bad");
    REQUIRE(bad != nullptr);
    CHECK(bad->empty());
}

TEST_CASE("overrides change the chosen action during the build") {
    Mdp mdp = testutil::load_asset_model("chain.prism");
    PolicyModel policy = load_policy(testutil::asset_path("chain_policy_a.json"));

    OverrideMap overrides;
    overrides.emplace(st({0}), "b");
    InducedDtmc dtmc = build_induced(mdp, policy, overrides);
    REQUIRE(dtmc.size() == 2);
    CHECK(dtmc.chosen_action[0] == "b");
    CHECK(dtmc.states[1] == st({2}));
}

TEST_CASE("breadth-first discovery order indexes states") {
    Mdp mdp = parse_ok(R"(mdp
module m
  x : [0..4] init 0;
  [a] x=0 -> 1/3:(x'=2) + 1/3:(x'=1) + 1/3:(x'=3);
  [a] x>0 & x<4 -> 1:(x'=4);
  [a] x=4 -> 1:(x'=4);
endmodule
label "bad" = x=4;
)");
    PolicyModel policy = policy_json(R"({
      "type": "tabular",
      "actions": ["a"],
      "entries": [
        {"state": [0], "q": [1]}, {"state": [1], "q": [1]}, {"state": [2], "q": [1]},
        {"state": [3], "q": [1]}, {"state": [4], "q": [1]}
      ]
    })");

    InducedDtmc dtmc = build_induced(mdp, policy, {});
    REQUIRE(dtmc.size() == 5);
    // branch order of the first command decides discovery: 2, 1, 3, then 4
    CHECK(dtmc.states[0] == st({0}));
    CHECK(dtmc.states[1] == st({2}));
    CHECK(dtmc.states[2] == st({1}));
    CHECK(dtmc.states[3] == st({3}));
    CHECK(dtmc.states[4] == st({4}));
    CHECK(dtmc.state_index.at(st({4})) == 4);
}

TEST_CASE("deadlocked states become absorbing, warn, and skip the policy") {
    Mdp mdp = parse_ok(R"(mdp
module m
  x : [0..2] init 0;
  [a] x=0 -> 1:(x'=1);
  [a] x=1 -> 1:(x'=2);
endmodule
label "bad" = x=2;
)");
    // no entry for the deadlocked state [2]: it must never be consulted
    PolicyModel policy = policy_json(R"({
      "type": "tabular",
      "actions": ["a"],
      "entries": [{"state": [0], "q": [1]}, {"state": [1], "q": [1]}]
    })");

    InducedDtmc dtmc = build_induced(mdp, policy, {});
    REQUIRE(dtmc.size() == 3);
    CHECK(dtmc.chosen_action[2] == std::string(InducedDtmc::deadlock_action));
    REQUIRE(dtmc.transitions[2].size() == 1);
    CHECK(dtmc.transitions[2][0].first == 2);
    CHECK(dtmc.transitions[2][0].second.is_one());
    REQUIRE(dtmc.warnings.size() == 1);
    CHECK(dtmc.warnings[0] == "deadlock state [x=2] made absorbing (self-loop)");
}

TEST_CASE("the state cap aborts runaway exploration") {
    Mdp mdp = testutil::load_asset_model("chain.prism");
    PolicyModel policy = load_policy(testutil::asset_path("chain_policy_a.json"));

    BuildOptions tight;
    tight.state_cap = 2;
    try {
        build_induced(mdp, policy, {}, tight);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::state_space_limit);
    }

    BuildOptions enough;
    enough.state_cap = 3;
    CHECK(build_induced(mdp, policy, {}, enough).size() == 3);
}

TEST_CASE("building validates the policy against the model first") {
    Mdp mdp = testutil::load_asset_model("chain.prism");
    PolicyModel policy = policy_json(R"({
      "type": "tabular",
      "actions": ["a"],
      "entries": [{"state": [0], "q": [1]}]
    })");
    try {
        build_induced(mdp, policy, {});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::unknown_action);
    }
}

TEST_CASE("strict build propagates to the action choice") {
    Mdp mdp = testutil::load_asset_model("chain.prism");
    // state [1] scores the disabled action b highest
    PolicyModel policy = policy_json(R"({
      "type": "tabular",
      "actions": ["a", "b"],
      "entries": [
        {"state": [0], "q": [1.0, 0.0]},
        {"state": [1], "q": [0.0, 1.0]},
        {"state": [2], "q": [1.0, 0.0]}
      ]
    })");

    CHECK(build_induced(mdp, policy, {}).size() == 3);

    BuildOptions strict;
    strict.strict = true;
    try {
        build_induced(mdp, policy, {}, strict);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::disabled_action);
    }
}

TEST_CASE("plain-text dump lists states, rows and label sets") {
    Mdp mdp = testutil::load_asset_model("chain.prism");
    PolicyModel policy = load_policy(testutil::asset_path("chain_policy_a.json"));
    InducedDtmc dtmc = build_induced(mdp, policy, {});

    std::ostringstream out;
    dump_dtmc(dtmc, out);
    CHECK(out.str() ==
          "STATES 3\n"
          "0: a | 1:1/2 2:1/2\n"
          "1: a | 1:1\n"
          "2: a | 2:1\n"
          "LABEL bad: 1\n");
}

TEST_CASE("reachable state set matches a brute-force walk") {
    Mdp mdp = testutil::load_asset_model("chain.prism");

    PolicyModel risky = load_policy(testutil::asset_path("chain_policy_a.json"));
    InducedDtmc chain = build_induced(mdp, risky, {});
    std::set<std::vector<std::int64_t>> built;
    for (const auto& s : chain.states) built.insert(s.features);
    CHECK(built == cfsafe::oracle::naive_reachable(mdp, risky, {}));

    PolicyModel safe = load_policy(testutil::asset_path("chain_policy_b.json"));
    OverrideMap overrides;
    InducedDtmc fixed = build_induced(mdp, safe, overrides);
    std::set<std::vector<std::int64_t>> built_safe;
    for (const auto& s : fixed.states) built_safe.insert(s.features);
    CHECK(built_safe == cfsafe::oracle::naive_reachable(mdp, safe, {}));
}
