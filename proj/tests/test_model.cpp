#include "cfsafe/model.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace cfsafe;
using testutil::parse_ok;

namespace {

FeatureState st(std::vector<std::int64_t> f) { return FeatureState(std::move(f)); }

const char* two_var_model = R"(mdp

module m
  x : [0..3] init 0;
  y : [0..1] init 0;

  [a] x=0 -> 0.5:(x'=1) + 0.5:(x'=2);
  [b] x=0 & y=0 -> 1:(y'=1);
  [a] x=1 -> 0.5:(x'=2) + 0.5:(x'=2);
  [c] x=2 -> 1:(x'=0)&(y'=0);
  [a] x=3 -> 1:(x'=3);
endmodule

label "bad" = x=2;
)";

}  // namespace

TEST_CASE("distribution merges duplicate successors and keeps first-seen order") {
    Distribution d;
    d.add(st({1}), Prob::exact(1, 4));
    d.add(st({2}), Prob::exact(1, 2));
    d.add(st({1}), Prob::exact(1, 4));

    REQUIRE(d.size() == 2);
    CHECK(d.support()[0].first == st({1}));
    CHECK(d.support()[0].second == Prob::exact(1, 2));
    CHECK(d.support()[1].first == st({2}));
    CHECK(d.total() == Prob(Rational(1)));
    CHECK(d.sums_to_one());
}

TEST_CASE("distribution sum check is exact for rationals, tolerant for doubles") {
    Distribution almost;
    almost.add(st({0}), Prob::exact(1, 3));
    almost.add(st({1}), Prob::exact(1, 3));
    CHECK_FALSE(almost.sums_to_one());

    Distribution thirds;
    thirds.add(st({0}), Prob::exact(1, 3));
    thirds.add(st({1}), Prob::exact(1, 3));
    thirds.add(st({2}), Prob::exact(1, 3));
    CHECK(thirds.sums_to_one());
    CHECK(thirds.total().is_exact());

    Distribution floats;
    floats.add(st({0}), Prob(0.1));
    floats.add(st({1}), Prob(0.7));
    floats.add(st({2}), Prob(0.2));  // 0.1 + 0.7 + 0.2 != 1.0 in binary, inside tolerance
    CHECK(floats.sums_to_one());
    CHECK_FALSE(floats.total().is_exact());
}

TEST_CASE("prob arithmetic demotes to double only when mixed") {
    Prob exact = Prob::exact(1, 2) + Prob::exact(1, 3);
    REQUIRE(exact.is_exact());
    CHECK(exact.rational() == Rational(5, 6));

    Prob mixed = Prob::exact(1, 2) + Prob(0.25);
    CHECK_FALSE(mixed.is_exact());
    CHECK(mixed.to_double() == doctest::Approx(0.75));

    CHECK(Prob::exact(3, 6).str() == "1/2");
    CHECK(Prob(Rational(5)).str() == "5");
    CHECK(Prob::exact(0, 7).is_zero());
    CHECK(Prob(Rational(1)).is_one());
    CHECK(Prob::exact(1, 3) < Prob::exact(1, 2));
    CHECK(Prob(0.6) > Prob::exact(1, 2));
}

TEST_CASE("mdp lookups: action index, labels, bounds, state rendering") {
    Mdp mdp = parse_ok(two_var_model);

    // actions in first-appearance order
    REQUIRE(mdp.actions == std::vector<std::string>{"a", "b", "c"});
    CHECK(mdp.action_index("b") == 1);
    CHECK(mdp.action_index("zz") == -1);

    CHECK(mdp.find_label("bad") != nullptr);
    CHECK(mdp.find_label("good") == nullptr);

    CHECK(mdp.within_bounds(st({3, 1})));
    CHECK_FALSE(mdp.within_bounds(st({4, 0})));
    CHECK_FALSE(mdp.within_bounds(st({0, -1})));
    CHECK_FALSE(mdp.within_bounds(st({0})));

    CHECK(mdp.render_state(st({2, 1})) == "[x=2, y=1]");
    CHECK(mdp.initial_state == st({0, 0}));
}

TEST_CASE("enabled_actions follows the global action order") {
    Mdp mdp = parse_ok(two_var_model);
    CHECK(enabled_actions(mdp, st({0, 0})) == std::vector<std::string>{"a", "b"});
    CHECK(enabled_actions(mdp, st({0, 1})) == std::vector<std::string>{"a"});
    CHECK(enabled_actions(mdp, st({2, 0})) == std::vector<std::string>{"c"});
    CHECK(enabled_actions(mdp, st({1, 1})) == std::vector<std::string>{"a"});
}

TEST_CASE("successor_distribution resolves updates and merges equal targets") {
    Mdp mdp = parse_ok(two_var_model);

    Distribution d = successor_distribution(mdp, st({0, 0}), "a");
    REQUIRE(d.size() == 2);
    CHECK(d.support()[0].first == st({1, 0}));
    CHECK(d.support()[0].second == Prob::exact(1, 2));
    CHECK(d.support()[1].first == st({2, 0}));

    // both branches land on the same state and merge to probability one
    Distribution merged = successor_distribution(mdp, st({1, 0}), "a");
    REQUIRE(merged.size() == 1);
    CHECK(merged.support()[0].first == st({2, 0}));
    CHECK(merged.support()[0].second == Prob(Rational(1)));

    // multi-assignment updates apply in parallel
    Distribution reset = successor_distribution(mdp, st({2, 1}), "c");
    REQUIRE(reset.size() == 1);
    CHECK(reset.support()[0].first == st({0, 0}));
}

TEST_CASE("successor_distribution rejects disabled actions") {
    Mdp mdp = parse_ok(two_var_model);
    try {
        successor_distribution(mdp, st({1, 0}), "b");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::disabled_action);
    }
}

TEST_CASE("two enabled commands for one action are a modeling error") {
    Mdp mdp = parse_ok(R"(mdp
module m
  x : [0..2] init 0;
  [a] x>=0 -> 1:(x'=1);
  [a] x<=1 -> 1:(x'=2);
endmodule
label "bad" = x=2;
)");
    try {
        successor_distribution(mdp, st({0}), "a");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::overlapping_commands);
    }
    // only one guard holds at x=2, so the action resolves
    CHECK(successor_distribution(mdp, st({2}), "a").size() == 1);
}

TEST_CASE("updates that leave the declared range are rejected") {
    Mdp mdp = parse_ok(R"(mdp
module m
  x : [0..3] init 3;
  [a] x>=0 -> 1:(x'=x+1);
endmodule
label "bad" = x=3;
)");
    try {
        successor_distribution(mdp, st({3}), "a");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::bounds_violation);
        CHECK(std::string(e.what()).find("outside [0..3]") != std::string::npos);
    }
}

TEST_CASE("parallel assignments read the pre-update state") {
    Mdp mdp = parse_ok(R"(mdp
module m
  x : [0..5] init 1;
  y : [0..5] init 2;
  [swap] true -> 1:(x'=y)&(y'=x);
endmodule
label "bad" = false;
)");
    Distribution d = successor_distribution(mdp, st({1, 2}), "swap");
    REQUIRE(d.size() == 1);
    CHECK(d.support()[0].first == st({2, 1}));
}
