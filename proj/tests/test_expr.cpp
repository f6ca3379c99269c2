#include "cfsafe/expr.hpp"

#include <doctest.h>

#include <array>
#include <cstdint>
#include <limits>

using namespace cfsafe;

namespace {

const std::array<std::int64_t, 3> state{4, -2, 7};

ExprPtr v(int i, const char* name) { return Expr::var(i, name); }

}  // namespace

TEST_CASE("integer evaluation covers literals, variables and arithmetic") {
    CHECK(eval_int(*Expr::literal(42), state) == 42);
    CHECK(eval_int(*v(0, "x"), state) == 4);
    CHECK(eval_int(*v(1, "y"), state) == -2);

    auto sum = Expr::binary(OpKind::add, v(0, "x"), Expr::literal(3));
    CHECK(eval_int(*sum, state) == 7);
    auto diff = Expr::binary(OpKind::sub, v(2, "z"), v(0, "x"));
    CHECK(eval_int(*diff, state) == 3);
    auto prod = Expr::binary(OpKind::mul, v(0, "x"), v(1, "y"));
    CHECK(eval_int(*prod, state) == -8);
    auto neg = Expr::unary(OpKind::neg, v(2, "z"));
    CHECK(eval_int(*neg, state) == -7);
}

TEST_CASE("boolean evaluation covers comparisons and connectives") {
    auto eq = Expr::binary(OpKind::eq, v(0, "x"), Expr::literal(4));
    auto ne = Expr::binary(OpKind::ne, v(0, "x"), Expr::literal(4));
    auto lt = Expr::binary(OpKind::lt, v(1, "y"), Expr::literal(0));
    auto le = Expr::binary(OpKind::le, v(0, "x"), Expr::literal(4));
    auto gt = Expr::binary(OpKind::gt, v(2, "z"), Expr::literal(7));
    auto ge = Expr::binary(OpKind::ge, v(2, "z"), Expr::literal(7));
    CHECK(eval_bool(*eq, state));
    CHECK_FALSE(eval_bool(*ne, state));
    CHECK(eval_bool(*lt, state));
    CHECK(eval_bool(*le, state));
    CHECK_FALSE(eval_bool(*gt, state));
    CHECK(eval_bool(*ge, state));

    auto both = Expr::binary(OpKind::land, eq, lt);
    auto either = Expr::binary(OpKind::lor, gt, eq);
    auto negated = Expr::unary(OpKind::lnot, gt);
    CHECK(eval_bool(*both, state));
    CHECK(eval_bool(*either, state));
    CHECK(eval_bool(*negated, state));
    CHECK(eval_bool(*Expr::boolean(true), state));
    CHECK_FALSE(eval_bool(*Expr::boolean(false), state));
}

TEST_CASE("evaluation rejects kind confusion") {
    CHECK_THROWS_AS(eval_int(*Expr::boolean(true), state), Error);
    CHECK_THROWS_AS(eval_bool(*Expr::literal(1), state), Error);
    auto sum = Expr::binary(OpKind::add, v(0, "x"), Expr::literal(1));
    CHECK_THROWS_AS(eval_bool(*sum, state), Error);
}

TEST_CASE("arithmetic overflow raises instead of wrapping") {
    const std::int64_t big = std::numeric_limits<std::int64_t>::max();
    const std::int64_t small = std::numeric_limits<std::int64_t>::min();

    auto check_overflow = [&](ExprPtr e) {
        try {
            eval_int(*e, state);
            FAIL("expected an overflow error");
        } catch (const Error& err) {
            CHECK(err.code() == errc::arithmetic_overflow);
        }
    };
    check_overflow(Expr::binary(OpKind::add, Expr::literal(big), Expr::literal(1)));
    check_overflow(Expr::binary(OpKind::sub, Expr::literal(small), Expr::literal(1)));
    check_overflow(Expr::binary(OpKind::mul, Expr::literal(big), Expr::literal(2)));
    check_overflow(Expr::unary(OpKind::neg, Expr::literal(small)));
}

TEST_CASE("is_boolean_expr separates the two value kinds") {
    CHECK(is_boolean_expr(*Expr::boolean(false)));
    CHECK_FALSE(is_boolean_expr(*Expr::literal(0)));
    CHECK_FALSE(is_boolean_expr(*v(0, "x")));
    CHECK(is_boolean_expr(*Expr::binary(OpKind::le, v(0, "x"), Expr::literal(1))));
    CHECK(is_boolean_expr(*Expr::unary(OpKind::lnot, Expr::boolean(true))));
    CHECK_FALSE(is_boolean_expr(*Expr::unary(OpKind::neg, v(0, "x"))));
    CHECK_FALSE(is_boolean_expr(*Expr::binary(OpKind::mul, v(0, "x"), v(1, "y"))));
}

TEST_CASE("expr_equal compares structurally") {
    auto a = Expr::binary(OpKind::add, v(0, "x"), Expr::literal(1));
    auto b = Expr::binary(OpKind::add, v(0, "x"), Expr::literal(1));
    auto c = Expr::binary(OpKind::add, v(0, "x"), Expr::literal(2));
    auto d = Expr::binary(OpKind::sub, v(0, "x"), Expr::literal(1));
    CHECK(expr_equal(*a, *b));
    CHECK_FALSE(expr_equal(*a, *c));
    CHECK_FALSE(expr_equal(*a, *d));
    CHECK_FALSE(expr_equal(*v(0, "x"), *v(1, "x")));
}

TEST_CASE("printing uses minimal parentheses") {
    auto x = v(0, "x");
    auto y = v(1, "y");

    auto mul_of_sum = Expr::binary(OpKind::mul, Expr::binary(OpKind::add, x, Expr::literal(1)), Expr::literal(2));
    CHECK(expr_to_string(*mul_of_sum) == "(x+1)*2");

    auto sum_of_mul = Expr::binary(OpKind::add, x, Expr::binary(OpKind::mul, Expr::literal(1), Expr::literal(2)));
    CHECK(expr_to_string(*sum_of_mul) == "x+1*2");

    // left-associative chains reprint without parens, right nesting keeps them
    auto left_chain = Expr::binary(OpKind::sub, Expr::binary(OpKind::sub, x, y), Expr::literal(1));
    CHECK(expr_to_string(*left_chain) == "x-y-1");
    auto right_nested = Expr::binary(OpKind::sub, x, Expr::binary(OpKind::sub, y, Expr::literal(1)));
    CHECK(expr_to_string(*right_nested) == "x-(y-1)");

    auto cmp = Expr::binary(OpKind::le, x, Expr::literal(3));
    auto eq = Expr::binary(OpKind::eq, y, Expr::literal(0));
    auto conj = Expr::binary(OpKind::land, cmp, eq);
    CHECK(expr_to_string(*conj) == "x<=3 & y=0");

    auto disj = Expr::binary(OpKind::lor, conj, Expr::binary(OpKind::gt, x, y));
    CHECK(expr_to_string(*disj) == "x<=3 & y=0 | x>y");

    auto conj_of_disj = Expr::binary(OpKind::land, Expr::binary(OpKind::lor, cmp, eq), eq);
    CHECK(expr_to_string(*conj_of_disj) == "(x<=3 | y=0) & y=0");

    auto negation = Expr::unary(OpKind::lnot, conj);
    CHECK(expr_to_string(*negation) == "!(x<=3 & y=0)");

    auto neg_var = Expr::unary(OpKind::neg, x);
    CHECK(expr_to_string(*neg_var) == "-x");
    auto neg_sum = Expr::unary(OpKind::neg, Expr::binary(OpKind::add, x, y));
    CHECK(expr_to_string(*neg_sum) == "-(x+y)");
}
