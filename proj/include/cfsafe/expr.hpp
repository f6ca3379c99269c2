#pragma once

#include "cfsafe/errors.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>

namespace cfsafe {

// Guard / update expression AST over integer state variables. Operator
// precedence follows PRISM: |  <  &  <  !  <  (= !=)  <  (< <= >= >)  <
// (+ -)  <  *  <  unary minus, atoms.
enum class ExprKind { int_lit, bool_lit, var_ref, unary, binary };

enum class OpKind {
    add,
    sub,
    mul,
    eq,
    ne,
    lt,
    le,
    gt,
    ge,
    land,
    lor,
    lnot,
    neg,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind;
    std::int64_t int_value = 0;  // int_lit
    bool bool_value = false;     // bool_lit
    int var_index = -1;          // var_ref, position in the model's variable list
    std::string var_name;        // var_ref, kept for printing
    OpKind op = OpKind::add;     // unary/binary
    ExprPtr lhs;                 // unary operand or binary left
    ExprPtr rhs;                 // binary right

    static ExprPtr literal(std::int64_t v);
    static ExprPtr boolean(bool v);
    static ExprPtr var(int index, std::string name);
    static ExprPtr unary(OpKind op, ExprPtr operand);
    static ExprPtr binary(OpKind op, ExprPtr lhs, ExprPtr rhs);
};

// true if the expression yields a boolean (comparisons, logic, bool literals)
bool is_boolean_expr(const Expr& e);

// Evaluation uses 64-bit signed arithmetic; overflow raises
// errc::arithmetic_overflow instead of wrapping.
std::int64_t eval_int(const Expr& e, std::span<const std::int64_t> state);
bool eval_bool(const Expr& e, std::span<const std::int64_t> state);

bool expr_equal(const Expr& a, const Expr& b);

// Canonical print with minimal parentheses; reparsing the result yields a
// structurally identical tree.
std::string expr_to_string(const Expr& e);

}  // namespace cfsafe
