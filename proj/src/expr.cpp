#include "cfsafe/expr.hpp"

#include <memory>

namespace cfsafe {

namespace {

std::shared_ptr<Expr> make() { return std::make_shared<Expr>(); }

// PRISM precedence levels, low to high. Atoms get the highest level.
int precedence(const Expr& e) {
    switch (e.kind) {
        case ExprKind::int_lit:
        case ExprKind::bool_lit:
        case ExprKind::var_ref:
            return 100;
        case ExprKind::unary:
            return e.op == OpKind::lnot ? 3 : 8;
        case ExprKind::binary:
            switch (e.op) {
                case OpKind::lor: return 1;
                case OpKind::land: return 2;
                case OpKind::eq:
                case OpKind::ne: return 4;
                case OpKind::lt:
                case OpKind::le:
                case OpKind::gt:
                case OpKind::ge: return 5;
                case OpKind::add:
                case OpKind::sub: return 6;
                case OpKind::mul: return 7;
                default: return 0;
            }
    }
    return 0;
}

const char* op_token(OpKind op) {
    switch (op) {
        case OpKind::add: return "+";
        case OpKind::sub: return "-";
        case OpKind::mul: return "*";
        case OpKind::eq: return "=";
        case OpKind::ne: return "!=";
        case OpKind::lt: return "<";
        case OpKind::le: return "<=";
        case OpKind::gt: return ">";
        case OpKind::ge: return ">=";
        case OpKind::land: return "&";
        case OpKind::lor: return "|";
        case OpKind::lnot: return "!";
        case OpKind::neg: return "-";
    }
    return "?";
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw Error(errc::arithmetic_overflow, "integer overflow in '+'");
    return r;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) throw Error(errc::arithmetic_overflow, "integer overflow in '-'");
    return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw Error(errc::arithmetic_overflow, "integer overflow in '*'");
    return r;
}

}  // namespace

ExprPtr Expr::literal(std::int64_t v) {
    auto e = make();
    e->kind = ExprKind::int_lit;
    e->int_value = v;
    return e;
}

ExprPtr Expr::boolean(bool v) {
    auto e = make();
    e->kind = ExprKind::bool_lit;
    e->bool_value = v;
    return e;
}

ExprPtr Expr::var(int index, std::string name) {
    auto e = make();
    e->kind = ExprKind::var_ref;
    e->var_index = index;
    e->var_name = std::move(name);
    return e;
}

ExprPtr Expr::unary(OpKind op, ExprPtr operand) {
    auto e = make();
    e->kind = ExprKind::unary;
    e->op = op;
    e->lhs = std::move(operand);
    return e;
}

ExprPtr Expr::binary(OpKind op, ExprPtr lhs, ExprPtr rhs) {
    auto e = make();
    e->kind = ExprKind::binary;
    e->op = op;
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
}

bool is_boolean_expr(const Expr& e) {
    switch (e.kind) {
        case ExprKind::bool_lit: return true;
        case ExprKind::int_lit:
        case ExprKind::var_ref: return false;
        case ExprKind::unary: return e.op == OpKind::lnot;
        case ExprKind::binary:
            switch (e.op) {
                case OpKind::add:
                case OpKind::sub:
                case OpKind::mul: return false;
                default: return true;
            }
    }
    return false;
}

std::int64_t eval_int(const Expr& e, std::span<const std::int64_t> state) {
    switch (e.kind) {
        case ExprKind::int_lit:
            return e.int_value;
        case ExprKind::var_ref:
            return state[static_cast<std::size_t>(e.var_index)];
        case ExprKind::unary:
            if (e.op == OpKind::neg) return checked_sub(0, eval_int(*e.lhs, state));
            break;
        case ExprKind::binary:
            switch (e.op) {
                case OpKind::add: return checked_add(eval_int(*e.lhs, state), eval_int(*e.rhs, state));
                case OpKind::sub: return checked_sub(eval_int(*e.lhs, state), eval_int(*e.rhs, state));
                case OpKind::mul: return checked_mul(eval_int(*e.lhs, state), eval_int(*e.rhs, state));
                default: break;
            }
            break;
        case ExprKind::bool_lit:
            break;
    }
    throw Error(errc::config_error, "expression is not integer-valued");
}

bool eval_bool(const Expr& e, std::span<const std::int64_t> state) {
    switch (e.kind) {
        case ExprKind::bool_lit:
            return e.bool_value;
        case ExprKind::unary:
            if (e.op == OpKind::lnot) return !eval_bool(*e.lhs, state);
            break;
        case ExprKind::binary:
            switch (e.op) {
                case OpKind::land: return eval_bool(*e.lhs, state) && eval_bool(*e.rhs, state);
                case OpKind::lor: return eval_bool(*e.lhs, state) || eval_bool(*e.rhs, state);
                case OpKind::eq: return eval_int(*e.lhs, state) == eval_int(*e.rhs, state);
                case OpKind::ne: return eval_int(*e.lhs, state) != eval_int(*e.rhs, state);
                case OpKind::lt: return eval_int(*e.lhs, state) < eval_int(*e.rhs, state);
                case OpKind::le: return eval_int(*e.lhs, state) <= eval_int(*e.rhs, state);
                case OpKind::gt: return eval_int(*e.lhs, state) > eval_int(*e.rhs, state);
                case OpKind::ge: return eval_int(*e.lhs, state) >= eval_int(*e.rhs, state);
                default: break;
            }
            break;
        default:
            break;
    }
    throw Error(errc::config_error, "expression is not boolean");
}

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ExprKind::int_lit: return a.int_value == b.int_value;
        case ExprKind::bool_lit: return a.bool_value == b.bool_value;
        case ExprKind::var_ref: return a.var_index == b.var_index && a.var_name == b.var_name;
        case ExprKind::unary: return a.op == b.op && expr_equal(*a.lhs, *b.lhs);
        case ExprKind::binary:
            return a.op == b.op && expr_equal(*a.lhs, *b.lhs) && expr_equal(*a.rhs, *b.rhs);
    }
    return false;
}

namespace {

void print(const Expr& e, std::string& out) {
    auto child = [&](const Expr& c, bool right_side) {
        bool parens = precedence(c) < precedence(e) || (right_side && precedence(c) == precedence(e));
        if (parens) out += "(";
        print(c, out);
        if (parens) out += ")";
    };
    switch (e.kind) {
        case ExprKind::int_lit:
            out += std::to_string(e.int_value);
            return;
        case ExprKind::bool_lit:
            out += e.bool_value ? "true" : "false";
            return;
        case ExprKind::var_ref:
            out += e.var_name;
            return;
        case ExprKind::unary:
            out += op_token(e.op);
            child(*e.lhs, true);
            return;
        case ExprKind::binary: {
            bool spaced = e.op == OpKind::land || e.op == OpKind::lor;
            child(*e.lhs, false);
            if (spaced) out += " ";
            out += op_token(e.op);
            if (spaced) out += " ";
            child(*e.rhs, true);
            return;
        }
    }
}

}  // namespace

std::string expr_to_string(const Expr& e) {
    std::string out;
    print(e, out);
    return out;
}

}  // namespace cfsafe
