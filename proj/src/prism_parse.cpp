#include "cfsafe/prism.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cfsafe {

ModelSource ModelSource::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return ModelSource{buf.str(), path};
}

namespace {

enum class Tok {
    ident,
    integer,
    decimal,  // raw digits '.' digits, kept as text for exact conversion
    string_lit,
    lbracket,
    rbracket,
    lparen,
    rparen,
    colon,
    semicolon,
    comma,
    assign,       // =
    neq,          // !=
    lt,
    le,
    gt,
    ge,
    amp,
    pipe,
    bang,
    plus,
    minus,
    star,
    slash,
    dotdot,
    arrow,  // ->
    prime,  // '
    end_of_input,
};

struct Token {
    Tok kind = Tok::end_of_input;
    std::string text;
    std::int64_t int_value = 0;
    int line = 1;
    int column = 1;
    std::size_t offset = 0;
};

struct ParseBail {};

class Lexer {
  public:
    Lexer(const std::string& text, std::vector<ParseDiagnostic>& diags) : text_(text), diags_(diags) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        while (true) {
            skip_trivia();
            Token t;
            t.line = line_;
            t.column = column_;
            t.offset = pos_;
            if (pos_ >= text_.size()) {
                t.kind = Tok::end_of_input;
                tokens.push_back(t);
                return tokens;
            }
            char c = text_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                while (pos_ < text_.size() &&
                       (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                    t.text += text_[pos_];
                    advance();
                }
                t.kind = Tok::ident;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                lex_number(t);
            } else if (c == '"') {
                advance();
                t.kind = Tok::string_lit;
                while (pos_ < text_.size() && text_[pos_] != '"' && text_[pos_] != '\n') {
                    t.text += text_[pos_];
                    advance();
                }
                if (pos_ >= text_.size() || text_[pos_] != '"') {
                    error(t, "unterminated string literal");
                    t.kind = Tok::end_of_input;
                    tokens.push_back(t);
                    return tokens;
                }
                advance();
            } else {
                lex_punct(t);
                if (t.kind == Tok::end_of_input) {  // unknown character
                    tokens.push_back(t);
                    return tokens;
                }
            }
            tokens.push_back(t);
        }
    }

  private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_trivia() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    void lex_number(Token& t) {
        std::string digits;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            digits += text_[pos_];
            advance();
        }
        // "0..2" keeps the int and leaves ".." for the next token
        if (pos_ + 1 < text_.size() && text_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
            std::string frac;
            advance();  // '.'
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                frac += text_[pos_];
                advance();
            }
            t.kind = Tok::decimal;
            t.text = digits + "." + frac;
            return;
        }
        t.kind = Tok::integer;
        t.text = digits;
        try {
            t.int_value = std::stoll(digits);
        } catch (const std::out_of_range&) {
            error(t, "integer literal '" + digits + "' does not fit in 64 bits");
            t.int_value = 0;
        }
    }

    void lex_punct(Token& t) {
        char c = text_[pos_];
        auto two = [&](char second) {
            return pos_ + 1 < text_.size() && text_[pos_ + 1] == second;
        };
        switch (c) {
            case '[': t.kind = Tok::lbracket; break;
            case ']': t.kind = Tok::rbracket; break;
            case '(': t.kind = Tok::lparen; break;
            case ')': t.kind = Tok::rparen; break;
            case ':': t.kind = Tok::colon; break;
            case ';': t.kind = Tok::semicolon; break;
            case ',': t.kind = Tok::comma; break;
            case '&': t.kind = Tok::amp; break;
            case '|': t.kind = Tok::pipe; break;
            case '+': t.kind = Tok::plus; break;
            case '*': t.kind = Tok::star; break;
            case '/': t.kind = Tok::slash; break;
            case '\'': t.kind = Tok::prime; break;
            case '=': t.kind = Tok::assign; break;
            case '!':
                if (two('=')) { t.kind = Tok::neq; advance(); } else { t.kind = Tok::bang; }
                break;
            case '<':
                if (two('=')) { t.kind = Tok::le; advance(); } else { t.kind = Tok::lt; }
                break;
            case '>':
                if (two('=')) { t.kind = Tok::ge; advance(); } else { t.kind = Tok::gt; }
                break;
            case '-':
                if (two('>')) { t.kind = Tok::arrow; advance(); } else { t.kind = Tok::minus; }
                break;
            case '.':
                if (two('.')) { t.kind = Tok::dotdot; advance(); break; }
                [[fallthrough]];
            default:
                error(t, std::string("unknown token '") + c + "'");
                t.kind = Tok::end_of_input;
                return;
        }
        advance();
    }

    void error(const Token& at, std::string message) {
        diags_.push_back({Severity::error, at.line, at.column, std::move(message)});
    }

    const std::string& text_;
    std::vector<ParseDiagnostic>& diags_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
  public:
    Parser(const ModelSource& src) : src_(src) {}

    ParseResult run() {
        ParseResult result;
        if (src_.text.empty()) {
            result.diagnostics.push_back({Severity::error, 1, 1, "empty model source"});
            return result;
        }
        Lexer lexer(src_.text, result.diagnostics);
        tokens_ = lexer.run();
        diags_ = &result.diagnostics;
        if (!result.diagnostics.empty()) return result;

        try {
            parse_header();
            parse_top_level();
        } catch (const ParseBail&) {
            // diagnostics already emitted; nothing else to salvage
        }
        if (!saw_module_ && result.diagnostics.empty()) {
            diag(peek(), "model has no module");
        }
        if (!result.diagnostics.empty()) return result;

        std::sort(mdp_.labels.begin(), mdp_.labels.end(),
                  [](const LabelDecl& a, const LabelDecl& b) { return a.name < b.name; });
        result.mdp = std::move(mdp_);
        return result;
    }

  private:
    const Token& peek(int ahead = 0) const {
        std::size_t i = pos_ + static_cast<std::size_t>(ahead);
        if (i >= tokens_.size()) i = tokens_.size() - 1;
        return tokens_[i];
    }
    const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool at(Tok kind) const { return peek().kind == kind; }
    bool at_keyword(const char* kw) const { return at(Tok::ident) && peek().text == kw; }

    [[noreturn]] void fail(const Token& at, std::string message) {
        diag(at, std::move(message));
        throw ParseBail{};
    }
    void diag(const Token& at, std::string message) {
        diags_->push_back({Severity::error, at.line, at.column, std::move(message)});
    }

    const Token& expect(Tok kind, const char* what) {
        if (!at(kind)) fail(peek(), std::string("expected ") + what);
        return advance();
    }
    void expect_keyword(const char* kw) {
        if (!at_keyword(kw)) fail(peek(), std::string("expected '") + kw + "'");
        advance();
    }

    // Skips to just past the next ';' (or stops before a block boundary) so
    // later statements can still be checked after an error.
    void sync_statement() {
        while (!at(Tok::end_of_input)) {
            if (at(Tok::semicolon)) {
                advance();
                return;
            }
            if (at_keyword("endmodule") || at_keyword("module") || at_keyword("label") || at_keyword("rewards") ||
                at_keyword("const")) {
                return;
            }
            advance();
        }
    }

    void parse_header() {
        if (!at_keyword("mdp")) fail(peek(), "model must start with 'mdp'");
        advance();
    }

    void parse_top_level() {
        while (!at(Tok::end_of_input)) {
            if (at_keyword("const")) {
                try {
                    parse_const();
                } catch (const ParseBail&) {
                    sync_statement();
                }
            } else if (at_keyword("module")) {
                if (saw_module_) {
                    diag(peek(), "only a single module is supported");
                }
                parse_module();
            } else if (at_keyword("label")) {
                try {
                    parse_label();
                } catch (const ParseBail&) {
                    sync_statement();
                }
            } else if (at_keyword("rewards")) {
                parse_rewards();
            } else {
                fail(peek(), "expected 'const', 'module', 'label' or 'rewards', got '" + peek().text + "'");
            }
        }
    }

    void parse_const() {
        expect_keyword("const");
        expect_keyword("int");
        const Token& name = expect(Tok::ident, "constant name");
        if (consts_.count(name.text) || var_index_.count(name.text)) {
            diag(name, "duplicate name '" + name.text + "'");
        }
        expect(Tok::assign, "'='");
        std::int64_t value = parse_const_int();
        expect(Tok::semicolon, "';'");
        consts_[name.text] = value;
    }

    // Constant expressions appear in const declarations and variable bounds;
    // they may reference earlier constants but no variables.
    std::int64_t parse_const_int() {
        const Token& start = peek();
        ExprPtr e = parse_expr();
        if (is_boolean_expr(*e)) fail(start, "expected an integer expression");
        if (refers_to_variable(*e)) fail(start, "variable not allowed in constant expression");
        try {
            return eval_int(*e, {});
        } catch (const Error& err) {
            fail(start, err.what());
        }
    }

    static bool refers_to_variable(const Expr& e) {
        if (e.kind == ExprKind::var_ref) return true;
        if (e.lhs && refers_to_variable(*e.lhs)) return true;
        if (e.rhs && refers_to_variable(*e.rhs)) return true;
        return false;
    }

    void parse_module() {
        saw_module_ = true;
        expect_keyword("module");
        const Token& name = expect(Tok::ident, "module name");
        mdp_.module_name = name.text;
        while (!at_keyword("endmodule")) {
            if (at(Tok::end_of_input)) fail(peek(), "missing 'endmodule'");
            try {
                if (at(Tok::lbracket)) {
                    parse_command();
                } else if (at(Tok::ident)) {
                    parse_variable();
                } else {
                    fail(peek(), "expected a variable declaration or a command");
                }
            } catch (const ParseBail&) {
                sync_statement();
            }
        }
        advance();  // endmodule
        if (mdp_.variables.empty() && diags_->empty()) {
            diag(name, "module declares no variables");
        }
    }

    void parse_variable() {
        const Token& name = expect(Tok::ident, "variable name");
        if (var_index_.count(name.text) || consts_.count(name.text)) {
            diag(name, "duplicate variable name '" + name.text + "'");
        }
        expect(Tok::colon, "':'");
        expect(Tok::lbracket, "'['");
        std::int64_t lower = parse_const_int();
        expect(Tok::dotdot, "'..'");
        std::int64_t upper = parse_const_int();
        expect(Tok::rbracket, "']'");
        if (!at_keyword("init")) fail(peek(), "missing init for variable '" + name.text + "'");
        advance();
        const Token& init_tok = peek();
        std::int64_t init = parse_const_int();
        expect(Tok::semicolon, "';'");
        if (lower > upper) diag(name, "empty range [" + std::to_string(lower) + ".." + std::to_string(upper) + "]");
        if (init < lower || init > upper) {
            diag(init_tok, "init value " + std::to_string(init) + " outside [" + std::to_string(lower) + ".." +
                               std::to_string(upper) + "]");
        }
        var_index_[name.text] = static_cast<int>(mdp_.variables.size());
        mdp_.variables.push_back({name.text, lower, upper, init});
    }

    void parse_command() {
        const Token& open = expect(Tok::lbracket, "'['");
        const Token& action = expect(Tok::ident, "action name");
        expect(Tok::rbracket, "']'");
        const Token& guard_tok = peek();
        ExprPtr guard = parse_expr();
        if (!is_boolean_expr(*guard)) diag(guard_tok, "guard must be a boolean expression");
        expect(Tok::arrow, "'->'");

        Command cmd;
        cmd.action = action.text;
        cmd.guard = std::move(guard);
        cmd.source_line = open.line;
        Rational sum = 0;
        while (true) {
            UpdateBranch branch;
            const Token& prob_tok = peek();
            Rational p = parse_probability();
            if (p <= 0 || p > 1) {
                diag(prob_tok, "probability " + rational_display(p) + " outside (0,1]");
            }
            sum += p;
            branch.probability = Prob(p);
            expect(Tok::colon, "':'");
            parse_assignments(branch);
            cmd.updates.push_back(std::move(branch));
            if (at(Tok::plus)) {
                advance();
                continue;
            }
            break;
        }
        expect(Tok::semicolon, "';'");
        if (sum != 1) {
            diag(open, "probabilities sum to " + rational_display(sum));
        }
        if (std::find(mdp_.actions.begin(), mdp_.actions.end(), cmd.action) == mdp_.actions.end()) {
            mdp_.actions.push_back(cmd.action);
        }
        mdp_.commands.push_back(std::move(cmd));
    }

    Rational parse_probability() {
        if (at(Tok::integer)) {
            std::int64_t num = advance().int_value;
            if (at(Tok::slash)) {
                advance();
                const Token& den_tok = expect(Tok::integer, "denominator");
                if (den_tok.int_value == 0) fail(den_tok, "zero denominator");
                return Rational(num, den_tok.int_value);
            }
            return Rational(num);
        }
        if (at(Tok::decimal)) {
            const Token& t = advance();
            auto dot = t.text.find('.');
            std::string digits = t.text.substr(0, dot) + t.text.substr(dot + 1);
            std::size_t frac_len = t.text.size() - dot - 1;
            // cpp_int's string constructor reads a leading 0 as an octal prefix
            auto first = digits.find_first_not_of('0');
            boost::multiprecision::cpp_int num(first == std::string::npos ? "0" : digits.substr(first));
            boost::multiprecision::cpp_int den = 1;
            for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
            return Rational(num, den);
        }
        fail(peek(), "expected a probability literal");
    }

    void parse_assignments(UpdateBranch& branch) {
        std::unordered_set<int> assigned;
        while (true) {
            expect(Tok::lparen, "'('");
            const Token& name = expect(Tok::ident, "variable name");
            auto it = var_index_.find(name.text);
            if (it == var_index_.end()) fail(name, "unbound variable '" + name.text + "'");
            expect(Tok::prime, "'''");
            expect(Tok::assign, "'='");
            const Token& value_tok = peek();
            ExprPtr value = parse_expr();
            if (is_boolean_expr(*value)) diag(value_tok, "update expression must be integer-valued");
            expect(Tok::rparen, "')'");
            if (!assigned.insert(it->second).second) {
                diag(name, "variable '" + name.text + "' assigned twice in one update");
            }
            branch.assignments.push_back({it->second, name.text, std::move(value)});
            if (at(Tok::amp)) {
                advance();
                continue;
            }
            break;
        }
    }

    void parse_label() {
        expect_keyword("label");
        const Token& name = expect(Tok::string_lit, "label name string");
        expect(Tok::assign, "'='");
        const Token& pred_tok = peek();
        ExprPtr pred = parse_expr();
        if (!is_boolean_expr(*pred)) diag(pred_tok, "label predicate must be a boolean expression");
        expect(Tok::semicolon, "';'");
        for (const auto& label : mdp_.labels) {
            if (label.name == name.text) {
                diag(name, "duplicate label name \"" + name.text + "\"");
                return;
            }
        }
        mdp_.labels.push_back({name.text, std::move(pred)});
    }

    void parse_rewards() {
        const Token& start = peek();
        advance();  // rewards
        while (!at_keyword("endrewards")) {
            if (at(Tok::end_of_input)) fail(peek(), "missing 'endrewards'");
            advance();
        }
        const Token& end = peek();
        advance();
        std::size_t end_offset = end.offset + std::string("endrewards").size();
        mdp_.reward_items.push_back(src_.text.substr(start.offset, end_offset - start.offset));
    }

    // Expression grammar, PRISM precedence: | & ! (= !=) (< <= >= >) (+ -) * unary-.
    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (at(Tok::pipe)) {
            const Token& op = advance();
            ExprPtr rhs = parse_and();
            require_bool(*lhs, op);
            require_bool(*rhs, op);
            lhs = Expr::binary(OpKind::lor, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        while (at(Tok::amp)) {
            const Token& op = advance();
            ExprPtr rhs = parse_not();
            require_bool(*lhs, op);
            require_bool(*rhs, op);
            lhs = Expr::binary(OpKind::land, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (at(Tok::bang)) {
            const Token& op = advance();
            ExprPtr operand = parse_not();
            require_bool(*operand, op);
            return Expr::unary(OpKind::lnot, std::move(operand));
        }
        return parse_equality();
    }

    ExprPtr parse_equality() {
        ExprPtr lhs = parse_relational();
        while (at(Tok::assign) || at(Tok::neq)) {
            OpKind op = at(Tok::assign) ? OpKind::eq : OpKind::ne;
            const Token& tok = advance();
            ExprPtr rhs = parse_relational();
            require_int(*lhs, tok);
            require_int(*rhs, tok);
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_relational() {
        ExprPtr lhs = parse_additive();
        while (at(Tok::lt) || at(Tok::le) || at(Tok::gt) || at(Tok::ge)) {
            OpKind op = at(Tok::lt) ? OpKind::lt : at(Tok::le) ? OpKind::le : at(Tok::gt) ? OpKind::gt : OpKind::ge;
            const Token& tok = advance();
            ExprPtr rhs = parse_additive();
            require_int(*lhs, tok);
            require_int(*rhs, tok);
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        while (at(Tok::plus) || at(Tok::minus)) {
            OpKind op = at(Tok::plus) ? OpKind::add : OpKind::sub;
            const Token& tok = advance();
            ExprPtr rhs = parse_multiplicative();
            require_int(*lhs, tok);
            require_int(*rhs, tok);
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        while (at(Tok::star)) {
            const Token& tok = advance();
            ExprPtr rhs = parse_unary();
            require_int(*lhs, tok);
            require_int(*rhs, tok);
            lhs = Expr::binary(OpKind::mul, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (at(Tok::minus)) {
            const Token& tok = advance();
            ExprPtr operand = parse_unary();
            require_int(*operand, tok);
            return Expr::unary(OpKind::neg, std::move(operand));
        }
        return parse_atom();
    }

    ExprPtr parse_atom() {
        if (at(Tok::integer)) return Expr::literal(advance().int_value);
        if (at_keyword("true")) {
            advance();
            return Expr::boolean(true);
        }
        if (at_keyword("false")) {
            advance();
            return Expr::boolean(false);
        }
        if (at(Tok::ident)) {
            const Token& name = advance();
            auto c = consts_.find(name.text);
            if (c != consts_.end()) return Expr::literal(c->second);
            auto v = var_index_.find(name.text);
            if (v != var_index_.end()) return Expr::var(v->second, name.text);
            fail(name, "unbound variable '" + name.text + "'");
        }
        if (at(Tok::lparen)) {
            advance();
            ExprPtr inner = parse_expr();
            expect(Tok::rparen, "')'");
            return inner;
        }
        fail(peek(), "expected an expression, got '" + peek().text + "'");
    }

    void require_bool(const Expr& e, const Token& at) {
        if (!is_boolean_expr(e)) {
            diag(at, "operand of a logical operator must be boolean");
            throw ParseBail{};
        }
    }
    void require_int(const Expr& e, const Token& at) {
        if (is_boolean_expr(e)) {
            diag(at, "operand of an arithmetic comparison must be integer-valued");
            throw ParseBail{};
        }
    }

    const ModelSource& src_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::vector<ParseDiagnostic>* diags_ = nullptr;
    Mdp mdp_;
    std::map<std::string, std::int64_t> consts_;
    std::unordered_map<std::string, int> var_index_;
    bool saw_module_ = false;
};

}  // namespace

ParseResult parse_model(const ModelSource& src) {
    Parser parser(src);
    ParseResult result = parser.run();
    if (result.ok()) {
        // initial state: init values in declaration order
        std::vector<std::int64_t> init;
        init.reserve(result.mdp->variables.size());
        for (const auto& var : result.mdp->variables) init.push_back(var.init);
        result.mdp->initial_state = FeatureState(std::move(init));
    }
    return result;
}

std::string rational_display(const Rational& r) {
    using boost::multiprecision::cpp_int;
    cpp_int num = boost::multiprecision::numerator(r);
    cpp_int den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    // terminating decimal when den = 2^a * 5^b with few digits
    cpp_int d = den;
    int twos = 0, fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    int digits = std::max(twos, fives);
    if (d == 1 && digits <= 18) {
        bool negative = num < 0;
        if (negative) num = -num;
        cpp_int scale = 1;
        for (int i = 0; i < digits; ++i) scale *= 10;
        cpp_int scaled = num * scale / den;
        std::string s = scaled.str();
        if (s.size() <= static_cast<std::size_t>(digits)) {
            s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
        }
        s.insert(s.size() - static_cast<std::size_t>(digits), ".");
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
        return (negative ? "-" : "") + s;
    }
    return num.str() + "/" + den.str();
}

}  // namespace cfsafe
