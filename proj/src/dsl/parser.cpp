#include "acg/dsl/parser.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>

#include "acg/dsl/eval.hpp"

namespace acg::dsl {

namespace {

// ---------------------------------------------------------------- lexer ---

enum class Tok { Ident, Number, String, Punct, Newline, End };

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    char punct = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    Lexer(const std::string& src, const std::string& file) : src_(src), file_(file) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_blanks();
            Token t = next();
            const bool is_newline = t.kind == Tok::Newline;
            // collapse repeated newlines
            if (!(is_newline && !out.empty() && out.back().kind == Tok::Newline)) out.push_back(t);
            if (t.kind == Tok::End) break;
        }
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(file_, line_, col_, msg); }

    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
    bool done() const { return pos_ >= src_.size(); }

    char advance() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_blanks() {
        while (!done()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') {
                advance();
            } else if (c == '#') {
                while (!done() && peek() != '\n') advance();
            } else {
                break;
            }
        }
    }

    Token next() {
        Token t;
        t.line = line_;
        t.col = col_;
        if (done()) {
            t.kind = Tok::End;
            return t;
        }
        const char c = peek();
        if (c == '\n') {
            advance();
            t.kind = Tok::Newline;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string name;
            while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
                name.push_back(advance());
            t.kind = Tok::Ident;
            t.text = std::move(name);
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (!done() && std::isdigit(static_cast<unsigned char>(peek())))
                num.push_back(advance());
            if (!done() && peek() == '.') {
                num.push_back(advance());
                if (done() || !std::isdigit(static_cast<unsigned char>(peek())))
                    fail("expected digit after decimal point");
                while (!done() && std::isdigit(static_cast<unsigned char>(peek())))
                    num.push_back(advance());
            }
            if (!done() && (peek() == 'e' || peek() == 'E')) {
                num.push_back(advance());
                if (!done() && (peek() == '+' || peek() == '-')) num.push_back(advance());
                if (done() || !std::isdigit(static_cast<unsigned char>(peek())))
                    fail("expected digit in exponent");
                while (!done() && std::isdigit(static_cast<unsigned char>(peek())))
                    num.push_back(advance());
            }
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(num.c_str(), &end);
            if (end != num.c_str() + num.size() || errno == ERANGE || !std::isfinite(v))
                fail("number out of range: " + num);
            t.kind = Tok::Number;
            t.number = v;
            t.text = std::move(num);
            return t;
        }
        if (c == '"') {
            advance();
            std::string s;
            while (true) {
                if (done() || peek() == '\n') fail("unterminated string literal");
                const char d = advance();
                if (d == '"') break;
                if (d == '\\') {
                    if (done()) fail("unterminated escape");
                    const char e = advance();
                    switch (e) {
                        case '"': s.push_back('"'); break;
                        case '\\': s.push_back('\\'); break;
                        case 'n': s.push_back('\n'); break;
                        case 't': s.push_back('\t'); break;
                        default: fail(std::string("unknown escape \\") + e);
                    }
                } else {
                    s.push_back(d);
                }
            }
            t.kind = Tok::String;
            t.text = std::move(s);
            return t;
        }
        switch (c) {
            case '(': case ')': case '[': case ']': case '{': case '}':
            case ',': case '=': case '+': case '-': case '*': case '/':
                advance();
                t.kind = Tok::Punct;
                t.punct = c;
                return t;
            default:
                fail("unexpected character (byte " +
                     std::to_string(static_cast<int>(static_cast<unsigned char>(c))) + ")");
        }
    }

    const std::string& src_;
    std::string file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ------------------------------------------------------ expression typing ---

struct FnSig {
    std::vector<Type> args;
    Type result;
};

const std::vector<FnSig>* function_overloads(const std::string& name) {
    using T = Type;
    static const std::map<std::string, std::vector<FnSig>> table = {
        {"vec", {{{T::Scalar, T::Scalar, T::Scalar}, T::Vec3}}},
        {"pose", {{{T::Vec3}, T::Pose}, {{T::Vec3, T::Pose}, T::Pose}}},
        {"frame", {{{T::Vec3, T::Vec3, T::Vec3}, T::Pose}}},
        {"rot_x", {{{T::Scalar}, T::Pose}}},
        {"rot_y", {{{T::Scalar}, T::Pose}}},
        {"rot_z", {{{T::Scalar}, T::Pose}}},
        {"dot", {{{T::Vec3, T::Vec3}, T::Scalar}}},
        {"cross", {{{T::Vec3, T::Vec3}, T::Vec3}}},
        {"norm", {{{T::Vec3}, T::Scalar}}},
        {"normalize", {{{T::Vec3}, T::Vec3}}},
        {"inverse", {{{T::Pose}, T::Pose}}},
        {"deg", {{{T::Scalar}, T::Scalar}}},
        {"sqrt", {{{T::Scalar}, T::Scalar}}},
        {"abs", {{{T::Scalar}, T::Scalar}}},
        {"sin", {{{T::Scalar}, T::Scalar}}},
        {"cos", {{{T::Scalar}, T::Scalar}}},
        {"min", {{{T::Scalar, T::Scalar}, T::Scalar}}},
        {"max", {{{T::Scalar, T::Scalar}, T::Scalar}}},
    };
    const auto it = table.find(name);
    return it == table.end() ? nullptr : &it->second;
}

// --------------------------------------------------------------- parser ---

constexpr int kMaxExprDepth = 200;

class Parser {
public:
    Parser(std::vector<Token> tokens, std::string file)
        : toks_(std::move(tokens)), file_(std::move(file)) {}

    AnalyticConcept parse_file() {
        skip_newlines();
        expect_keyword("concept");
        AnalyticConcept c;
        c.identity.id = expect_ident("concept id");
        end_of_line();

        bool have_attach = false;
        bool have_symmetry = false;
        while (!at_end()) {
            skip_newlines();
            if (at_end()) break;
            const Token& t = peek();
            if (t.kind != Tok::Ident)
                fail_expected("declaration keyword",
                              {"group", "synopsis", "symmetry", "param", "primitive", "attach",
                               "grasp", "force"});
            const std::string kw = t.text;
            if (kw == "group") {
                advance();
                if (!c.identity.group.empty()) fail("duplicate group declaration");
                c.identity.group = expect_ident("group tag");
                end_of_line();
            } else if (kw == "synopsis") {
                advance();
                if (!c.identity.synopsis.empty()) fail("duplicate synopsis");
                c.identity.synopsis = expect_string("synopsis text");
                end_of_line();
            } else if (kw == "symmetry") {
                advance();
                if (have_symmetry) fail("duplicate symmetry declaration");
                have_symmetry = true;
                c.symmetry = parse_symmetry();
                end_of_line();
            } else if (kw == "param") {
                c.structure.params.push_back(parse_param(c.structure.params, "parameter"));
            } else if (kw == "primitive") {
                c.structure.primitives.push_back(parse_primitive(c));
            } else if (kw == "attach") {
                advance();
                if (have_attach) fail("duplicate attach declaration");
                have_attach = true;
                expect_punct('=');
                c.structure.attachment_frame = parse_typed_expr(structural_symbols(c), Type::Pose);
                end_of_line();
            } else if (kw == "grasp") {
                c.grasp_families.push_back(parse_grasp(c));
            } else if (kw == "force") {
                c.force_rules.push_back(parse_force(c));
            } else {
                fail_expected("declaration keyword",
                              {"group", "synopsis", "symmetry", "param", "primitive", "attach",
                               "grasp", "force"});
            }
        }
        if (!have_attach) c.structure.attachment_frame = default_attach_expr();
        finish_checks(c);
        return c;
    }

    ExprPtr parse_single_expression(const std::map<std::string, Type>& symbols) {
        skip_newlines();
        ExprPtr e = parse_expr(symbols, 0);
        skip_newlines();
        if (!at_end()) fail("trailing input after expression");
        return e;
    }

private:
    // --- token helpers ---

    const Token& peek() const { return toks_[pos_]; }
    const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().kind == Tok::End; }

    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError(file_, peek().line, peek().col, msg);
    }
    [[noreturn]] void fail_expected(const std::string& what, std::vector<std::string> expected) {
        throw ParseError(file_, peek().line, peek().col,
                         "expected " + what + ", found `" + describe(peek()) + "`",
                         std::move(expected));
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Tok::Ident: return t.text;
            case Tok::Number: return t.text;
            case Tok::String: return "string";
            case Tok::Punct: return std::string(1, t.punct);
            case Tok::Newline: return "end of line";
            case Tok::End: return "end of input";
        }
        return "?";
    }

    void skip_newlines() {
        while (peek().kind == Tok::Newline) advance();
    }

    void end_of_line() {
        if (peek().kind == Tok::End) return;
        if (peek().kind != Tok::Newline) fail_expected("end of line", {"newline"});
        advance();
    }

    void expect_keyword(const std::string& kw) {
        if (peek().kind != Tok::Ident || peek().text != kw) fail_expected("`" + kw + "`", {kw});
        advance();
    }

    std::string expect_ident(const std::string& what) {
        if (peek().kind != Tok::Ident) fail_expected(what, {"identifier"});
        return advance().text;
    }

    std::string expect_string(const std::string& what) {
        if (peek().kind != Tok::String) fail_expected(what, {"string literal"});
        return advance().text;
    }

    void expect_punct(char p) {
        if (peek().kind != Tok::Punct || peek().punct != p)
            fail_expected(std::string("`") + p + "`", {std::string(1, p)});
        advance();
    }

    bool accept_punct(char p) {
        if (peek().kind == Tok::Punct && peek().punct == p) {
            advance();
            return true;
        }
        return false;
    }

    // --- declarations ---

    Symmetry parse_symmetry() {
        Symmetry s;
        const std::string kind = expect_ident("symmetry kind");
        if (kind == "none") {
            s.kind = Symmetry::Kind::None;
        } else if (kind == "orthorhombic") {
            s.kind = Symmetry::Kind::Orthorhombic;
        } else if (kind == "axial" || kind == "axial_flip" || kind == "cyclic") {
            s.kind = kind == "axial"        ? Symmetry::Kind::Axial
                     : kind == "axial_flip" ? Symmetry::Kind::AxialFlip
                                            : Symmetry::Kind::Cyclic;
            const std::string axis = expect_ident("axis (x, y or z)");
            if (axis == "x") s.axis = 0;
            else if (axis == "y") s.axis = 1;
            else if (axis == "z") s.axis = 2;
            else fail_expected("axis", {"x", "y", "z"});
            if (s.kind == Symmetry::Kind::Cyclic) {
                if (peek().kind != Tok::Number) fail_expected("cyclic order", {"integer"});
                const double n = advance().number;
                if (n < 2 || n != std::floor(n) || n > 64) fail("cyclic order must be an integer in [2, 64]");
                s.order = static_cast<int>(n);
            }
        } else {
            fail_expected("symmetry kind", {"none", "axial", "axial_flip", "cyclic", "orthorhombic"});
        }
        return s;
    }

    ParamSpec parse_param(const std::vector<ParamSpec>& declared, const std::string& what) {
        expect_keyword("param");
        ParamSpec p;
        const Token name_tok = peek();
        p.name = expect_ident(what + " name");
        for (const auto& d : declared)
            if (d.name == p.name)
                throw ParseError(file_, name_tok.line, name_tok.col,
                                 "duplicate " + what + " `" + p.name + "`");
        if (peek().kind == Tok::Ident && peek().text == "fixed") {
            advance();
            const double v = constant_scalar("fixed value");
            p.range = {v, v, true};
            p.default_value = v;
            end_of_line();
            return p;
        }
        expect_keyword("in");
        expect_punct('[');
        p.range.lo = constant_scalar("range lower bound");
        expect_punct(',');
        p.range.hi = constant_scalar("range upper bound");
        expect_punct(']');
        if (!(p.range.lo < p.range.hi))
            throw ParseError(file_, name_tok.line, name_tok.col,
                             "range of `" + p.name + "` must satisfy lo < hi");
        expect_keyword("default");
        p.default_value = constant_scalar("default value");
        if (!p.range.contains(p.default_value))
            throw ParseError(file_, name_tok.line, name_tok.col,
                             "default of `" + p.name + "` lies outside its range");
        end_of_line();
        return p;
    }

    PrimitiveSpec parse_primitive(const AnalyticConcept& c) {
        expect_keyword("primitive");
        PrimitiveSpec prim;
        const std::string kind = expect_ident("primitive kind");
        if (kind == "cuboid") prim.kind = PrimitiveKind::Cuboid;
        else if (kind == "cylinder") prim.kind = PrimitiveKind::Cylinder;
        else if (kind == "sphere") prim.kind = PrimitiveKind::Sphere;
        else fail_expected("primitive kind", {"cuboid", "cylinder", "sphere"});
        prim.label = expect_ident("primitive label");
        expect_punct('{');
        end_of_line();

        const auto symbols = structural_symbols(c);
        while (true) {
            skip_newlines();
            if (accept_punct('}')) break;
            const std::string field = expect_ident("primitive field");
            expect_punct('=');
            if (field == "size") {
                if (!prim.size.empty()) fail("duplicate size field");
                expect_punct('(');
                while (true) {
                    prim.size.push_back(parse_typed_expr(symbols, Type::Scalar));
                    if (accept_punct(')')) break;
                    expect_punct(',');
                }
                const std::size_t want = size_arity(prim.kind);
                if (prim.size.size() != want)
                    fail(kind + " size takes " + std::to_string(want) + " entries, got " +
                         std::to_string(prim.size.size()));
            } else if (field == "at") {
                if (prim.local_pose) fail("duplicate at field");
                prim.local_pose = parse_typed_expr(symbols, Type::Pose);
            } else {
                fail_expected("primitive field", {"size", "at"});
            }
            end_of_line();
        }
        end_of_line();
        if (prim.size.empty()) fail("primitive `" + prim.label + "` missing size");
        if (!prim.local_pose) prim.local_pose = default_attach_expr();
        return prim;
    }

    GraspFamily parse_grasp(const AnalyticConcept& c) {
        expect_keyword("grasp");
        GraspFamily fam;
        fam.name = expect_ident("grasp family name");
        for (const auto& f : c.grasp_families)
            if (f.name == fam.name) fail("duplicate grasp family `" + fam.name + "`");
        expect_punct('{');
        end_of_line();

        while (true) {
            skip_newlines();
            if (accept_punct('}')) break;
            const Token& t = peek();
            if (t.kind != Tok::Ident)
                fail_expected("grasp field", {"synopsis", "param", "pose", "width"});
            if (t.text == "synopsis") {
                advance();
                fam.synopsis = expect_string("synopsis text");
                end_of_line();
            } else if (t.text == "param") {
                fam.theta.push_back(parse_param(fam.theta, "grasp parameter"));
            } else if (t.text == "pose" || t.text == "width") {
                const std::string field = advance().text;
                expect_punct('=');
                auto symbols = structural_symbols(c);
                for (const auto& th : fam.theta) symbols[th.name] = Type::Scalar;
                add_attach_builtins(symbols);
                if (field == "pose") {
                    if (fam.pose_expr) fail("duplicate pose field");
                    fam.pose_expr = parse_typed_expr(symbols, Type::Pose);
                } else {
                    if (fam.width_expr) fail("duplicate width field");
                    fam.width_expr = parse_typed_expr(symbols, Type::Scalar);
                }
                end_of_line();
            } else {
                fail_expected("grasp field", {"synopsis", "param", "pose", "width"});
            }
        }
        end_of_line();
        if (fam.synopsis.empty()) fail("grasp family `" + fam.name + "` missing synopsis");
        if (!fam.pose_expr) fail("grasp family `" + fam.name + "` missing pose");
        if (!fam.width_expr) fail("grasp family `" + fam.name + "` missing width");
        return fam;
    }

    ForceRule parse_force(const AnalyticConcept& c) {
        expect_keyword("force");
        ForceRule rule;
        rule.name = expect_ident("force rule name");
        for (const auto& r : c.force_rules)
            if (r.name == rule.name) fail("duplicate force rule `" + rule.name + "`");
        expect_punct('{');
        end_of_line();

        auto symbols = structural_symbols(c);
        add_attach_builtins(symbols);
        add_grasp_builtins(symbols);
        bool mode_seen = false;
        while (true) {
            skip_newlines();
            if (accept_punct('}')) break;
            const Token& t = peek();
            if (t.kind != Tok::Ident)
                fail_expected("force field", {"synopsis", "mode", "dir", "axis_point", "axis_dir"});
            if (t.text == "synopsis") {
                advance();
                rule.synopsis = expect_string("synopsis text");
                end_of_line();
            } else if (t.text == "mode") {
                advance();
                if (mode_seen) fail("duplicate mode field");
                mode_seen = true;
                const std::string m = expect_ident("mode");
                if (m == "linear") rule.mode = ForceMode::Linear;
                else if (m == "tangential") rule.mode = ForceMode::TangentialAboutAxis;
                else fail_expected("mode", {"linear", "tangential"});
                end_of_line();
            } else if (t.text == "dir" || t.text == "axis_point" || t.text == "axis_dir") {
                const std::string field = advance().text;
                expect_punct('=');
                ExprPtr e = parse_typed_expr(symbols, Type::Vec3);
                if (field == "dir") {
                    if (rule.dir_expr) fail("duplicate dir field");
                    rule.dir_expr = e;
                } else if (field == "axis_point") {
                    if (rule.axis_point_expr) fail("duplicate axis_point field");
                    rule.axis_point_expr = e;
                } else {
                    if (rule.axis_dir_expr) fail("duplicate axis_dir field");
                    rule.axis_dir_expr = e;
                }
                end_of_line();
            } else {
                fail_expected("force field", {"synopsis", "mode", "dir", "axis_point", "axis_dir"});
            }
        }
        end_of_line();
        if (rule.synopsis.empty()) fail("force rule `" + rule.name + "` missing synopsis");
        if (!rule.dir_expr) fail("force rule `" + rule.name + "` missing dir");
        if (rule.mode == ForceMode::TangentialAboutAxis) {
            // articulation axis defaults to the attachment frame
            if (!rule.axis_point_expr) rule.axis_point_expr = builtin_symbol("attach_pos");
            if (!rule.axis_dir_expr) rule.axis_dir_expr = builtin_symbol("attach_z");
        } else if (rule.axis_point_expr || rule.axis_dir_expr) {
            fail("axis fields are only meaningful for tangential mode");
        }
        return rule;
    }

    void finish_checks(const AnalyticConcept& c) {
        if (c.identity.group.empty()) fail("missing group declaration");
        if (c.identity.synopsis.empty()) fail("missing synopsis declaration");
        if (c.structure.primitives.empty()) fail("concept has no primitives");
        if (c.grasp_families.empty()) fail("concept has no grasp families");
        if (c.force_rules.empty()) fail("concept has no force rules");
    }

    // --- expressions ---

    std::map<std::string, Type> structural_symbols(const AnalyticConcept& c) const {
        std::map<std::string, Type> symbols;
        for (const auto& p : c.structure.params) symbols[p.name] = Type::Scalar;
        return symbols;
    }

    static void add_attach_builtins(std::map<std::string, Type>& symbols) {
        symbols["attach_pos"] = Type::Vec3;
        symbols["attach_x"] = Type::Vec3;
        symbols["attach_y"] = Type::Vec3;
        symbols["attach_z"] = Type::Vec3;
    }

    static void add_grasp_builtins(std::map<std::string, Type>& symbols) {
        symbols["grasp_pos"] = Type::Vec3;
        symbols["grasp_x"] = Type::Vec3;
        symbols["grasp_y"] = Type::Vec3;
        symbols["grasp_z"] = Type::Vec3;
        symbols["grasp_width"] = Type::Scalar;
    }

    static ExprPtr builtin_symbol(const std::string& name) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Symbol;
        e->type = Type::Vec3;
        e->name = name;
        return e;
    }

    static ExprPtr default_attach_expr() {
        auto zero = std::make_shared<Expr>();
        zero->kind = Expr::Kind::Number;
        zero->type = Type::Scalar;
        zero->number = 0.0;
        auto v = std::make_shared<Expr>();
        v->kind = Expr::Kind::Call;
        v->type = Type::Vec3;
        v->name = "vec";
        v->args = {zero, zero, zero};
        auto p = std::make_shared<Expr>();
        p->kind = Expr::Kind::Call;
        p->type = Type::Pose;
        p->name = "pose";
        p->args = {v};
        return p;
    }

    double constant_scalar(const std::string& what) {
        const Token at = peek();
        ExprPtr e = parse_expr({}, 0);
        if (e->type != Type::Scalar)
            throw TypeError(file_, at.line, at.col, what + " must be a scalar constant");
        return eval_scalar(e, {});
    }

    ExprPtr parse_typed_expr(const std::map<std::string, Type>& symbols, Type want) {
        const Token at = peek();
        ExprPtr e = parse_expr(symbols, 0);
        if (e->type != want)
            throw TypeError(file_, at.line, at.col,
                            "expected a " + to_string(want) + " expression, got " +
                                to_string(e->type));
        return e;
    }

    ExprPtr parse_expr(const std::map<std::string, Type>& symbols, int depth) {
        if (depth > kMaxExprDepth) fail("expression too deeply nested");
        ExprPtr lhs = parse_term(symbols, depth + 1);
        while (peek().kind == Tok::Punct && (peek().punct == '+' || peek().punct == '-')) {
            const Token op = advance();
            ExprPtr rhs = parse_term(symbols, depth + 1);
            lhs = make_binary(op, lhs, rhs);
        }
        return lhs;
    }

    ExprPtr parse_term(const std::map<std::string, Type>& symbols, int depth) {
        if (depth > kMaxExprDepth) fail("expression too deeply nested");
        ExprPtr lhs = parse_factor(symbols, depth + 1);
        while (peek().kind == Tok::Punct && (peek().punct == '*' || peek().punct == '/')) {
            const Token op = advance();
            ExprPtr rhs = parse_factor(symbols, depth + 1);
            lhs = make_binary(op, lhs, rhs);
        }
        return lhs;
    }

    ExprPtr parse_factor(const std::map<std::string, Type>& symbols, int depth) {
        if (depth > kMaxExprDepth) fail("expression too deeply nested");
        if (peek().kind == Tok::Punct && peek().punct == '-') {
            const Token op = advance();
            ExprPtr inner = parse_factor(symbols, depth + 1);
            if (inner->type == Type::Pose)
                throw TypeError(file_, op.line, op.col, "cannot negate a pose");
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::Unary;
            e->op = '-';
            e->type = inner->type;
            e->line = op.line;
            e->col = op.col;
            e->args = {inner};
            return e;
        }
        return parse_primary(symbols, depth + 1);
    }

    ExprPtr parse_primary(const std::map<std::string, Type>& symbols, int depth) {
        if (depth > kMaxExprDepth) fail("expression too deeply nested");
        const Token t = peek();
        if (t.kind == Tok::Number) {
            advance();
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::Number;
            e->type = Type::Scalar;
            e->number = t.number;
            e->line = t.line;
            e->col = t.col;
            return e;
        }
        if (t.kind == Tok::Punct && t.punct == '(') {
            advance();
            ExprPtr inner = parse_expr(symbols, depth + 1);
            expect_punct(')');
            return inner;
        }
        if (t.kind == Tok::Ident) {
            advance();
            if (t.text == "pi") {
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::Pi;
                e->type = Type::Scalar;
                e->line = t.line;
                e->col = t.col;
                return e;
            }
            if (peek().kind == Tok::Punct && peek().punct == '(') {
                advance();
                std::vector<ExprPtr> args;
                if (!(peek().kind == Tok::Punct && peek().punct == ')')) {
                    while (true) {
                        args.push_back(parse_expr(symbols, depth + 1));
                        if (accept_punct(')')) break;
                        expect_punct(',');
                    }
                } else {
                    advance();
                }
                return make_call(t, std::move(args));
            }
            const auto it = symbols.find(t.text);
            if (it == symbols.end()) throw UnboundSymbol(file_, t.line, t.col, t.text);
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::Symbol;
            e->type = it->second;
            e->name = t.text;
            e->line = t.line;
            e->col = t.col;
            return e;
        }
        fail_expected("expression", {"number", "identifier", "("});
    }

    ExprPtr make_binary(const Token& op, const ExprPtr& a, const ExprPtr& b) {
        using T = Type;
        std::optional<Type> result;
        const T ta = a->type, tb = b->type;
        switch (op.punct) {
            case '+':
            case '-':
                if (ta == T::Scalar && tb == T::Scalar) result = T::Scalar;
                else if (ta == T::Vec3 && tb == T::Vec3) result = T::Vec3;
                break;
            case '*':
                if (ta == T::Scalar && tb == T::Scalar) result = T::Scalar;
                else if (ta == T::Scalar && tb == T::Vec3) result = T::Vec3;
                else if (ta == T::Vec3 && tb == T::Scalar) result = T::Vec3;
                else if (ta == T::Pose && tb == T::Pose) result = T::Pose;
                else if (ta == T::Pose && tb == T::Vec3) result = T::Vec3;
                break;
            case '/':
                if (ta == T::Scalar && tb == T::Scalar) result = T::Scalar;
                else if (ta == T::Vec3 && tb == T::Scalar) result = T::Vec3;
                break;
        }
        if (!result)
            throw TypeError(file_, op.line, op.col,
                            std::string("operator `") + op.punct + "` undefined for " +
                                to_string(ta) + " and " + to_string(tb));
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Binary;
        e->op = op.punct;
        e->type = *result;
        e->line = op.line;
        e->col = op.col;
        e->args = {a, b};
        return e;
    }

    ExprPtr make_call(const Token& name, std::vector<ExprPtr> args) {
        const auto* overloads = function_overloads(name.text);
        if (!overloads)
            throw ParseError(file_, name.line, name.col, "unknown function `" + name.text + "`");
        for (const auto& sig : *overloads) {
            if (sig.args.size() != args.size()) continue;
            bool match = true;
            for (std::size_t i = 0; i < args.size(); ++i)
                if (args[i]->type != sig.args[i]) {
                    match = false;
                    break;
                }
            if (!match) continue;
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::Call;
            e->name = name.text;
            e->type = sig.result;
            e->line = name.line;
            e->col = name.col;
            e->args = std::move(args);
            return e;
        }
        std::string got;
        for (const auto& a : args) got += (got.empty() ? "" : ", ") + to_string(a->type);
        throw TypeError(file_, name.line, name.col,
                        "no overload of `" + name.text + "` accepts (" + got + ")");
    }

    std::vector<Token> toks_;
    std::string file_;
    std::size_t pos_ = 0;
};

}  // namespace

AnalyticConcept parse_concept(const std::string& text, const std::string& filename) {
    Lexer lexer(text, filename);
    Parser parser(lexer.run(), filename);
    return parser.parse_file();
}

ExprPtr parse_expression(const std::string& text, const std::map<std::string, Type>& symbols,
                         const std::string& filename) {
    Lexer lexer(text, filename);
    Parser parser(lexer.run(), filename);
    return parser.parse_single_expression(symbols);
}

}  // namespace acg::dsl
