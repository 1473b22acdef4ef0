#include "acg/dsl/ast.hpp"

namespace acg::dsl {

std::string to_string(Type t) {
    switch (t) {
        case Type::Scalar: return "scalar";
        case Type::Vec3: return "vec3";
        case Type::Pose: return "pose";
    }
    return "?";
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->type != b->type) return false;
    switch (a->kind) {
        case Expr::Kind::Number:
            return a->number == b->number;
        case Expr::Kind::Pi:
            return true;
        case Expr::Kind::Symbol:
            return a->name == b->name;
        case Expr::Kind::Unary:
        case Expr::Kind::Binary:
            if (a->op != b->op) return false;
            break;
        case Expr::Kind::Call:
            if (a->name != b->name) return false;
            break;
    }
    if (a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!expr_equal(a->args[i], b->args[i])) return false;
    return true;
}

void collect_free_symbols(const ExprPtr& e, std::set<std::string>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Symbol) out.insert(e->name);
    for (const auto& arg : e->args) collect_free_symbols(arg, out);
}

}  // namespace acg::dsl
