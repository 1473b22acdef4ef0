#include "acg/dsl/serialize.hpp"

#include <charconv>
#include <sstream>

namespace acg::dsl {

std::string format_number(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

// precedence: additive 1, multiplicative 2, unary 3, primary 4
int precedence(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Binary:
            return (e.op == '+' || e.op == '-') ? 1 : 2;
        case Expr::Kind::Unary:
            return 3;
        default:
            return 4;
    }
}

void emit(const ExprPtr& ep, std::ostream& out, int parent_prec) {
    const Expr& e = *ep;
    const int prec = precedence(e);
    const bool parens = prec < parent_prec;
    if (parens) out << "(";
    switch (e.kind) {
        case Expr::Kind::Number:
            out << format_number(e.number);
            break;
        case Expr::Kind::Pi:
            out << "pi";
            break;
        case Expr::Kind::Symbol:
            out << e.name;
            break;
        case Expr::Kind::Unary:
            out << "-";
            emit(e.args[0], out, prec + 1);
            break;
        case Expr::Kind::Binary:
            emit(e.args[0], out, prec);
            out << " " << e.op << " ";
            // right operand needs the next level to preserve left association
            emit(e.args[1], out, prec + 1);
            break;
        case Expr::Kind::Call:
            out << e.name << "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out << ", ";
                emit(e.args[i], out, 0);
            }
            out << ")";
            break;
    }
    if (parens) out << ")";
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    out += "\"";
    return out;
}

void emit_param(const ParamSpec& p, std::ostream& out, const std::string& indent) {
    out << indent << "param " << p.name;
    if (p.range.fixed) {
        out << " fixed " << format_number(p.default_value) << "\n";
    } else {
        out << " in [" << format_number(p.range.lo) << ", " << format_number(p.range.hi)
            << "] default " << format_number(p.default_value) << "\n";
    }
}

}  // namespace

std::string serialize_expr(const ExprPtr& expr) {
    std::ostringstream out;
    emit(expr, out, 0);
    return out.str();
}

std::string serialize_concept(const AnalyticConcept& c) {
    std::ostringstream out;
    out << "concept " << c.identity.id << "\n";
    out << "group " << c.identity.group << "\n";
    out << "synopsis " << quote(c.identity.synopsis) << "\n";
    switch (c.symmetry.kind) {
        case Symmetry::Kind::None:
            out << "symmetry none\n";
            break;
        case Symmetry::Kind::Orthorhombic:
            out << "symmetry orthorhombic\n";
            break;
        case Symmetry::Kind::Axial:
        case Symmetry::Kind::AxialFlip:
        case Symmetry::Kind::Cyclic: {
            const char axis = static_cast<char>('x' + c.symmetry.axis);
            if (c.symmetry.kind == Symmetry::Kind::Axial)
                out << "symmetry axial " << axis << "\n";
            else if (c.symmetry.kind == Symmetry::Kind::AxialFlip)
                out << "symmetry axial_flip " << axis << "\n";
            else
                out << "symmetry cyclic " << axis << " " << c.symmetry.order << "\n";
            break;
        }
    }
    out << "\n";
    for (const auto& p : c.structure.params) emit_param(p, out, "");

    for (const auto& prim : c.structure.primitives) {
        out << "\nprimitive " << to_string(prim.kind) << " " << prim.label << " {\n";
        out << "  size = (";
        for (std::size_t i = 0; i < prim.size.size(); ++i) {
            if (i) out << ", ";
            out << serialize_expr(prim.size[i]);
        }
        out << ")\n";
        out << "  at = " << serialize_expr(prim.local_pose) << "\n";
        out << "}\n";
    }

    out << "\nattach = " << serialize_expr(c.structure.attachment_frame) << "\n";

    for (const auto& fam : c.grasp_families) {
        out << "\ngrasp " << fam.name << " {\n";
        out << "  synopsis " << quote(fam.synopsis) << "\n";
        for (const auto& th : fam.theta) emit_param(th, out, "  ");
        out << "  pose = " << serialize_expr(fam.pose_expr) << "\n";
        out << "  width = " << serialize_expr(fam.width_expr) << "\n";
        out << "}\n";
    }

    for (const auto& rule : c.force_rules) {
        out << "\nforce " << rule.name << " {\n";
        out << "  synopsis " << quote(rule.synopsis) << "\n";
        out << "  mode " << (rule.mode == ForceMode::Linear ? "linear" : "tangential") << "\n";
        if (rule.mode == ForceMode::TangentialAboutAxis) {
            out << "  axis_point = " << serialize_expr(rule.axis_point_expr) << "\n";
            out << "  axis_dir = " << serialize_expr(rule.axis_dir_expr) << "\n";
        }
        out << "  dir = " << serialize_expr(rule.dir_expr) << "\n";
        out << "}\n";
    }
    return out.str();
}

}  // namespace acg::dsl
