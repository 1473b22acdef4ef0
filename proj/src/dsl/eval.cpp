#include "acg/dsl/eval.hpp"

#include <cmath>

namespace acg::dsl {

namespace {

RigidTransform make_frame(const Eigen::Vector3d& pos, const Eigen::Vector3d& zdir,
                          const Eigen::Vector3d& xdir) {
    const double zn = zdir.norm();
    if (zn < 1e-12) throw DomainError("frame: zero z direction");
    const Eigen::Vector3d z = zdir / zn;
    Eigen::Vector3d x = xdir - xdir.dot(z) * z;
    const double xn = x.norm();
    if (xn < 1e-9) throw DomainError("frame: x direction parallel to z");
    x /= xn;
    const Eigen::Vector3d y = z.cross(x);
    RigidTransform T;
    T.R.col(0) = x;
    T.R.col(1) = y;
    T.R.col(2) = z;
    T.t = pos;
    return T;
}

Value eval_call(const Expr& e, const std::vector<Value>& a) {
    const std::string& fn = e.name;
    if (fn == "vec") return Eigen::Vector3d(a[0].scalar(), a[1].scalar(), a[2].scalar());
    if (fn == "pose") {
        RigidTransform T;
        T.t = a[0].vec();
        if (a.size() == 2) T.R = a[1].pose().R;
        return T;
    }
    if (fn == "frame") return make_frame(a[0].vec(), a[1].vec(), a[2].vec());
    if (fn == "rot_x") return rot_x(a[0].scalar());
    if (fn == "rot_y") return rot_y(a[0].scalar());
    if (fn == "rot_z") return rot_z(a[0].scalar());
    if (fn == "dot") return a[0].vec().dot(a[1].vec());
    if (fn == "cross") return Eigen::Vector3d(a[0].vec().cross(a[1].vec()));
    if (fn == "norm") return a[0].vec().norm();
    if (fn == "normalize") {
        const double n = a[0].vec().norm();
        if (n < 1e-12) throw DomainError("normalize of (near-)zero vector");
        return Eigen::Vector3d(a[0].vec() / n);
    }
    if (fn == "inverse") return a[0].pose().inverse();
    if (fn == "deg") return a[0].scalar() * M_PI / 180.0;
    if (fn == "sqrt") {
        if (a[0].scalar() < 0.0) throw DomainError("sqrt of negative value");
        return std::sqrt(a[0].scalar());
    }
    if (fn == "abs") return std::abs(a[0].scalar());
    if (fn == "sin") return std::sin(a[0].scalar());
    if (fn == "cos") return std::cos(a[0].scalar());
    if (fn == "min") return std::min(a[0].scalar(), a[1].scalar());
    if (fn == "max") return std::max(a[0].scalar(), a[1].scalar());
    throw DomainError("unknown function " + fn);
}

}  // namespace

Value eval_expr(const ExprPtr& expr, const Env& env) {
    const Expr& e = *expr;
    switch (e.kind) {
        case Expr::Kind::Number:
            return e.number;
        case Expr::Kind::Pi:
            return M_PI;
        case Expr::Kind::Symbol: {
            const auto it = env.find(e.name);
            if (it == env.end()) throw MissingBinding(e.name);
            return it->second;
        }
        case Expr::Kind::Unary: {
            const Value v = eval_expr(e.args[0], env);
            if (v.type() == Type::Scalar) return -v.scalar();
            return Eigen::Vector3d(-v.vec());
        }
        case Expr::Kind::Binary: {
            const Value a = eval_expr(e.args[0], env);
            const Value b = eval_expr(e.args[1], env);
            switch (e.op) {
                case '+':
                    if (a.type() == Type::Scalar) return a.scalar() + b.scalar();
                    return Eigen::Vector3d(a.vec() + b.vec());
                case '-':
                    if (a.type() == Type::Scalar) return a.scalar() - b.scalar();
                    return Eigen::Vector3d(a.vec() - b.vec());
                case '*':
                    if (a.type() == Type::Scalar && b.type() == Type::Scalar)
                        return a.scalar() * b.scalar();
                    if (a.type() == Type::Scalar) return Eigen::Vector3d(a.scalar() * b.vec());
                    if (b.type() == Type::Scalar) return Eigen::Vector3d(a.vec() * b.scalar());
                    if (a.type() == Type::Pose && b.type() == Type::Pose)
                        return compose(a.pose(), b.pose());
                    return a.pose().apply(b.vec());
                case '/': {
                    const double d = b.scalar();
                    if (d == 0.0) throw DomainError("division by zero");
                    if (a.type() == Type::Scalar) return a.scalar() / d;
                    return Eigen::Vector3d(a.vec() / d);
                }
            }
            throw DomainError("bad operator");
        }
        case Expr::Kind::Call: {
            std::vector<Value> args;
            args.reserve(e.args.size());
            for (const auto& arg : e.args) args.push_back(eval_expr(arg, env));
            return eval_call(e, args);
        }
    }
    throw DomainError("bad expression node");
}

double eval_scalar(const ExprPtr& expr, const Env& env) { return eval_expr(expr, env).scalar(); }

Eigen::Vector3d eval_vec3(const ExprPtr& expr, const Env& env) { return eval_expr(expr, env).vec(); }

RigidTransform eval_pose(const ExprPtr& expr, const Env& env) { return eval_expr(expr, env).pose(); }

}  // namespace acg::dsl
