#pragma once

#include "acg/dsl/ast.hpp"
#include "acg/dsl/value.hpp"

namespace acg::dsl {

/// Evaluates a typed expression under `env`. Pure: identical inputs give
/// bit-identical results. Throws MissingBinding for uncovered symbols and
/// DomainError for things like normalize([0,0,0]) or division by zero.
Value eval_expr(const ExprPtr& expr, const Env& env);

double eval_scalar(const ExprPtr& expr, const Env& env);
Eigen::Vector3d eval_vec3(const ExprPtr& expr, const Env& env);
RigidTransform eval_pose(const ExprPtr& expr, const Env& env);

}  // namespace acg::dsl
