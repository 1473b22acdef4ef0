#pragma once

#include <string>

#include "acg/concept.hpp"

namespace acg::dsl {

/// Canonical .acon rendering. Deterministic: serializing twice gives
/// identical bytes, and parse(serialize(c)) is structurally equal to c.
std::string serialize_concept(const AnalyticConcept& acon);

std::string serialize_expr(const ExprPtr& expr);

/// Shortest decimal rendering that reparses to the same double.
std::string format_number(double v);

}  // namespace acg::dsl
