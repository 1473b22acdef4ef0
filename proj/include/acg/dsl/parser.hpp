#pragma once

#include <string>

#include "acg/concept.hpp"
#include "acg/dsl/ast.hpp"

namespace acg::dsl {

/// Parses one concept definition. Throws ParseError / TypeError /
/// UnboundSymbol; never crashes on malformed input.
AnalyticConcept parse_concept(const std::string& text,
                              const std::string& filename = "<string>");

/// Parses a single expression against a fixed symbol table; used by tests
/// and small tools.
ExprPtr parse_expression(const std::string& text,
                         const std::map<std::string, Type>& symbols,
                         const std::string& filename = "<expr>");

}  // namespace acg::dsl
