#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "acg/errors.hpp"

namespace acg::dsl {

enum class Type { Scalar, Vec3, Pose };

std::string to_string(Type t);

/// Error with a source position. what() renders as `file:line:col: message`.
struct DslError : Error {
    int line;
    int col;
    DslError(const std::string& file, int line_, int col_, const std::string& msg)
        : Error(file + ":" + std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
          line(line_),
          col(col_) {}
};

struct ParseError : DslError {
    std::vector<std::string> expected;
    ParseError(const std::string& file, int line, int col, const std::string& msg,
               std::vector<std::string> expected_ = {})
        : DslError(file, line, col, msg), expected(std::move(expected_)) {}
};

struct TypeError : DslError {
    using DslError::DslError;
};

struct UnboundSymbol : DslError {
    std::string symbol;
    UnboundSymbol(const std::string& file, int line, int col, const std::string& sym)
        : DslError(file, line, col, "unbound symbol `" + sym + "`"), symbol(sym) {}
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Typed expression tree. Nodes are immutable once built; the parser is the
/// only producer and annotates every node with its type and position.
struct Expr {
    enum class Kind { Number, Pi, Symbol, Unary, Binary, Call };

    Kind kind;
    Type type = Type::Scalar;
    int line = 0;
    int col = 0;

    double number = 0.0;       // Kind::Number
    std::string name;          // Kind::Symbol / Kind::Call
    char op = 0;               // Kind::Unary ('-') / Kind::Binary ('+','-','*','/')
    std::vector<ExprPtr> args;
};

/// Structural equality; source positions are ignored.
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

void collect_free_symbols(const ExprPtr& e, std::set<std::string>& out);

}  // namespace acg::dsl
