#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acg/dsl/eval.hpp"
#include "acg/dsl/parser.hpp"
#include "acg/dsl/serialize.hpp"
#include "acg/dsl/validate.hpp"
#include "test_support.hpp"

using namespace acg;
using namespace acg::dsl;

namespace {

const char* kSphereCap = R"(
concept Test_Cap
group cap
synopsis "Minimal spherical cap for tests."
symmetry axial z

param r in [0.02, 0.06] default 0.04

primitive sphere ball {
  size = (r)
  at = pose(vec(0, 0, r))
}

attach = pose(vec(0, 0, 0))

grasp grasp_top {
  synopsis "Pinch the ball from above."
  param depth in [-0.01, 0.01] default 0
  pose = frame(vec(0, 0, r - depth), vec(0, 0, -1), vec(1, 0, 0))
  width = 2 * r + 0.01
}

force lift_up {
  synopsis "Lift straight up."
  mode linear
  dir = attach_z
}
)";

std::string shipped(const std::string& stem) {
    for (const auto& [name, text] : builtin_concept_sources())
        if (name == stem) return text;
    REQUIRE(false);
    return "";
}

}  // namespace

TEST_CASE("minimal concept parses and validates") {
    const AnalyticConcept acon = parse_concept(kSphereCap, "test_cap.acon");
    CHECK(acon.identity.id == "Test_Cap");
    CHECK(acon.identity.group == "cap");
    CHECK(acon.structure.primitives.size() == 1);
    CHECK(acon.grasp_families.size() == 1);
    CHECK(acon.force_rules.size() == 1);
    CHECK(acon.symmetry.kind == Symmetry::Kind::Axial);
    check_concept_wellformed(acon);

    const auto report = validate_concept(acon, 200, 1);
    CHECK(report.ok());
}

TEST_CASE("shipped l_handle source has the documented shape") {
    const AnalyticConcept acon = parse_concept(shipped("l_handle"), "l_handle.acon");
    CHECK(acon.identity.id == "L_Handle");
    CHECK(acon.identity.group == "handle");
    // two-segment layout: stem plus grip bar
    CHECK(acon.structure.primitives.size() == 2);
    bool has_len = false, has_thick = false;
    for (const auto& p : acon.structure.params) {
        if (p.name == "bar_len") has_len = true;
        if (p.name == "bar_thick") has_thick = true;
    }
    CHECK(has_len);
    CHECK(has_thick);
    CHECK(acon.find_family("grasp_above") != nullptr);
    CHECK(acon.find_family("grasp_front") != nullptr);
    CHECK(acon.find_rule("push_clockwise") != nullptr);
}

TEST_CASE("undeclared symbol in expression") {
    const char* bad = R"(
concept Bad
group misc
synopsis "x"
param r in [0.01, 0.1] default 0.05
primitive sphere s {
  size = (rr)
  at = pose(vec(0, 0, 0))
}
grasp g {
  synopsis "g"
  pose = pose(vec(0, 0, 0))
  width = 0.01
}
force f {
  synopsis "f"
  mode linear
  dir = vec(0, 0, 1)
}
)";
    CHECK_THROWS_AS(parse_concept(bad, "bad.acon"), UnboundSymbol);
}

TEST_CASE("parse errors carry positions and expected sets") {
    try {
        parse_concept("concept X\ngroup 123\n", "pos.acon");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.col >= 7);
        CHECK(std::string(e.what()).find("pos.acon:2:") != std::string::npos);
        CHECK(!e.expected.empty());
    }
}

TEST_CASE("type errors are reported at parse time") {
    std::map<std::string, Type> syms{{"v", Type::Vec3}};
    CHECK_THROWS_AS(parse_expression("v + 1", syms), TypeError);
    CHECK_THROWS_AS(parse_expression("dot(1, 2)", syms), TypeError);
    CHECK_THROWS_AS(parse_expression("normalize(pi)", syms), TypeError);
    CHECK_THROWS_AS(parse_expression("nosuchfn(1)", syms), ParseError);
}

TEST_CASE("evaluator analytic cases") {
    const Env empty;
    CHECK((eval_vec3(parse_expression("normalize(vec(0, 0, 2))", {}), empty) -
           Eigen::Vector3d(0, 0, 1))
              .norm() < 1e-15);

    const Eigen::Vector3d rotated =
        eval_vec3(parse_expression("rot_z(pi / 2) * vec(1, 0, 0)", {}), empty);
    CHECK((rotated - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);

    CHECK((eval_vec3(parse_expression("cross(vec(1,0,0), vec(0,1,0))", {}), empty) -
           Eigen::Vector3d(0, 0, 1))
              .norm() == 0.0);

    CHECK(eval_scalar(parse_expression("deg(90)", {}), empty) == doctest::Approx(M_PI / 2));
    CHECK(eval_scalar(parse_expression("min(3, max(1, 2))", {}), empty) == 2.0);

    // pose algebra: compose-then-apply equals applying twice
    const auto e = parse_expression("(rot_x(0.3) * pose(vec(0.1, 0, 0))) * vec(0, 0.2, 0)", {});
    const Eigen::Vector3d via_expr = eval_vec3(e, empty);
    const Eigen::Vector3d direct =
        compose(rot_x(0.3), RigidTransform::translation({0.1, 0, 0})).apply({0, 0.2, 0});
    CHECK((via_expr - direct).norm() < 1e-15);
}

TEST_CASE("evaluator error cases") {
    CHECK_THROWS_AS(eval_expr(parse_expression("normalize(vec(0,0,0))", {}), {}), DomainError);
    CHECK_THROWS_AS(eval_expr(parse_expression("1 / 0", {}), {}), DomainError);
    CHECK_THROWS_AS(eval_expr(parse_expression("sqrt(0 - 1)", {}), {}), DomainError);
    std::map<std::string, Type> syms{{"x", Type::Scalar}};
    CHECK_THROWS_AS(eval_expr(parse_expression("x + 1", syms), {}), MissingBinding);
}

TEST_CASE("evaluator is referentially transparent") {
    std::map<std::string, Type> syms{{"a", Type::Scalar}, {"b", Type::Vec3}};
    const auto e = parse_expression("normalize(cross(b, vec(a, 1, 0))) * (a * 3 + 1)", syms);
    Env env{{"a", Value(0.37)}, {"b", Value(Eigen::Vector3d(0.2, -0.4, 1.1))}};
    const Eigen::Vector3d v1 = eval_vec3(e, env);
    const Eigen::Vector3d v2 = eval_vec3(e, env);
    CHECK(v1.x() == v2.x());
    CHECK(v1.y() == v2.y());
    CHECK(v1.z() == v2.z());
}

TEST_CASE("serialize round trip on every shipped concept") {
    for (const auto& [name, text] : builtin_concept_sources()) {
        const AnalyticConcept original = parse_concept(text, name);
        const std::string serialized = serialize_concept(original);
        const AnalyticConcept reparsed = parse_concept(serialized, name + " (serialized)");
        CHECK_MESSAGE(concept_equal(original, reparsed), "round trip failed for ", name);
        CHECK(serialize_concept(original) == serialized);
        CHECK(serialize_concept(reparsed) == serialized);
    }
}

TEST_CASE("whitespace variants parse to the same tree") {
    const AnalyticConcept original = parse_concept(kSphereCap, "a");
    std::string mangled;
    Rng rng(9);
    for (char c : std::string(kSphereCap)) {
        // blank lines and indentation may move freely; strings stay intact
        if (c == '\n' && rng.uniform() < 0.4) mangled += "\t \t";
        mangled.push_back(c);
        if (c == '\n' && rng.uniform() < 0.4) mangled += "\n\n";
        if (c == '\n' && rng.uniform() < 0.4) mangled += "  ";
    }
    const AnalyticConcept reparsed = parse_concept(mangled, "b");
    CHECK(concept_equal(original, reparsed));
}

TEST_CASE("parser totality on random bytes (smoke)") {
    Rng rng(123);
    int structured = 0;
    const int n = 3000;
    for (int i = 0; i < n; ++i) {
        const std::size_t len = rng.uniform_index(160);
        std::string input;
        for (std::size_t k = 0; k < len; ++k)
            input.push_back(static_cast<char>(rng.uniform_index(256)));
        try {
            parse_concept(input, "fuzz");
        } catch (const DslError&) {
            ++structured;
        }
    }
    CHECK(structured == n);  // random bytes essentially never form a valid concept
}

TEST_CASE("deep nesting yields a parse error, not a crash") {
    std::string deep = "concept D\ngroup g\nsynopsis \"d\"\nparam r in [";
    deep += std::string(5000, '(') + "1" + std::string(5000, ')');
    deep += ", 2] default 1.5\n";
    CHECK_THROWS_AS(parse_concept(deep, "deep"), ParseError);
}

TEST_CASE("validator flags positivity violations") {
    const char* negative_size = R"(
concept Neg
group misc
synopsis "negative size region"
param r in [0.01, 0.1] default 0.05
primitive sphere s {
  size = (r - 0.2)
  at = pose(vec(0, 0, 0))
}
grasp g {
  synopsis "g"
  pose = pose(vec(0, 0, 0))
  width = 0.01
}
force f {
  synopsis "f"
  mode linear
  dir = vec(0, 0, 1)
}
)";
    const auto report = validate_concept(parse_concept(negative_size, "neg.acon"), 100, 3);
    CHECK(!report.ok());
    bool found = false;
    for (const auto& v : report.violations)
        if (v.where == "primitive s" && v.message.find("non-positive size") != std::string::npos)
            found = true;
    CHECK(found);
    CHECK(!report.violations.front().binding.empty());
}

TEST_CASE("validator flags zero-norm force directions") {
    const char* zero_force = R"(
concept ZeroF
group misc
synopsis "degenerate force"
param r in [0.01, 0.1] default 0.05
primitive sphere s {
  size = (r)
  at = pose(vec(0, 0, 0))
}
grasp g {
  synopsis "g"
  pose = pose(vec(0, 0, 0))
  width = 0.01
}
force f {
  synopsis "cross of the axis with itself"
  mode linear
  dir = cross(attach_z, attach_z)
}
)";
    const auto report = validate_concept(parse_concept(zero_force, "zf.acon"), 50, 4);
    CHECK(!report.ok());
    bool found = false;
    for (const auto& v : report.violations)
        if (v.message.find("zero norm") != std::string::npos ||
            v.message.find("normalize") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("every shipped concept validates cleanly at 1000 samples") {
    for (const auto& id : builtin_registry().ids()) {
        const auto report = validate_concept(builtin_registry().get(id), 1000, 42);
        CHECK_MESSAGE(report.ok(), id, ": ",
                      report.ok() ? "" : report.violations.front().message);
    }
}

TEST_CASE("param fixed and deg sugar parse") {
    const char* text = R"(
concept Fixed
group misc
synopsis "fixed parameter"
param r fixed 0.05
param a in [0, deg(90)] default deg(30)
primitive sphere s {
  size = (r)
  at = pose(vec(0, 0, 0), rot_z(a))
}
grasp g {
  synopsis "g"
  pose = pose(vec(0, 0, r))
  width = r
}
force f {
  synopsis "f"
  mode linear
  dir = vec(0, 0, 1)
}
)";
    const AnalyticConcept acon = parse_concept(text, "fixed.acon");
    CHECK(acon.structure.params[0].range.fixed);
    CHECK(acon.structure.params[0].default_value == 0.05);
    CHECK(acon.structure.params[1].range.hi == doctest::Approx(M_PI / 2));
    CHECK(acon.structure.params[1].default_value == doctest::Approx(M_PI / 6));
}
