#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acg/dsl/ast.hpp"
#include "acg/dsl/value.hpp"
#include "acg/primitives.hpp"

namespace acg {

/// Concrete parameter binding, name -> value. Ordered so that iteration
/// (and everything serialized from it) is deterministic.
using ParamBinding = std::map<std::string, double>;

struct ConceptIdentity {
    std::string id;        // unique symbol within a registry
    std::string synopsis;  // one-line description consumed by the reasoner
    std::string group;     // structural group tag, e.g. "handle"
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool fixed = false;  // degenerate range, declared `param x fixed v`

    bool contains(double v, double tol = 1e-12) const { return v >= lo - tol && v <= hi + tol; }
    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

struct ParamSpec {
    std::string name;
    Interval range;
    double default_value = 0.0;
};

struct PrimitiveSpec {
    PrimitiveKind kind;
    std::string label;
    std::vector<dsl::ExprPtr> size;  // scalar exprs; arity fixed by kind
    dsl::ExprPtr local_pose;         // pose expr
};

struct StructuralTemplate {
    std::vector<ParamSpec> params;
    std::vector<PrimitiveSpec> primitives;
    dsl::ExprPtr attachment_frame;  // pose expr; evaluates near the canonical origin
};

struct GraspFamily {
    std::string name;
    std::string synopsis;
    std::vector<ParamSpec> theta;  // family-internal parameters
    dsl::ExprPtr pose_expr;        // (structural params, theta) -> gripper pose, canonical frame
    dsl::ExprPtr width_expr;       // same -> opening width in meters
};

enum class ForceMode { Linear, TangentialAboutAxis };

struct ForceRule {
    std::string name;
    std::string synopsis;
    ForceMode mode = ForceMode::Linear;
    dsl::ExprPtr dir_expr;
    dsl::ExprPtr axis_point_expr;  // tangential only
    dsl::ExprPtr axis_dir_expr;    // tangential only
};

/// Self-congruences of the canonical geometry, used when comparing poses.
/// All declared elements fix the canonical origin, so they are pure rotations.
struct Symmetry {
    enum class Kind { None, Cyclic, Axial, AxialFlip, Orthorhombic };
    Kind kind = Kind::None;
    int axis = 2;   // 0=x 1=y 2=z, for Cyclic/Axial/AxialFlip
    int order = 1;  // Cyclic only
};

struct AnalyticConcept {
    ConceptIdentity identity;
    StructuralTemplate structure;
    std::vector<GraspFamily> grasp_families;
    std::vector<ForceRule> force_rules;
    Symmetry symmetry;

    const GraspFamily* find_family(const std::string& name) const;
    const ForceRule* find_rule(const std::string& name) const;
};

/// Throws InvalidConcept when a structural invariant fails (non-empty ids,
/// at least one primitive/family/rule, declared symbols, ranges sane).
void check_concept_wellformed(const AnalyticConcept& acon);

bool concept_equal(const AnalyticConcept& a, const AnalyticConcept& b);

/// Immutable concept store. Mutation happens functionally: register_concept
/// returns a new registry, so shared instances are safe to read concurrently.
class ConceptRegistry {
public:
    bool contains(const std::string& id) const { return concepts_.count(id) > 0; }
    const AnalyticConcept& get(const std::string& id) const;
    std::size_t size() const { return concepts_.size(); }

    /// All (id, synopsis) pairs of a group, sorted by id.
    std::vector<std::pair<std::string, std::string>> concepts_in_group(
        const std::string& group) const;

    std::vector<std::string> groups() const;
    std::vector<std::string> ids() const;

    friend ConceptRegistry register_concept(const ConceptRegistry& registry,
                                            const AnalyticConcept& acon);

private:
    std::map<std::string, AnalyticConcept> concepts_;
    std::map<std::string, std::vector<std::string>> groups_;
};

/// Functional insert; validates the concept and uniqueness of its id.
ConceptRegistry register_concept(const ConceptRegistry& registry, const AnalyticConcept& acon);

/// The shipped concept library, parsed from the embedded .acon sources.
/// Built once; immutable afterwards.
const ConceptRegistry& builtin_registry();

/// Raw sources of the shipped library (filename stem -> .acon text).
const std::vector<std::pair<std::string, std::string>>& builtin_concept_sources();

// --- template instantiation (geometry side of the concept model) ---

/// Default binding (every parameter at its declared default).
ParamBinding default_params(const std::vector<ParamSpec>& specs);

/// Checks that `binding` covers exactly the declared parameters and lies
/// within ranges; throws OutOfRangeParam otherwise.
void check_binding(const std::vector<ParamSpec>& specs, const ParamBinding& binding,
                   const std::string& what);

/// Evaluates every PrimitiveSpec at `params`.
PrimitiveAssembly instantiate_structure(const StructuralTemplate& tmpl,
                                        const ParamBinding& params);

/// Evaluates the attachment frame at `params`.
RigidTransform attachment_frame_pose(const StructuralTemplate& tmpl, const ParamBinding& params);

// --- evaluation environments shared by grasp/force expressions ---

dsl::Env structural_env(const ParamBinding& params);
void add_attach_env(dsl::Env& env, const RigidTransform& attach);
void add_grasp_env(dsl::Env& env, const RigidTransform& grasp_pose_canonical, double width);

}  // namespace acg
