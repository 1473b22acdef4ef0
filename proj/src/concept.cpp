#include "acg/concept.hpp"

#include <algorithm>

#include "acg/dsl/eval.hpp"
#include "acg/dsl/parser.hpp"

namespace acg {

const GraspFamily* AnalyticConcept::find_family(const std::string& name) const {
    for (const auto& f : grasp_families)
        if (f.name == name) return &f;
    return nullptr;
}

const ForceRule* AnalyticConcept::find_rule(const std::string& name) const {
    for (const auto& r : force_rules)
        if (r.name == name) return &r;
    return nullptr;
}

namespace {

void check_params_declared(const std::vector<ParamSpec>& specs, const std::string& where) {
    for (const auto& p : specs) {
        if (p.name.empty()) throw InvalidConcept(where + ": unnamed parameter");
        if (!p.range.fixed && !(p.range.lo < p.range.hi))
            throw InvalidConcept(where + ": parameter `" + p.name + "` has an empty range");
        if (!p.range.contains(p.default_value))
            throw InvalidConcept(where + ": default of `" + p.name + "` outside its range");
    }
}

void check_closed_over(const dsl::ExprPtr& e, const std::set<std::string>& declared,
                       const std::string& where) {
    if (!e) throw InvalidConcept(where + ": missing expression");
    std::set<std::string> free;
    dsl::collect_free_symbols(e, free);
    for (const auto& sym : free)
        if (!declared.count(sym))
            throw InvalidConcept(where + ": expression uses undeclared symbol `" + sym + "`");
}

std::set<std::string> attach_builtin_names() {
    return {"attach_pos", "attach_x", "attach_y", "attach_z"};
}

std::set<std::string> grasp_builtin_names() {
    return {"grasp_pos", "grasp_x", "grasp_y", "grasp_z", "grasp_width"};
}

}  // namespace

void check_concept_wellformed(const AnalyticConcept& c) {
    if (c.identity.id.empty()) throw InvalidConcept("empty id");
    if (c.identity.synopsis.empty()) throw InvalidConcept(c.identity.id + ": empty synopsis");
    if (c.identity.group.empty()) throw InvalidConcept(c.identity.id + ": empty group");
    if (c.structure.primitives.empty())
        throw InvalidConcept(c.identity.id + ": no primitives");
    if (c.grasp_families.empty()) throw InvalidConcept(c.identity.id + ": no grasp families");
    if (c.force_rules.empty()) throw InvalidConcept(c.identity.id + ": no force rules");

    check_params_declared(c.structure.params, c.identity.id);
    std::set<std::string> structural;
    for (const auto& p : c.structure.params) structural.insert(p.name);

    for (const auto& prim : c.structure.primitives) {
        const std::string where = c.identity.id + ": primitive " + prim.label;
        if (prim.size.size() != size_arity(prim.kind))
            throw InvalidConcept(where + ": wrong size arity");
        for (const auto& s : prim.size) check_closed_over(s, structural, where);
        check_closed_over(prim.local_pose, structural, where);
    }
    check_closed_over(c.structure.attachment_frame, structural, c.identity.id + ": attach");

    for (const auto& fam : c.grasp_families) {
        const std::string where = c.identity.id + ": grasp " + fam.name;
        if (fam.synopsis.empty()) throw InvalidConcept(where + ": empty synopsis");
        check_params_declared(fam.theta, where);
        std::set<std::string> allowed = structural;
        for (const auto& th : fam.theta) allowed.insert(th.name);
        for (const auto& b : attach_builtin_names()) allowed.insert(b);
        check_closed_over(fam.pose_expr, allowed, where);
        check_closed_over(fam.width_expr, allowed, where);
    }

    for (const auto& rule : c.force_rules) {
        const std::string where = c.identity.id + ": force " + rule.name;
        if (rule.synopsis.empty()) throw InvalidConcept(where + ": empty synopsis");
        std::set<std::string> allowed = structural;
        for (const auto& b : attach_builtin_names()) allowed.insert(b);
        for (const auto& b : grasp_builtin_names()) allowed.insert(b);
        check_closed_over(rule.dir_expr, allowed, where);
        if (rule.mode == ForceMode::TangentialAboutAxis) {
            check_closed_over(rule.axis_point_expr, allowed, where + " axis_point");
            check_closed_over(rule.axis_dir_expr, allowed, where + " axis_dir");
        }
    }
}

namespace {

bool params_equal(const std::vector<ParamSpec>& a, const std::vector<ParamSpec>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name || a[i].range.lo != b[i].range.lo ||
            a[i].range.hi != b[i].range.hi || a[i].range.fixed != b[i].range.fixed ||
            a[i].default_value != b[i].default_value)
            return false;
    }
    return true;
}

}  // namespace

bool concept_equal(const AnalyticConcept& a, const AnalyticConcept& b) {
    if (a.identity.id != b.identity.id || a.identity.synopsis != b.identity.synopsis ||
        a.identity.group != b.identity.group)
        return false;
    if (a.symmetry.kind != b.symmetry.kind || a.symmetry.axis != b.symmetry.axis ||
        a.symmetry.order != b.symmetry.order)
        return false;
    if (!params_equal(a.structure.params, b.structure.params)) return false;
    if (a.structure.primitives.size() != b.structure.primitives.size()) return false;
    for (std::size_t i = 0; i < a.structure.primitives.size(); ++i) {
        const auto& pa = a.structure.primitives[i];
        const auto& pb = b.structure.primitives[i];
        if (pa.kind != pb.kind || pa.label != pb.label) return false;
        if (pa.size.size() != pb.size.size()) return false;
        for (std::size_t k = 0; k < pa.size.size(); ++k)
            if (!dsl::expr_equal(pa.size[k], pb.size[k])) return false;
        if (!dsl::expr_equal(pa.local_pose, pb.local_pose)) return false;
    }
    if (!dsl::expr_equal(a.structure.attachment_frame, b.structure.attachment_frame)) return false;
    if (a.grasp_families.size() != b.grasp_families.size()) return false;
    for (std::size_t i = 0; i < a.grasp_families.size(); ++i) {
        const auto& fa = a.grasp_families[i];
        const auto& fb = b.grasp_families[i];
        if (fa.name != fb.name || fa.synopsis != fb.synopsis) return false;
        if (!params_equal(fa.theta, fb.theta)) return false;
        if (!dsl::expr_equal(fa.pose_expr, fb.pose_expr)) return false;
        if (!dsl::expr_equal(fa.width_expr, fb.width_expr)) return false;
    }
    if (a.force_rules.size() != b.force_rules.size()) return false;
    for (std::size_t i = 0; i < a.force_rules.size(); ++i) {
        const auto& ra = a.force_rules[i];
        const auto& rb = b.force_rules[i];
        if (ra.name != rb.name || ra.synopsis != rb.synopsis || ra.mode != rb.mode) return false;
        if (!dsl::expr_equal(ra.dir_expr, rb.dir_expr)) return false;
        if (!dsl::expr_equal(ra.axis_point_expr, rb.axis_point_expr)) return false;
        if (!dsl::expr_equal(ra.axis_dir_expr, rb.axis_dir_expr)) return false;
    }
    return true;
}

const AnalyticConcept& ConceptRegistry::get(const std::string& id) const {
    const auto it = concepts_.find(id);
    if (it == concepts_.end()) throw UnknownConcept(id);
    return it->second;
}

std::vector<std::pair<std::string, std::string>> ConceptRegistry::concepts_in_group(
    const std::string& group) const {
    const auto it = groups_.find(group);
    if (it == groups_.end()) throw UnknownGroup(group);
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(it->second.size());
    for (const auto& id : it->second) out.emplace_back(id, concepts_.at(id).identity.synopsis);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> ConceptRegistry::groups() const {
    std::vector<std::string> out;
    out.reserve(groups_.size());
    for (const auto& [g, _] : groups_) out.push_back(g);
    return out;
}

std::vector<std::string> ConceptRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(concepts_.size());
    for (const auto& [id, _] : concepts_) out.push_back(id);
    return out;
}

ConceptRegistry register_concept(const ConceptRegistry& registry, const AnalyticConcept& acon) {
    check_concept_wellformed(acon);
    if (registry.contains(acon.identity.id)) throw DuplicateId(acon.identity.id);
    ConceptRegistry next = registry;
    next.concepts_.emplace(acon.identity.id, acon);
    auto& ids = next.groups_[acon.identity.group];
    ids.push_back(acon.identity.id);
    std::sort(ids.begin(), ids.end());
    return next;
}

// --- instantiation ---

ParamBinding default_params(const std::vector<ParamSpec>& specs) {
    ParamBinding binding;
    for (const auto& p : specs) binding[p.name] = p.default_value;
    return binding;
}

void check_binding(const std::vector<ParamSpec>& specs, const ParamBinding& binding,
                   const std::string& what) {
    for (const auto& p : specs) {
        const auto it = binding.find(p.name);
        if (it == binding.end()) throw OutOfRangeParam(what + ": missing `" + p.name + "`");
        if (!p.range.contains(it->second))
            throw OutOfRangeParam(what + ": `" + p.name + "` = " + std::to_string(it->second) +
                                  " outside [" + std::to_string(p.range.lo) + ", " +
                                  std::to_string(p.range.hi) + "]");
    }
    if (binding.size() != specs.size())
        throw OutOfRangeParam(what + ": binding names do not match the declared parameters");
}

dsl::Env structural_env(const ParamBinding& binding) {
    dsl::Env env;
    for (const auto& [name, value] : binding) env[name] = value;
    return env;
}

void add_attach_env(dsl::Env& env, const RigidTransform& attach) {
    env["attach_pos"] = attach.t;
    env["attach_x"] = Eigen::Vector3d(attach.R.col(0));
    env["attach_y"] = Eigen::Vector3d(attach.R.col(1));
    env["attach_z"] = Eigen::Vector3d(attach.R.col(2));
}

void add_grasp_env(dsl::Env& env, const RigidTransform& grasp_pose_canonical, double width) {
    env["grasp_pos"] = grasp_pose_canonical.t;
    env["grasp_x"] = Eigen::Vector3d(grasp_pose_canonical.R.col(0));
    env["grasp_y"] = Eigen::Vector3d(grasp_pose_canonical.R.col(1));
    env["grasp_z"] = Eigen::Vector3d(grasp_pose_canonical.R.col(2));
    env["grasp_width"] = width;
}

PrimitiveAssembly instantiate_structure(const StructuralTemplate& tmpl,
                                        const ParamBinding& params) {
    check_binding(tmpl.params, params, "structural parameters");
    const dsl::Env env = structural_env(params);
    PrimitiveAssembly assembly;
    assembly.reserve(tmpl.primitives.size());
    for (const auto& spec : tmpl.primitives) {
        Primitive prim;
        prim.kind = spec.kind;
        prim.size.reserve(spec.size.size());
        for (const auto& s : spec.size) prim.size.push_back(dsl::eval_scalar(s, env));
        prim.local_pose = dsl::eval_pose(spec.local_pose, env);
        assembly.push_back(std::move(prim));
    }
    return assembly;
}

RigidTransform attachment_frame_pose(const StructuralTemplate& tmpl, const ParamBinding& params) {
    check_binding(tmpl.params, params, "structural parameters");
    return dsl::eval_pose(tmpl.attachment_frame, structural_env(params));
}

// --- builtin library ---

namespace {

const char* const kBuiltinSources[][2] = {
#include "builtin_concepts.inc"
};

}  // namespace

const std::vector<std::pair<std::string, std::string>>& builtin_concept_sources() {
    static const std::vector<std::pair<std::string, std::string>> sources = [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& entry : kBuiltinSources) out.emplace_back(entry[0], entry[1]);
        return out;
    }();
    return sources;
}

const ConceptRegistry& builtin_registry() {
    static const ConceptRegistry registry = [] {
        ConceptRegistry reg;
        for (const auto& [name, text] : builtin_concept_sources())
            reg = register_concept(reg, dsl::parse_concept(text, name + ".acon"));
        return reg;
    }();
    return registry;
}

}  // namespace acg
