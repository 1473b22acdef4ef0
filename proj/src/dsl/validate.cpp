#include "acg/dsl/validate.hpp"

#include "acg/dsl/eval.hpp"
#include "acg/rng.hpp"

namespace acg::dsl {

namespace {

ParamBinding sample_binding(const std::vector<ParamSpec>& specs, Rng& rng) {
    ParamBinding b;
    for (const auto& p : specs)
        b[p.name] = p.range.fixed ? p.range.lo : rng.uniform(p.range.lo, p.range.hi);
    return b;
}

bool pose_ok(const RigidTransform& T) {
    const Eigen::Matrix3d err = T.R.transpose() * T.R - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() < 1e-9 && T.R.determinant() > 0.0 && T.t.allFinite();
}

}  // namespace

ValidationReport validate_concept(const AnalyticConcept& acon, int n_samples,
                                  std::uint64_t seed) {
    if (n_samples < 1) throw Error("validate_concept requires n_samples >= 1");
    ValidationReport report;
    report.concept_id = acon.identity.id;
    report.samples = n_samples;
    Rng rng(seed);

    const auto add = [&](const std::string& where, const std::string& msg,
                         const ParamBinding& binding) {
        report.violations.push_back({where, msg, binding});
    };

    for (int s = 0; s < n_samples; ++s) {
        const ParamBinding params = sample_binding(acon.structure.params, rng);
        Env env = structural_env(params);

        RigidTransform attach;
        bool attach_valid = true;
        try {
            attach = eval_pose(acon.structure.attachment_frame, env);
            if (!pose_ok(attach)) {
                add("attach", "attachment frame is not a proper rigid pose", params);
                attach_valid = false;
            }
        } catch (const Error& e) {
            add("attach", e.what(), params);
            attach_valid = false;
        }

        for (const auto& prim : acon.structure.primitives) {
            const std::string where = "primitive " + prim.label;
            try {
                for (const auto& size_expr : prim.size) {
                    const double v = eval_scalar(size_expr, env);
                    if (!(v > 0.0)) {
                        add(where, "non-positive size " + std::to_string(v), params);
                        break;
                    }
                }
                const RigidTransform pose = eval_pose(prim.local_pose, env);
                if (!pose_ok(pose)) add(where, "local pose is not a proper rigid pose", params);
            } catch (const Error& e) {
                add(where, e.what(), params);
            }
        }

        if (!attach_valid) continue;

        for (const auto& fam : acon.grasp_families) {
            const std::string where = "grasp " + fam.name;
            const ParamBinding theta = sample_binding(fam.theta, rng);
            Env genv = env;
            for (const auto& [name, value] : theta) genv[name] = value;
            add_attach_env(genv, attach);

            ParamBinding all = params;
            for (const auto& [name, value] : theta) all[name] = value;

            RigidTransform grasp_pose;
            bool grasp_valid = true;
            try {
                grasp_pose = eval_pose(fam.pose_expr, genv);
                if (!pose_ok(grasp_pose)) {
                    add(where, "grasp pose is not a proper rigid pose", all);
                    grasp_valid = false;
                }
                const double width = eval_scalar(fam.width_expr, genv);
                if (!(width > 0.0)) add(where, "non-positive width " + std::to_string(width), all);
            } catch (const Error& e) {
                add(where, e.what(), all);
                grasp_valid = false;
            }
            if (!grasp_valid) continue;

            double width = 0.0;
            try {
                width = eval_scalar(fam.width_expr, genv);
            } catch (const Error&) {
                width = 0.0;
            }

            for (const auto& rule : acon.force_rules) {
                const std::string rwhere = "force " + rule.name + " (with " + fam.name + ")";
                Env fenv = env;
                add_attach_env(fenv, attach);
                add_grasp_env(fenv, grasp_pose, width);
                try {
                    const Eigen::Vector3d dir = eval_vec3(rule.dir_expr, fenv);
                    if (dir.norm() < 1e-9) add(rwhere, "force direction has zero norm", all);
                    if (rule.mode == ForceMode::TangentialAboutAxis) {
                        const Eigen::Vector3d axis_dir = eval_vec3(rule.axis_dir_expr, fenv);
                        if (axis_dir.norm() < 1e-9) add(rwhere, "axis direction has zero norm", all);
                        eval_vec3(rule.axis_point_expr, fenv);
                    }
                } catch (const Error& e) {
                    add(rwhere, e.what(), all);
                }
            }
        }
    }
    return report;
}

}  // namespace acg::dsl
