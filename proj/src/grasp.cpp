#include "acg/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "acg/dsl/eval.hpp"
#include "acg/rng.hpp"

namespace acg {

ScoreWeights ScoreWeights::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score weights: " + path);
    nlohmann::json j;
    in >> j;
    ScoreWeights w;
    w.coverage = j.at("coverage").get<double>();
    w.antipodal = j.at("antipodal").get<double>();
    w.penetration = j.at("penetration").get<double>();
    w.emptiness = j.at("emptiness").get<double>();
    w.bias = j.at("bias").get<double>();
    w.coverage_points = j.at("coverage_points").get<double>();
    w.penetration_points = j.at("penetration_points").get<double>();
    return w;
}

GraspPose instantiate_grasp(const AnalyticConcept& acon, const GraspFamily& family,
                            const Grounding& grounding, const ParamBinding& theta) {
    if (grounding.concept_id != acon.identity.id)
        throw Error("instantiate_grasp: grounding belongs to " + grounding.concept_id);
    check_binding(acon.structure.params, grounding.params, "structural parameters");
    try {
        check_binding(family.theta, theta, "theta");
    } catch (const OutOfRangeParam& e) {
        throw OutOfRangeTheta(e.what());
    }

    dsl::Env env = structural_env(grounding.params);
    for (const auto& [name, value] : theta) env[name] = value;
    add_attach_env(env, attachment_frame_pose(acon.structure, grounding.params));

    GraspPose grasp;
    const RigidTransform canonical = dsl::eval_pose(family.pose_expr, env);
    grasp.width = dsl::eval_scalar(family.width_expr, env);
    if (!(grasp.width > 0.0)) throw DomainError("grasp width must be positive");
    grasp.pose = compose(grounding.pose, canonical);
    return grasp;
}

std::vector<ParamBinding> sample_candidates(const GraspFamily& family, int k,
                                            std::uint64_t seed) {
    if (k < 1) throw Error("sample_candidates requires k >= 1");
    Rng rng(seed);

    // centered Latin hypercube: per dimension a permutation of the k strata
    // midpoints, so k = 1 yields exactly the range midpoint
    std::vector<std::vector<double>> columns;
    columns.reserve(family.theta.size());
    for (const auto& spec : family.theta) {
        std::vector<double> col(k);
        for (int i = 0; i < k; ++i)
            col[i] = spec.range.fixed
                         ? spec.range.lo
                         : spec.range.lo + (i + 0.5) / k * spec.range.width();
        rng.shuffle(col);
        columns.push_back(std::move(col));
    }

    std::vector<ParamBinding> out(k);
    for (int i = 0; i < k; ++i) {
        ParamBinding b;
        for (std::size_t d = 0; d < family.theta.size(); ++d)
            b[family.theta[d].name] = columns[d][i];
        out[i] = std::move(b);
    }
    return out;
}

namespace {

struct GripperBoxes {
    // all in the gripper frame
    double half_width;
    double half_breadth;
    double finger_length;
    double finger_thickness;
    double palm_depth;

    bool in_closing(const Eigen::Vector3d& q) const {
        return std::abs(q.x()) <= half_width && std::abs(q.y()) <= half_breadth &&
               q.z() >= -finger_length && q.z() <= 0.0;
    }
    bool in_finger(const Eigen::Vector3d& q) const {
        const double ax = std::abs(q.x());
        return ax > half_width && ax <= half_width + finger_thickness &&
               std::abs(q.y()) <= half_breadth && q.z() >= -finger_length && q.z() <= 0.0;
    }
    bool in_palm(const Eigen::Vector3d& q) const {
        return std::abs(q.x()) <= half_width + finger_thickness &&
               std::abs(q.y()) <= 2.0 * half_breadth && q.z() >= -finger_length - palm_depth &&
               q.z() < -finger_length;
    }
};

GripperBoxes boxes_for(const GraspPose& grasp, const GripperSpec& gripper) {
    return {grasp.width / 2.0, gripper.finger_thickness / 2.0, gripper.finger_length,
            gripper.finger_thickness, gripper.palm_depth};
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-std::clamp(x, -30.0, 30.0))); }

}  // namespace

bool in_closing_region(const GraspPose& grasp, const GripperSpec& gripper,
                       const Eigen::Vector3d& point) {
    return boxes_for(grasp, gripper).in_closing(grasp.pose.inverse().apply(point));
}

bool in_finger_or_palm(const GraspPose& grasp, const GripperSpec& gripper,
                       const Eigen::Vector3d& point) {
    const GripperBoxes boxes = boxes_for(grasp, gripper);
    const Eigen::Vector3d q = grasp.pose.inverse().apply(point);
    return boxes.in_finger(q) || boxes.in_palm(q);
}

double score_grasp(const GraspPose& grasp, const PointCloud& cloud, const GripperSpec& gripper,
                   const ScoreWeights& w) {
    if (cloud.empty()) throw Error("score_grasp: empty cloud");
    if (!(grasp.width > 0.0) || grasp.width > gripper.max_width) return logistic(-20.0);

    const GripperBoxes boxes = boxes_for(grasp, gripper);
    const RigidTransform inv = grasp.pose.inverse();
    const Eigen::Vector3d closing_world = grasp.pose.R.col(0);

    int n_close = 0;
    int n_pen = 0;
    double align_sum = 0.0;
    int align_n = 0;
    const bool with_normals = cloud.has_normals();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector3d q = inv.apply(cloud.points[i]);
        if (boxes.in_closing(q)) {
            ++n_close;
            if (with_normals) {
                align_sum += std::abs(cloud.normals[i].dot(closing_world));
                ++align_n;
            }
        } else if (boxes.in_finger(q) || boxes.in_palm(q)) {
            ++n_pen;
        }
    }

    const double coverage = std::min(1.0, n_close / w.coverage_points);
    // without normals the opposition term stays neutral
    const double antipodal = align_n > 0 ? align_sum / align_n : (n_close > 0 ? 0.5 : 0.0);
    const double penetration = n_pen / w.penetration_points;
    const double emptiness = n_close == 0 ? 1.0 : 0.0;

    const double pre = w.coverage * coverage + w.antipodal * antipodal -
                       w.penetration * penetration - w.emptiness * emptiness + w.bias;
    return logistic(pre);
}

std::vector<GraspCandidate> rank_candidates(const AnalyticConcept& acon,
                                            const GraspFamily& family,
                                            const Grounding& grounding, const PointCloud& cloud,
                                            const GripperSpec& gripper, int k,
                                            std::uint64_t seed, const ScoreWeights& weights) {
    const std::vector<ParamBinding> thetas = sample_candidates(family, k, seed);
    std::vector<GraspCandidate> candidates;
    candidates.reserve(thetas.size());
    for (const auto& theta : thetas) {
        GraspCandidate c;
        c.theta = theta;
        c.grasp = instantiate_grasp(acon, family, grounding, theta);
        c.score = score_grasp(c.grasp, cloud, gripper, weights);
        candidates.push_back(std::move(c));
    }
    // stable sort keeps sample order among equal scores
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const GraspCandidate& a, const GraspCandidate& b) {
                         return a.score > b.score;
                     });
    return candidates;
}

GraspCandidate select_grasp(const AnalyticConcept& acon, const GraspFamily& family,
                            const Grounding& grounding, const PointCloud& cloud,
                            const GripperSpec& gripper, int k, std::uint64_t seed,
                            const ScoreWeights& weights) {
    const auto ranked = rank_candidates(acon, family, grounding, cloud, gripper, k, seed,
                                        weights);
    if (ranked.empty() || ranked.front().score < kScoreFloor)
        throw AllCandidatesRejected(ranked.empty() ? 0.0 : ranked.front().score);
    return ranked.front();
}

ForceDirection force_direction(const AnalyticConcept& acon, const ForceRule& rule,
                               const Grounding& grounding, const GraspPose& grasp) {
    if (grounding.concept_id != acon.identity.id)
        throw Error("force_direction: grounding belongs to " + grounding.concept_id);
    if (!acon.find_rule(rule.name) || acon.find_rule(rule.name)->dir_expr != rule.dir_expr)
        throw Error("force_direction: rule `" + rule.name + "` does not belong to concept `" +
                    acon.identity.id + "`");

    dsl::Env env = structural_env(grounding.params);
    add_attach_env(env, attachment_frame_pose(acon.structure, grounding.params));
    const RigidTransform grasp_canonical = compose(grounding.pose.inverse(), grasp.pose);
    add_grasp_env(env, grasp_canonical, grasp.width);

    const Eigen::Vector3d dir_canonical = dsl::eval_vec3(rule.dir_expr, env);
    const double n = dir_canonical.norm();
    if (n < 1e-9) throw DomainError("force rule `" + rule.name + "` evaluates to zero direction");

    ForceDirection out;
    out.mode = rule.mode;
    out.dir = grounding.pose.R * (dir_canonical / n);
    if (rule.mode == ForceMode::TangentialAboutAxis) {
        const Eigen::Vector3d p_can = dsl::eval_vec3(rule.axis_point_expr, env);
        const Eigen::Vector3d d_can = dsl::eval_vec3(rule.axis_dir_expr, env);
        const double dn = d_can.norm();
        if (dn < 1e-9) throw DomainError("force rule `" + rule.name + "` has zero axis");
        out.axis = {grounding.pose.apply(p_can), grounding.pose.R * (d_can / dn)};
    }
    return out;
}

std::string grasp_to_json(const GraspCandidate& c, const std::string& family_name) {
    nlohmann::ordered_json j;
    j["family"] = family_name;
    nlohmann::ordered_json theta = nlohmann::ordered_json::object();
    for (const auto& [name, value] : c.theta) theta[name] = value;
    j["theta"] = theta;
    std::vector<double> r;
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) r.push_back(c.grasp.pose.R(row, col));
    j["pose"]["R"] = r;
    j["pose"]["t"] = {c.grasp.pose.t.x(), c.grasp.pose.t.y(), c.grasp.pose.t.z()};
    j["width"] = c.grasp.width;
    j["score"] = c.score;
    return j.dump(2);
}

std::string force_to_json(const ForceDirection& f) {
    nlohmann::ordered_json j;
    j["dir"] = {f.dir.x(), f.dir.y(), f.dir.z()};
    j["mode"] = f.mode == ForceMode::Linear ? "linear" : "tangential";
    if (f.axis) {
        j["axis"]["point"] = {f.axis->first.x(), f.axis->first.y(), f.axis->first.z()};
        j["axis"]["dir"] = {f.axis->second.x(), f.axis->second.y(), f.axis->second.z()};
    }
    return j.dump(2);
}

}  // namespace acg
