#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acg/dsl/parser.hpp"
#include "acg/grasp.hpp"
#include "test_support.hpp"

using namespace acg;

namespace {

Grounding identity_grounding(const AnalyticConcept& acon) {
    Grounding g;
    g.concept_id = acon.identity.id;
    g.params = default_params(acon.structure.params);
    g.pose = RigidTransform::identity();
    return g;
}

/// Thin horizontal bar along x, centered at the origin, sampled densely.
PointCloud bar_cloud(double length, double thickness, int n, std::uint64_t seed) {
    Primitive bar{PrimitiveKind::Cuboid, {length, thickness, thickness},
                  RigidTransform::identity()};
    return sample_surface({bar}, n, seed);
}

/// Ideal top grasp on that bar: approach -z, closing across y.
GraspPose ideal_bar_grasp(double thickness, double extra_width) {
    GraspPose grasp;
    grasp.pose.R.col(0) = Eigen::Vector3d(0, 1, 0);   // closing
    grasp.pose.R.col(1) = Eigen::Vector3d(1, 0, 0);
    grasp.pose.R.col(2) = Eigen::Vector3d(0, 0, -1);  // approach
    grasp.pose.t = {0, 0, -(thickness / 2 + 0.004)};  // fingertips past the bar
    grasp.width = thickness + extra_width;
    return grasp;
}

}  // namespace

TEST_CASE("instantiate_grasp matches the documented gripper frame") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const Grounding g = identity_grounding(l);
    const GraspFamily& above = *l.find_family("grasp_above");

    const GraspPose grasp = instantiate_grasp(l, above, g, default_params(above.theta));
    // approach straight down onto the horizontal bar
    CHECK((grasp.pose.R.col(2) - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
    // closing line perpendicular to the bar axis (+x)
    CHECK(std::abs(grasp.pose.R.col(0).dot(Eigen::Vector3d(1, 0, 0))) < 1e-12);
    CHECK(grasp.width == doctest::Approx(g.params.at("bar_thick") + 0.014));
}

TEST_CASE("instantiate_grasp is equivariant in the grounding pose") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    Grounding g = identity_grounding(l);
    const GraspFamily& above = *l.find_family("grasp_above");
    const ParamBinding theta = default_params(above.theta);

    const GraspPose base = instantiate_grasp(l, above, g, theta);
    g.pose = RigidTransform::translation({0, 0, 0.5});
    const GraspPose moved = instantiate_grasp(l, above, g, theta);
    CHECK((moved.pose.t - base.pose.t - Eigen::Vector3d(0, 0, 0.5)).norm() < 1e-12);
    CHECK((moved.pose.R - base.pose.R).norm() < 1e-12);
}

TEST_CASE("instantiate_grasp rejects out-of-range theta") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const Grounding g = identity_grounding(l);
    const GraspFamily& above = *l.find_family("grasp_above");
    ParamBinding theta = default_params(above.theta);
    theta["u"] = 7.0;
    CHECK_THROWS_AS(instantiate_grasp(l, above, g, theta), OutOfRangeTheta);
}

TEST_CASE("sample_candidates: midpoint degenerate case and determinism") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const GraspFamily& above = *l.find_family("grasp_above");

    const auto single = sample_candidates(above, 1, 42);
    REQUIRE(single.size() == 1);
    for (const auto& spec : above.theta)
        CHECK(single[0].at(spec.name) == doctest::Approx(spec.range.mid()));

    const auto a = sample_candidates(above, 33, 7);
    const auto b = sample_candidates(above, 33, 7);
    CHECK(a == b);
    const auto c = sample_candidates(above, 33, 8);
    CHECK(a != c);
}

TEST_CASE("sample_candidates is stratified-uniform (KS bound)") {
    // one-dimensional family built inline for a clean KS test
    const char* text = R"(
concept KS
group misc
synopsis "ks"
param r in [0.01, 0.1] default 0.05
primitive sphere s {
  size = (r)
  at = pose(vec(0, 0, 0))
}
grasp g {
  synopsis "g"
  param u in [0, 1] default 0.5
  pose = pose(vec(u, 0, 0))
  width = r
}
force f {
  synopsis "f"
  mode linear
  dir = vec(0, 0, 1)
}
)";
    const AnalyticConcept ks = dsl::parse_concept(text, "ks.acon");
    const int k = 100;
    const auto thetas = sample_candidates(ks.grasp_families[0], k, 5);
    std::vector<double> u;
    for (const auto& t : thetas) u.push_back(t.at("u"));
    std::sort(u.begin(), u.end());
    double dks = 0.0;
    for (int i = 0; i < k; ++i) {
        dks = std::max(dks, std::abs(u[i] - static_cast<double>(i) / k));
        dks = std::max(dks, std::abs(static_cast<double>(i + 1) / k - u[i]));
    }
    // Kolmogorov-Smirnov critical value at alpha = 0.01
    CHECK(dks < 1.63 / std::sqrt(static_cast<double>(k)));
}

TEST_CASE("score: empty closing region scores near zero") {
    const PointCloud cloud = bar_cloud(0.2, 0.02, 1500, 3);
    GraspPose grasp = ideal_bar_grasp(0.02, 0.005);
    grasp.pose.t += Eigen::Vector3d(0, 0.3, 0);  // far off the bar
    const double s = score_grasp(grasp, cloud, GripperSpec{});
    CHECK(s < 0.1);
    CHECK(s > 0.0);
}

TEST_CASE("score: centered perpendicular grasp on a thin bar is strong") {
    const PointCloud cloud = bar_cloud(0.2, 0.02, 1500, 3);
    const GraspPose grasp = ideal_bar_grasp(0.02, 0.005);
    const double s = score_grasp(grasp, cloud, GripperSpec{});
    CHECK(s > 0.7);
    CHECK(s < 1.0);
}

TEST_CASE("score: palm penetration strictly hurts") {
    const PointCloud cloud = bar_cloud(0.2, 0.02, 1500, 3);
    GripperSpec gripper;

    // grasp whose palm sits inside the bar: fingertips far past the object
    GraspPose deep = ideal_bar_grasp(0.02, 0.005);
    deep.pose.t.z() = -(gripper.finger_length + 0.005);  // palm region hits the bar
    GraspPose retracted = deep;
    retracted.pose.t.z() += gripper.palm_depth;  // backed off along -approach

    const double deep_score = score_grasp(deep, cloud, gripper);
    const double retracted_score = score_grasp(retracted, cloud, gripper);
    CHECK(deep_score < retracted_score);
}

TEST_CASE("score: adding penetrating points never raises the score") {
    PointCloud cloud = bar_cloud(0.2, 0.02, 900, 3);
    const GraspPose grasp = ideal_bar_grasp(0.02, 0.005);
    GripperSpec gripper;
    double prev = score_grasp(grasp, cloud, gripper);
    // drop points straight into the finger volume
    const Eigen::Vector3d finger_center =
        grasp.pose.apply({grasp.width / 2 + gripper.finger_thickness / 2, 0, -0.01});
    for (int i = 0; i < 30; ++i) {
        cloud.points.push_back(finger_center);
        cloud.normals.push_back(Eigen::Vector3d::UnitZ());
        const double s = score_grasp(grasp, cloud, gripper);
        CHECK(s <= prev + 1e-12);
        prev = s;
    }
    CHECK(prev < 0.1);
}

TEST_CASE("score stays in (0,1) and equivariant under rigid moves") {
    Rng rng(5);
    const PointCloud cloud = bar_cloud(0.18, 0.025, 1100, 9);
    const GraspPose grasp = ideal_bar_grasp(0.025, 0.006);
    GripperSpec gripper;
    const double base = score_grasp(grasp, cloud, gripper);
    CHECK(base > 0.0);
    CHECK(base < 1.0);
    for (int i = 0; i < 5; ++i) {
        const RigidTransform T = random_transform(rng);
        GraspPose moved = grasp;
        moved.pose = compose(T, grasp.pose);
        CHECK(score_grasp(moved, apply(T, cloud), gripper) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("select_grasp: k=1 returns the midpoint candidate") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const Grounding g = identity_grounding(l);
    const PointCloud cloud = testing::synthesize_cloud(
        l, g.params, RigidTransform::identity(), 1600, 21);
    const GraspFamily& above = *l.find_family("grasp_above");
    const GraspCandidate c =
        select_grasp(l, above, g, cloud, GripperSpec{}, 1, 11);
    for (const auto& spec : above.theta)
        CHECK(c.theta.at(spec.name) == doctest::Approx(spec.range.mid()));
}

TEST_CASE("select_grasp: winner on a synthetic scene is collision free") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const Grounding g = identity_grounding(l);
    const PointCloud cloud = testing::synthesize_cloud(
        l, g.params, RigidTransform::identity(), 1600, 22);
    GripperSpec gripper;
    const GraspCandidate c = select_grasp(l, *l.find_family("grasp_above"), g, cloud,
                                          gripper, 64, 12);
    CHECK(c.score >= kScoreFloor);
    int closing = 0, penetrating = 0;
    for (const auto& p : cloud.points) {
        if (in_closing_region(c.grasp, gripper, p)) ++closing;
        else if (in_finger_or_palm(c.grasp, gripper, p)) ++penetrating;
    }
    CHECK(closing > 0);
    CHECK(penetrating == 0);
}

TEST_CASE("select_grasp: displaced cloud rejects all candidates") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const Grounding g = identity_grounding(l);
    PointCloud cloud = testing::synthesize_cloud(
        l, g.params, RigidTransform::identity(), 900, 23);
    for (auto& p : cloud.points) p += Eigen::Vector3d(2.0, 0, 0);  // nowhere near any grasp
    CHECK_THROWS_AS(
        select_grasp(l, *l.find_family("grasp_above"), g, cloud, GripperSpec{}, 16, 13),
        AllCandidatesRejected);
}

TEST_CASE("select_grasp is deterministic for a fixed seed") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const Grounding g = identity_grounding(l);
    const PointCloud cloud = testing::synthesize_cloud(
        l, g.params, RigidTransform::identity(), 1200, 24);
    const GraspCandidate a =
        select_grasp(l, *l.find_family("grasp_above"), g, cloud, GripperSpec{}, 32, 14);
    const GraspCandidate b =
        select_grasp(l, *l.find_family("grasp_above"), g, cloud, GripperSpec{}, 32, 14);
    CHECK(a.theta == b.theta);
    CHECK(a.score == b.score);
}

TEST_CASE("force_direction: lift_up on a horizontal lid is world +z") {
    const AnalyticConcept& lid = builtin_registry().get("Knob_Lid");
    Grounding g = identity_grounding(lid);
    const GraspFamily& fam = *lid.find_family("grasp_knob");
    const GraspPose grasp = instantiate_grasp(lid, fam, g, default_params(fam.theta));
    const ForceDirection f = force_direction(lid, *lid.find_rule("lift_up"), g, grasp);
    CHECK(f.mode == ForceMode::Linear);
    CHECK((f.dir - Eigen::Vector3d(0, 0, 1)).norm() < 1e-6);
}

TEST_CASE("force_direction: push_clockwise tangent matches the analytic value") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    Grounding g = identity_grounding(l);
    // grasp placed at (0.1, 0, 0) relative to the hinge axis +z through origin
    GraspPose grasp;
    grasp.pose = RigidTransform::translation({0.1, 0, 0});
    grasp.width = 0.03;
    const ForceDirection f = force_direction(l, *l.find_rule("push_clockwise"), g, grasp);
    CHECK(f.mode == ForceMode::TangentialAboutAxis);
    CHECK((f.dir - Eigen::Vector3d(0, -1, 0)).norm() < 1e-9);
    REQUIRE(f.axis.has_value());
    CHECK((f.axis->second - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
    // tangential directions stay orthogonal to the axis
    CHECK(std::abs(f.dir.dot(f.axis->second)) < 1e-9);
}

TEST_CASE("force_direction: tangential rules are orthogonal to their axis") {
    Rng rng(6);
    for (const auto& id : builtin_registry().ids()) {
        const AnalyticConcept& acon = builtin_registry().get(id);
        Grounding g;
        g.concept_id = id;
        g.params = default_params(acon.structure.params);
        g.pose = random_transform(rng, 0.4);
        for (const auto& fam : acon.grasp_families) {
            const GraspPose grasp = instantiate_grasp(acon, fam, g, default_params(fam.theta));
            for (const auto& rule : acon.force_rules) {
                if (rule.mode != ForceMode::TangentialAboutAxis) continue;
                const ForceDirection f = force_direction(acon, rule, g, grasp);
                REQUIRE(f.axis.has_value());
                CHECK(std::abs(f.dir.dot(f.axis->second)) < 1e-9);
                CHECK(std::abs(f.dir.norm() - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("force_direction rejects rules from another concept") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    const AnalyticConcept& lid = builtin_registry().get("Knob_Lid");
    const Grounding g = identity_grounding(l);
    GraspPose grasp;
    grasp.pose = RigidTransform::translation({0.1, 0, 0});
    grasp.width = 0.03;
    CHECK_THROWS_AS(force_direction(l, *lid.find_rule("lift_up"), g, grasp), Error);
}

TEST_CASE("force and grasp selection equivariance") {
    const AnalyticConcept& l = builtin_registry().get("L_Handle");
    Grounding g = identity_grounding(l);
    const PointCloud cloud = testing::synthesize_cloud(
        l, g.params, RigidTransform::identity(), 1400, 25);
    GripperSpec gripper;
    const GraspCandidate base =
        select_grasp(l, *l.find_family("grasp_above"), g, cloud, gripper, 24, 15);
    const ForceDirection base_force =
        force_direction(l, *l.find_rule("push_clockwise"), g, base.grasp);

    Rng rng(7);
    const RigidTransform T = random_transform(rng);
    Grounding moved_g = g;
    moved_g.pose = compose(T, g.pose);
    const GraspCandidate moved =
        select_grasp(l, *l.find_family("grasp_above"), moved_g, apply(T, cloud), gripper, 24, 15);
    CHECK(moved.theta == base.theta);  // same argmax candidate
    CHECK((moved.grasp.pose.t - T.apply(base.grasp.pose.t)).norm() < 1e-9);

    const ForceDirection moved_force =
        force_direction(l, *l.find_rule("push_clockwise"), moved_g, moved.grasp);
    CHECK((moved_force.dir - T.R * base_force.dir).norm() < 1e-9);
}

TEST_CASE("score weights load from the shipped config") {
    const ScoreWeights w = ScoreWeights::load(std::string(ASSET_DIR) + "/grasp_score.json");
    CHECK(w.coverage == 4.0);
    CHECK(w.emptiness == 8.0);
    CHECK(w.penetration_points == 10.0);
}
