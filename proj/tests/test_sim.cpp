#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "acg/sim.hpp"
#include "test_support.hpp"

using namespace acg;
using namespace acg::sim;

namespace {

Proposal oracle_proposal(const ArticulatedObject& object) {
    const AnalyticConcept& acon = builtin_registry().get(object.annotation.concept_id);
    const Grounding gt = object.oracle_grounding();
    const GraspFamily& family = *acon.find_family(object.annotation.grasp_family);
    Proposal p;
    p.grasp = instantiate_grasp(acon, family, gt, default_params(family.theta));
    p.force = force_direction(acon, *acon.find_rule(object.annotation.force_rule), gt, p.grasp);
    return p;
}

}  // namespace

TEST_CASE("synth archetypes have the documented joints") {
    const ArticulatedObject drawer = synth_object("drawer", {}, 1);
    REQUIRE(drawer.joints.size() == 1);
    CHECK(drawer.joints[0].kind == JointKind::Prismatic);
    CHECK(drawer.joints[0].lo == 0.0);
    // slide limit is 80% of the sampled depth
    CHECK(drawer.joints[0].hi > 0.0);
    CHECK(drawer.joints[0].hi <= 0.8 * 0.4 + 1e-9);
    CHECK(drawer.annotation.concept_id == "U_Handle");

    const ArticulatedObject cabinet = synth_object("cabinet_door", {}, 2);
    REQUIRE(cabinet.joints.size() == 1);
    CHECK(cabinet.joints[0].kind == JointKind::Revolute);
    CHECK(cabinet.joints[0].lo == 0.0);
    CHECK(cabinet.joints[0].hi == doctest::Approx(M_PI / 2));
    // vertical hinge
    CHECK(std::abs(cabinet.joints[0].axis_dir.dot(Eigen::Vector3d::UnitZ())) ==
          doctest::Approx(1.0));
    CHECK(cabinet.annotation.concept_id == "L_Handle");

    CHECK(synth_object("pot_lid", {}, 3).joints[0].kind == JointKind::Prismatic);
    CHECK(synth_object("faucet", {}, 4).joints[0].kind == JointKind::Revolute);
    CHECK(synth_object("laptop", {}, 5).joints[0].kind == JointKind::Revolute);
    CHECK_THROWS_AS(synth_object("spaceship", {}, 6), UnknownArchetype);
}

TEST_CASE("synth is deterministic per seed and honors overrides") {
    const std::string a = object_to_json(synth_object("faucet", {}, 42));
    const std::string b = object_to_json(synth_object("faucet", {}, 42));
    CHECK(a == b);
    const std::string c = object_to_json(synth_object("faucet", {}, 43));
    CHECK(a != c);

    const ArticulatedObject forced = synth_object("drawer", {{"front_w", 0.4}}, 7);
    CHECK(forced.links[1].shapes[0].size[1] == doctest::Approx(0.4));
    CHECK_THROWS_AS(synth_object("drawer", {{"front_w", 9.0}}, 7), Error);
}

TEST_CASE("object json round trip preserves geometry and clouds") {
    const ArticulatedObject object = synth_object("laptop", {}, 11);
    const std::string json = object_to_json(object);
    const ArticulatedObject back = object_from_json(json);
    CHECK(object_to_json(back) == json);
    REQUIRE(back.links.size() == object.links.size());
    for (std::size_t i = 0; i < object.links.size(); ++i) {
        REQUIRE(back.links[i].cloud.size() == object.links[i].cloud.size());
        for (std::size_t k = 0; k < object.links[i].cloud.size(); ++k)
            CHECK((back.links[i].cloud.points[k] - object.links[i].cloud.points[k]).norm() ==
                  0.0);
    }
}

TEST_CASE("forward kinematics matches the closed form for one joint") {
    ArticulatedObject object = synth_object("cabinet_door", {}, 13);
    Joint& joint = object.joints[0];
    Rng rng(5);
    for (int i = 0; i < 25; ++i) {
        const double state = rng.uniform(joint.lo, joint.hi);
        joint.state = state;
        const RigidTransform fk = object.link_world_pose(joint.child);
        const RigidTransform expected =
            RigidTransform::about_axis(joint.axis_point, joint.axis_dir, state);
        CHECK((fk.R - expected.R).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((fk.t - expected.t).norm() < 1e-12);
        CHECK(joint.state >= joint.lo);
        CHECK(joint.state <= joint.hi);
    }
}

TEST_CASE("render_view enforces the camera ranges and the point count") {
    const ArticulatedObject object = synth_object("drawer", {}, 17);
    CHECK_THROWS_AS(render_view(object, 10, 90, 512, 1), Error);
    CHECK_THROWS_AS(render_view(object, 10, 20, 512, 1), Error);
    CHECK_THROWS_AS(render_view(object, 360, 45, 512, 1), Error);

    for (int n : {100, 4096, 9000}) {
        const PointCloud view = render_view(object, 123, 45, n, 2);
        CHECK(static_cast<int>(view.size()) == n);
    }

    // determinism
    const PointCloud a = render_view(object, 200, 50, 2048, 9);
    const PointCloud b = render_view(object, 200, 50, 2048, 9);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK((a.points[i] - b.points[i]).norm() == 0.0);
}

TEST_CASE("opposite azimuths see mostly disjoint surfaces") {
    const ArticulatedObject object = synth_object("cabinet_door", {}, 19);
    const PointCloud front = render_view(object, 0, 40, 4096, 3);
    const PointCloud back = render_view(object, 180, 40, 4096, 3);

    const auto voxelize = [](const PointCloud& cloud) {
        std::set<std::tuple<int, int, int>> cells;
        for (const auto& p : cloud.points)
            cells.insert({static_cast<int>(std::floor(p.x() / 0.05)),
                          static_cast<int>(std::floor(p.y() / 0.05)),
                          static_cast<int>(std::floor(p.z() / 0.05))});
        return cells;
    };
    const auto va = voxelize(front);
    const auto vb = voxelize(back);
    std::size_t inter = 0;
    for (const auto& c : va) inter += vb.count(c);
    const std::size_t uni = va.size() + vb.size() - inter;
    CHECK(static_cast<double>(inter) / uni < 0.5);
}

TEST_CASE("joint_state_init statistics match the protocol") {
    int closed = 0;
    std::vector<double> open_states;
    const ArticulatedObject base = synth_object("cabinet_door", {}, 23);
    const double lo = base.joints[0].lo, hi = base.joints[0].hi;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        const ArticulatedObject obj = joint_state_init(base, split_seed(400, i));
        const double s = obj.joints[0].state;
        CHECK(s >= lo);
        CHECK(s <= hi);
        if (s == lo) ++closed;
        else open_states.push_back((s - lo) / (hi - lo));
    }
    // closed fraction within 3 sigma of one half
    const double sigma = std::sqrt(0.25 * n);
    CHECK(std::abs(closed - n / 2.0) < 3 * sigma);

    // open states uniform: KS test at alpha = 0.01
    std::sort(open_states.begin(), open_states.end());
    double dks = 0.0;
    const int m = static_cast<int>(open_states.size());
    for (int i = 0; i < m; ++i) {
        dks = std::max(dks, std::abs(open_states[i] - static_cast<double>(i) / m));
        dks = std::max(dks, std::abs(static_cast<double>(i + 1) / m - open_states[i]));
    }
    CHECK(dks < 1.63 / std::sqrt(static_cast<double>(m)));

    // determinism
    const ArticulatedObject s1 = joint_state_init(base, 77);
    const ArticulatedObject s2 = joint_state_init(base, 77);
    CHECK(s1.joints[0].state == s2.joints[0].state);
}

TEST_CASE("success metric threshold cases are exact") {
    RolloutConfig cfg;
    InteractionOutcome o;
    o.joint_id = "j";

    o.displacement = 0.02;
    o.relative_displacement = 0.02 / 1.0;
    CHECK(success(o, cfg));  // absolute branch

    o.displacement = 0.005;
    o.relative_displacement = 0.005 / 0.008;
    CHECK(success(o, cfg));  // relative branch: 0.625 > 0.5

    o.displacement = 0.004;
    o.relative_displacement = 0.004 / 1.0;
    CHECK(!success(o, cfg));  // both branches fail
}

TEST_CASE("oracle rollout opens a closed cabinet door") {
    ArticulatedObject object = synth_object("cabinet_door", {}, 29);
    object.joints[0].state = 0.0;
    const Proposal p = oracle_proposal(object);
    const InteractionOutcome out = rollout(object, "door_hinge", p.grasp, p.force, {});
    CHECK(out.success);
    CHECK(out.displacement > 0.5 * object.joints[0].range());
    CHECK(out.steps_used > 0);
}

TEST_CASE("force parallel to the admissible axis produces no motion") {
    ArticulatedObject object = synth_object("cabinet_door", {}, 31);
    object.joints[0].state = 0.3;
    Proposal p = oracle_proposal(object);
    p.force.mode = ForceMode::Linear;
    p.force.dir = Eigen::Vector3d(0, 0, 1);  // along the hinge axis
    p.force.axis.reset();
    const InteractionOutcome out = rollout(object, "door_hinge", p.grasp, p.force, {});
    CHECK(!out.success);
    CHECK(out.displacement < 1e-9);
    REQUIRE(out.failure_reason.has_value());
    CHECK(*out.failure_reason == FailureReason::NoMotion);
}

TEST_CASE("grasping the wrong link fails as wrong-part") {
    ArticulatedObject object = synth_object("cabinet_door", {}, 37);
    Proposal p = oracle_proposal(object);
    // aim the same grasp at the static carcass instead
    const Aabb carcass = [&] {
        Aabb box;
        const auto& link = object.link("carcass");
        const RigidTransform T = object.link_world_pose("carcass");
        for (const auto& q : link.cloud.points) box.expand(T.apply(q));
        return box;
    }();
    p.grasp.pose.t = carcass.center() + Eigen::Vector3d(0, 0, carcass.extent().z() / 2);
    const InteractionOutcome out = rollout(object, "door_hinge", p.grasp, p.force, {});
    CHECK(!out.success);
    REQUIRE(out.failure_reason.has_value());
    CHECK((*out.failure_reason == FailureReason::WrongPart ||
           *out.failure_reason == FailureReason::Collision));
}

TEST_CASE("a grasp through solid geometry fails as collision") {
    ArticulatedObject object = synth_object("drawer", {}, 41);
    Proposal p = oracle_proposal(object);
    // bury the gripper inside the drawer front: fingers intersect the panel
    p.grasp.pose.t -= Eigen::Vector3d(0.05, 0, 0);
    const InteractionOutcome out = rollout(object, "drawer_slide", p.grasp, p.force, {});
    CHECK(!out.success);
    REQUIRE(out.failure_reason.has_value());
    CHECK((*out.failure_reason == FailureReason::Collision ||
           *out.failure_reason == FailureReason::WrongPart));
}

TEST_CASE("rollout rejects grasps far outside the workspace") {
    ArticulatedObject object = synth_object("pot_lid", {}, 43);
    Proposal p = oracle_proposal(object);
    p.grasp.pose.t += Eigen::Vector3d(50, 0, 0);
    CHECK_THROWS_AS(rollout(object, "lid_lift", p.grasp, p.force, {}), InvalidGrasp);
}

TEST_CASE("joint state never exits its limits during rollout") {
    ArticulatedObject object = synth_object("faucet", {}, 47);
    object.joints[0].state = 0.0;
    const Proposal p = oracle_proposal(object);
    RolloutConfig cfg;
    cfg.max_steps = 2000;  // drive far past the limit
    const InteractionOutcome out = rollout(object, "spindle", p.grasp, p.force, cfg);
    CHECK(out.displacement <= object.joints[0].range() + 1e-12);
    CHECK(out.success);
}

TEST_CASE("rollout determinism") {
    ArticulatedObject object = joint_state_init(synth_object("laptop", {}, 53), 7);
    const Proposal p = oracle_proposal(object);
    const InteractionOutcome a = rollout(object, "screen_hinge", p.grasp, p.force, {});
    const InteractionOutcome b = rollout(object, "screen_hinge", p.grasp, p.force, {});
    CHECK(a.displacement == b.displacement);
    CHECK(a.steps_used == b.steps_used);
    CHECK(a.success == b.success);
}

TEST_CASE("run_with_budget counts attempts and stops at the first success") {
    ArticulatedObject object = synth_object("drawer", {}, 59);
    object.joints[0].state = 0.0;
    const Proposal good = oracle_proposal(object);
    Proposal bad = good;
    bad.force.dir = Eigen::Vector3d(0, 0, 1);  // lifting a drawer goes nowhere
    bad.force.mode = ForceMode::Linear;
    bad.force.axis.reset();

    RolloutConfig cfg;

    const auto first_good = [&](int i) -> std::optional<Proposal> {
        return i == 0 ? std::optional<Proposal>(good) : std::nullopt;
    };
    const BudgetResult r1 = run_with_budget(first_good, object, "drawer_slide", cfg);
    CHECK(r1.outcome.success);
    CHECK(r1.attempts == 1);

    const auto third_good = [&](int i) -> std::optional<Proposal> {
        if (i >= cfg.budget) return std::nullopt;
        return i == 2 ? good : bad;
    };
    const BudgetResult r3 = run_with_budget(third_good, object, "drawer_slide", cfg);
    CHECK(r3.outcome.success);
    CHECK(r3.attempts == 3);

    const auto always_bad = [&](int i) -> std::optional<Proposal> {
        if (i >= cfg.budget) return std::nullopt;
        return bad;
    };
    const BudgetResult rb = run_with_budget(always_bad, object, "drawer_slide", cfg);
    CHECK(!rb.outcome.success);
    CHECK(rb.attempts == 5);
}

TEST_CASE("oracle chain clears 0.9 success per archetype (reduced trial count)") {
    for (const auto& archetype : known_archetypes()) {
        int wins = 0;
        const int trials = 40;
        for (int t = 0; t < trials; ++t) {
            const std::uint64_t seed = split_seed(6000, t);
            ArticulatedObject object =
                joint_state_init(synth_object(archetype, {}, seed), split_seed(seed, 2));
            const Proposal p = oracle_proposal(object);
            const BudgetResult r = run_with_budget(
                [&](int i) -> std::optional<Proposal> {
                    return i == 0 ? std::optional<Proposal>(p) : std::nullopt;
                },
                object, object.annotation.target_joint, {});
            if (r.outcome.success) ++wins;
        }
        CHECK_MESSAGE(wins >= 0.9 * trials, archetype, ": ", wins, "/", trials);
    }
}

TEST_CASE("outcome json carries the failure reason") {
    InteractionOutcome o;
    o.joint_id = "j";
    o.displacement = 0.001;
    o.relative_displacement = 0.01;
    o.success = false;
    o.steps_used = 12;
    o.failure_reason = FailureReason::Slip;
    const std::string j = outcome_to_json(o);
    CHECK(j.find("\"slip\"") != std::string::npos);
    CHECK(j.find("\"steps_used\": 12") != std::string::npos);
}
