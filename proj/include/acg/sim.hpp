#pragma once

#include <functional>
#include <optional>

#include "acg/grasp.hpp"

namespace acg::sim {

enum class JointKind { Revolute, Prismatic };

struct Joint {
    std::string id;
    JointKind kind = JointKind::Revolute;
    Eigen::Vector3d axis_point = Eigen::Vector3d::Zero();  // parent-link frame
    Eigen::Vector3d axis_dir = Eigen::Vector3d::UnitZ();   // unit, parent-link frame
    double lo = 0.0;
    double hi = 0.0;     // radians or meters
    double state = 0.0;  // in [lo, hi]
    std::string parent;
    std::string child;

    double range() const { return hi - lo; }
};

struct Link {
    std::string id;
    PrimitiveAssembly shapes;            // link frame
    PointCloud cloud;                    // dense surface samples, link frame
    std::vector<std::uint8_t> part_mask; // 1 where the point belongs to the actionable part
    std::uint64_t cloud_seed = 0;
    int part_first_shape = -1;           // index of the first actionable-part primitive
};

/// Ground-truth record for the actionable part of a synthesized object.
struct PartAnnotation {
    std::string link_id;
    std::string concept_id;
    std::string group;
    ParamBinding params;
    RigidTransform pose_in_link;  // canonical -> link frame
    std::string grasp_family;     // scripted oracle choices
    std::string force_rule;
    std::string task;
    std::string target_joint;
};

struct ArticulatedObject {
    std::string archetype;
    std::uint64_t seed = 0;
    std::vector<Link> links;
    std::vector<Joint> joints;
    std::string base_link;
    RigidTransform base_pose;
    PartAnnotation annotation;

    const Link& link(const std::string& id) const;
    const Joint& joint(const std::string& id) const;
    Joint& joint(const std::string& id);

    /// Forward kinematics for the current joint states.
    RigidTransform link_world_pose(const std::string& id) const;

    /// Canonical -> world pose of the annotated part at the current state.
    RigidTransform oracle_pose() const;
    Grounding oracle_grounding() const;

    /// World-frame samples of the actionable part only.
    PointCloud part_cloud_world() const;

    Aabb bbox_world() const;

    /// True when `link_id` is the joint's child or below it.
    bool moves_with(const std::string& joint_id, const std::string& link_id) const;
};

/// Synthesizes one randomized object of the archetype. Known archetypes:
/// cabinet_door, drawer, pot_lid, faucet, laptop. `overrides` pins selected
/// dimensions by name.
ArticulatedObject synth_object(const std::string& archetype,
                               const std::map<std::string, double>& overrides,
                               std::uint64_t seed);

std::vector<std::string> known_archetypes();

struct RenderedView {
    PointCloud cloud;                    // world frame, with normals
    std::vector<int> link_index;         // per point
    std::vector<std::uint8_t> part_mask; // per point
};

/// Single-camera view: upper-hemisphere camera at (azimuth, elevation)
/// degrees, backface culling plus a coarse ortho z-buffer for occlusion.
/// Returns exactly n_points points; deterministic for a fixed seed.
RenderedView render_view_tagged(const ArticulatedObject& object, double azimuth_deg,
                                double elevation_deg, int n_points, std::uint64_t seed);
PointCloud render_view(const ArticulatedObject& object, double azimuth_deg,
                       double elevation_deg, int n_points, std::uint64_t seed);

/// Joint-state randomization: every joint has a 50% chance of sitting at
/// its closed limit and 50% of a uniform position inside the range.
ArticulatedObject joint_state_init(ArticulatedObject object, std::uint64_t seed);

enum class FailureReason { Collision, Slip, NoMotion, WrongPart };
std::string to_string(FailureReason r);

struct RolloutConfig {
    double step_size = 0.002;            // meters of end-effector motion per step
    int max_steps = 400;
    double grasp_slip_tolerance = 0.02;  // meters
    int budget = 5;
    double absolute_threshold = 0.01;    // success: displacement above this, or
    double relative_threshold = 0.5;     // fraction of the motion range above this
    GripperSpec gripper;
    int min_attach_points = 5;
    int collision_points = 3;
};

struct InteractionOutcome {
    std::string joint_id;
    double displacement = 0.0;           // joint units
    double relative_displacement = 0.0;  // clamped to [0, 1]
    bool success = false;
    int steps_used = 0;
    std::optional<FailureReason> failure_reason;
};

/// Kinematic grasp-and-push execution against one joint; see the module
/// notes in the README for the slip model.
InteractionOutcome rollout(const ArticulatedObject& object, const std::string& target_joint,
                           const GraspPose& grasp, const ForceDirection& force,
                           const RolloutConfig& cfg);

/// Success metric: displacement > absolute threshold, or relative
/// displacement > relative threshold.
bool success(const InteractionOutcome& outcome, const RolloutConfig& cfg = {});

struct Proposal {
    GraspPose grasp;
    ForceDirection force;
};

struct BudgetResult {
    InteractionOutcome outcome;
    int attempts = 0;
};

/// Executes up to cfg.budget proposals on fresh object copies; returns the
/// first success, else the last outcome.
BudgetResult run_with_budget(const std::function<std::optional<Proposal>(int)>& proposals,
                             const ArticulatedObject& object, const std::string& target_joint,
                             const RolloutConfig& cfg);

std::string object_to_json(const ArticulatedObject& object);
ArticulatedObject object_from_json(const std::string& text);
std::string outcome_to_json(const InteractionOutcome& outcome);

}  // namespace acg::sim
