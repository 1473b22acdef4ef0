#pragma once

#include <optional>

#include "acg/grounding.hpp"

namespace acg {

/// Parallel-jaw gripper. Frame convention used everywhere: +Z is the
/// approach direction, +X the closing line, the origin sits between the
/// fingertips.
struct GripperSpec {
    double max_width = 0.08;
    double finger_length = 0.045;
    double finger_thickness = 0.015;
    double palm_depth = 0.04;
};

struct GraspPose {
    RigidTransform pose;  // world frame
    double width = 0.0;   // opening width, meters
};

struct GraspCandidate {
    ParamBinding theta;
    GraspPose grasp;
    double score = 0.0;
};

/// Frozen scoring constants (see assets/grasp_score.json for the shipped
/// version of record).
struct ScoreWeights {
    double coverage = 4.0;
    double antipodal = 2.0;
    double penetration = 6.0;
    double emptiness = 8.0;
    double bias = -2.0;
    double coverage_points = 30.0;    // closing-region points for full coverage
    double penetration_points = 10.0; // penetration count scale

    static ScoreWeights load(const std::string& path);
};

struct ForceDirection {
    Eigen::Vector3d dir = Eigen::Vector3d::UnitZ();  // unit, world frame
    ForceMode mode = ForceMode::Linear;
    std::optional<std::pair<Eigen::Vector3d, Eigen::Vector3d>> axis;  // (point, unit dir)
};

/// Evaluates a grasp family at (grounding params, theta) in canonical space
/// and maps the result through grounding.pose into the world.
GraspPose instantiate_grasp(const AnalyticConcept& acon, const GraspFamily& family,
                            const Grounding& grounding, const ParamBinding& theta);

/// k stratified-uniform theta bindings (centered Latin hypercube); k = 1
/// degenerates to the range midpoint. Deterministic for a fixed seed.
std::vector<ParamBinding> sample_candidates(const GraspFamily& family, int k,
                                            std::uint64_t seed);

/// Geometric grasp quality in (0,1): logistic blend of closing-region
/// coverage, normal opposition along the closing line, finger/palm
/// penetration and an empty-region penalty.
double score_grasp(const GraspPose& grasp, const PointCloud& cloud, const GripperSpec& gripper,
                   const ScoreWeights& weights = {});

/// All k candidates, scored, sorted by descending score (ties by sample
/// index).
std::vector<GraspCandidate> rank_candidates(const AnalyticConcept& acon,
                                            const GraspFamily& family,
                                            const Grounding& grounding, const PointCloud& cloud,
                                            const GripperSpec& gripper, int k,
                                            std::uint64_t seed,
                                            const ScoreWeights& weights = {});

/// Best-scoring candidate; throws AllCandidatesRejected when the best score
/// falls below the acceptance floor (0.05).
GraspCandidate select_grasp(const AnalyticConcept& acon, const GraspFamily& family,
                            const Grounding& grounding, const PointCloud& cloud,
                            const GripperSpec& gripper, int k, std::uint64_t seed,
                            const ScoreWeights& weights = {});

/// Evaluates a force rule at the grounded parameters and a chosen grasp;
/// the returned direction (and tangential axis, when present) is in the
/// world frame.
ForceDirection force_direction(const AnalyticConcept& acon, const ForceRule& rule,
                               const Grounding& grounding, const GraspPose& grasp);

constexpr double kScoreFloor = 0.05;

/// Closing-region / swept-volume membership tests shared with the
/// simulator's attachment checks (world-frame point).
bool in_closing_region(const GraspPose& grasp, const GripperSpec& gripper,
                       const Eigen::Vector3d& point);
bool in_finger_or_palm(const GraspPose& grasp, const GripperSpec& gripper,
                       const Eigen::Vector3d& point);

std::string grasp_to_json(const GraspCandidate& candidate, const std::string& family_name);
std::string force_to_json(const ForceDirection& force);

}  // namespace acg
