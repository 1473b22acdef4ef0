#pragma once

#include <cstdint>
#include <vector>

#include "acg/concept.hpp"
#include "acg/kdtree.hpp"
#include "acg/point_cloud.hpp"

namespace acg {

/// A concept bound to an observed part cloud: concrete structural
/// parameters plus the canonical-to-world pose and the fit residual.
struct Grounding {
    std::string concept_id;
    ParamBinding params;
    RigidTransform pose;            // canonical -> world
    double residual = 0.0;          // symmetric chamfer, meters
    double inlier_fraction = 0.0;   // fraction of cloud points near the fitted model
};

struct RansacConfig {
    int iterations = 256;
    double inlier_threshold = 0.005;  // meters
    int min_inliers = 3;
    std::uint64_t seed = 0;
};

struct FitConfig {
    int restarts = 2;
    int max_evals = 380;          // coordinate-descent evaluations per restart
    int downsample_to = 700;      // cloud points used during fitting
    double convergence_tol = 5e-5;
    std::uint64_t seed = 0;
    int template_samples = 700;   // template surface samples per evaluation
    int max_rounds = 3;           // pose/param alternation rounds
    int icp_iterations = 6;
    int refine_hypotheses = 4;    // pose hypotheses kept after screening
};

struct GroundConfig {
    FitConfig fit;
    RansacConfig ransac;
};

/// Least-squares rigid alignment of index-paired clouds (rotation +
/// translation, unit scale): minimizes sum ||T*src_i - dst_i||^2.
/// Throws DegenerateConfiguration for < 3 pairs or (near-)collinear sets.
RigidTransform umeyama(const std::vector<Eigen::Vector3d>& src,
                       const std::vector<Eigen::Vector3d>& dst);

struct RansacResult {
    RigidTransform transform;
    std::vector<std::uint8_t> inlier_mask;
    double inlier_fraction = 0.0;
};

/// RANSAC over index-paired correspondences, minimal sample 3; the best
/// consensus set (count, then inlier rms) is refit with umeyama.
RansacResult ransac_align(const std::vector<Eigen::Vector3d>& src,
                          const std::vector<Eigen::Vector3d>& dst, const RansacConfig& cfg);

/// P* = pose^-1 applied to P.
PointCloud canonicalize(const PointCloud& cloud, const Grounding& grounding);

/// Chamfer-minimizing structural parameters for a cloud already expressed
/// in the concept's canonical space. Multi-restart coordinate descent with
/// a golden-section line search per parameter.
ParamBinding fit_structural_params(const AnalyticConcept& acon, const PointCloud& canonical,
                                   const FitConfig& cfg);

/// Full grounding: principal-axes pose hypotheses, then alternating
/// pose (ICP + ransac_align) and parameter refinement. Deterministic for a
/// fixed seed. Throws FitDiverged when the residual stays above 10% of the
/// cloud bounding-box diagonal.
Grounding ground(const AnalyticConcept& acon, const PointCloud& cloud,
                 const GroundConfig& cfg);

/// ground() with the structural parameters held fixed (pose is still
/// estimated); used by the benchmark's stage-replacement modes.
Grounding ground_with_params(const AnalyticConcept& acon, const PointCloud& cloud,
                             const GroundConfig& cfg, const ParamBinding& locked_params);

/// Rotation error between two canonical->world poses, minimized over the
/// concept's declared symmetry group.
double rotation_error_mod_symmetry(const Symmetry& sym, const Eigen::Matrix3d& reference,
                                   const Eigen::Matrix3d& estimate);

std::string grounding_to_json(const Grounding& grounding);
Grounding grounding_from_json(const std::string& text);

}  // namespace acg
