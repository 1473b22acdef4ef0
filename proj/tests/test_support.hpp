#pragma once

#include <cmath>

#include "acg/concept.hpp"
#include "acg/grounding.hpp"
#include "acg/rng.hpp"

namespace acg::testing {

inline PointCloud random_cloud(Rng& rng, std::size_t n, double scale = 1.0) {
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.emplace_back(rng.uniform(-scale, scale), rng.uniform(-scale, scale),
                                  rng.uniform(-scale, scale));
    return cloud;
}

inline ParamBinding random_params(const std::vector<ParamSpec>& specs, Rng& rng,
                                  double margin = 0.1) {
    ParamBinding b;
    for (const auto& p : specs) {
        if (p.range.fixed) {
            b[p.name] = p.range.lo;
            continue;
        }
        const double pad = margin * p.range.width();
        b[p.name] = rng.uniform(p.range.lo + pad, p.range.hi - pad);
    }
    return b;
}

/// Cloud synthesized from a concept at known params and pose, plus optional
/// gaussian noise.
inline PointCloud synthesize_cloud(const AnalyticConcept& acon, const ParamBinding& params,
                                   const RigidTransform& pose, int n, std::uint64_t seed,
                                   double noise_sigma = 0.0) {
    PointCloud canonical = sample_surface(instantiate_structure(acon.structure, params), n, seed);
    if (noise_sigma > 0.0) {
        Rng rng(split_seed(seed, 99));
        for (auto& p : canonical.points)
            p += Eigen::Vector3d(rng.gaussian(0, noise_sigma), rng.gaussian(0, noise_sigma),
                                 rng.gaussian(0, noise_sigma));
    }
    return apply(pose, canonical);
}

inline double max_relative_param_error(const ParamBinding& estimate, const ParamBinding& truth) {
    double worst = 0.0;
    for (const auto& [name, value] : estimate) {
        const double ref = truth.at(name);
        worst = std::max(worst, std::abs(value - ref) / std::max(std::abs(ref), 1e-9));
    }
    return worst;
}

}  // namespace acg::testing
