#pragma once

#include <string>
#include <vector>

#include "acg/point_cloud.hpp"
#include "acg/rng.hpp"

namespace acg {

enum class PrimitiveKind { Cylinder, Cuboid, Sphere };

std::string to_string(PrimitiveKind kind);
PrimitiveKind primitive_kind_from_string(const std::string& s);

/// Expected dimension of the size vector for a primitive kind:
/// Cylinder [radius, height], Cuboid [x, y, z extents], Sphere [radius].
std::size_t size_arity(PrimitiveKind kind);

/// A concrete geometric primitive: a structural template evaluated at one
/// parameter binding. Sizes in meters; local_pose places the primitive's
/// own frame (cylinder axis +Z, cuboid axis-aligned, both centered) in the
/// assembly frame.
struct Primitive {
    PrimitiveKind kind;
    std::vector<double> size;
    RigidTransform local_pose;

    double surface_area() const;

    /// Signed distance from point `p` (assembly frame) to the surface.
    double sdf(const Eigen::Vector3d& p) const;

    /// One surface sample with outward unit normal, assembly frame.
    void sample(Rng& rng, Eigen::Vector3d& point, Eigen::Vector3d& normal) const;
};

using PrimitiveAssembly = std::vector<Primitive>;

/// Area-weighted surface sampling of the whole assembly; the result has
/// normals and is deterministic for a fixed seed.
PointCloud sample_surface(const PrimitiveAssembly& assembly, int n, std::uint64_t seed);

/// min over primitives of the per-primitive signed distance.
double assembly_sdf(const PrimitiveAssembly& assembly, const Eigen::Vector3d& p);

Aabb assembly_bbox(const PrimitiveAssembly& assembly, int probe_samples = 512);

}  // namespace acg
