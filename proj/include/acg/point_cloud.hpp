#pragma once

#include <vector>

#include "acg/rigid_transform.hpp"

namespace acg {

struct Aabb {
    Eigen::Vector3d min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d max = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());

    void expand(const Eigen::Vector3d& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    Eigen::Vector3d center() const { return 0.5 * (min + max); }
    Eigen::Vector3d extent() const { return max - min; }
    double diagonal() const { return (max - min).norm(); }
};

/// Point set in meters with optional per-point unit normals
/// (normals empty, or one per point).
struct PointCloud {
    std::vector<Eigen::Vector3d> points;
    std::vector<Eigen::Vector3d> normals;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    Aabb bbox() const {
        Aabb box;
        for (const auto& p : points) box.expand(p);
        return box;
    }

    Eigen::Vector3d centroid() const {
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (const auto& p : points) c += p;
        return points.empty() ? c : Eigen::Vector3d(c / static_cast<double>(points.size()));
    }

    void append(const PointCloud& other) {
        points.insert(points.end(), other.points.begin(), other.points.end());
        normals.insert(normals.end(), other.normals.begin(), other.normals.end());
    }
};

inline PointCloud apply(const RigidTransform& T, const PointCloud& cloud) {
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) out.points.push_back(T.apply(p));
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals) out.normals.push_back(T.R * n);
    return out;
}

}  // namespace acg
