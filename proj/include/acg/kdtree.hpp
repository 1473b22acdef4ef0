#pragma once

#include <cstddef>
#include <vector>

#include "acg/point_cloud.hpp"

namespace acg {

/// Static 3-d kd-tree over a point set. Nearest-neighbor queries are exact.
class KdTree {
public:
    struct Nearest {
        std::size_t index = 0;
        double distance = 0.0;
    };

    explicit KdTree(const std::vector<Eigen::Vector3d>& points);

    Nearest nearest(const Eigen::Vector3d& query) const;

    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        int axis = -1;            // -1 marks a leaf
        double split = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t begin = 0;  // leaf range into order_
        std::uint32_t end = 0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Eigen::Vector3d& q, Nearest& best) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

/// Symmetric chamfer distance: mean nearest-neighbor distance from P to Q
/// plus mean nearest-neighbor distance from Q to P. Both clouds non-empty.
double chamfer(const PointCloud& p, const PointCloud& q);

/// Variant that reuses a prebuilt tree over q (q must match the tree source).
double chamfer_to_indexed(const PointCloud& p, const KdTree& q_tree,
                          const std::vector<Eigen::Vector3d>& q_points);

/// Farthest-point downsampling; keeps the input order-independent geometry
/// spread. Returns the cloud unchanged when it is already small enough.
PointCloud farthest_point_downsample(const PointCloud& cloud, std::size_t target);

/// Seeded uniform-random downsampling without replacement.
PointCloud random_downsample(const PointCloud& cloud, std::size_t target, std::uint64_t seed);

}  // namespace acg
