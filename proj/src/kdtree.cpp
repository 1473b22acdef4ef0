#include "acg/kdtree.hpp"

#include <algorithm>
#include <cmath>

#include "acg/errors.hpp"
#include "acg/rng.hpp"

namespace acg {

namespace {
constexpr std::uint32_t kLeafSize = 12;
}

KdTree::KdTree(const std::vector<Eigen::Vector3d>& points) : points_(points) {
    if (points_.empty()) throw Error("kd-tree over empty point set");
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / kLeafSize + 8);
    root_ = build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) box.expand(points_[order_[i]]);
    int axis = 0;
    box.extent().maxCoeff(&axis);

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         return points_[a][axis] < points_[b][axis];
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];

    const std::int32_t self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

void KdTree::search(std::int32_t idx, const Eigen::Vector3d& q, Nearest& best) const {
    const Node& node = nodes_[idx];
    if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const double d2 = (points_[order_[i]] - q).squaredNorm();
            if (d2 < best.distance) {
                best.distance = d2;
                best.index = order_[i];
            }
        }
        return;
    }
    const double delta = q[node.axis] - node.split;
    const std::int32_t near = delta < 0 ? node.left : node.right;
    const std::int32_t far = delta < 0 ? node.right : node.left;
    search(near, q, best);
    if (delta * delta < best.distance) search(far, q, best);
}

KdTree::Nearest KdTree::nearest(const Eigen::Vector3d& query) const {
    Nearest best;
    best.distance = std::numeric_limits<double>::infinity();
    search(root_, query, best);
    best.distance = std::sqrt(best.distance);
    return best;
}

double chamfer_to_indexed(const PointCloud& p, const KdTree& q_tree,
                          const std::vector<Eigen::Vector3d>& q_points) {
    if (p.empty() || q_points.empty()) throw Error("chamfer of empty cloud");
    double p_to_q = 0.0;
    for (const auto& x : p.points) p_to_q += q_tree.nearest(x).distance;
    p_to_q /= static_cast<double>(p.size());

    KdTree p_tree(p.points);
    double q_to_p = 0.0;
    for (const auto& x : q_points) q_to_p += p_tree.nearest(x).distance;
    q_to_p /= static_cast<double>(q_points.size());
    return p_to_q + q_to_p;
}

double chamfer(const PointCloud& p, const PointCloud& q) {
    if (p.empty() || q.empty()) throw Error("chamfer of empty cloud");
    KdTree q_tree(q.points);
    return chamfer_to_indexed(p, q_tree, q.points);
}

PointCloud farthest_point_downsample(const PointCloud& cloud, std::size_t target) {
    if (cloud.size() <= target || target == 0) return cloud;
    std::vector<std::size_t> chosen;
    chosen.reserve(target);
    std::vector<double> dist(cloud.size(), std::numeric_limits<double>::infinity());

    // start from the point farthest from the centroid so the result is
    // a pure function of the geometry
    const Eigen::Vector3d c = cloud.centroid();
    std::size_t cur = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double d = (cloud.points[i] - c).squaredNorm();
        if (d > best) {
            best = d;
            cur = i;
        }
    }
    chosen.push_back(cur);
    while (chosen.size() < target) {
        double far_d = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const double d = (cloud.points[i] - cloud.points[cur]).squaredNorm();
            if (d < dist[i]) dist[i] = d;
            if (dist[i] > far_d) {
                far_d = dist[i];
                far_i = i;
            }
        }
        cur = far_i;
        chosen.push_back(cur);
    }

    PointCloud out;
    out.points.reserve(target);
    const bool with_normals = cloud.has_normals();
    for (std::size_t i : chosen) {
        out.points.push_back(cloud.points[i]);
        if (with_normals) out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

PointCloud random_downsample(const PointCloud& cloud, std::size_t target, std::uint64_t seed) {
    if (cloud.size() <= target || target == 0) return cloud;
    std::vector<std::size_t> idx(cloud.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(target);
    std::sort(idx.begin(), idx.end());

    PointCloud out;
    out.points.reserve(target);
    const bool with_normals = cloud.has_normals();
    for (std::size_t i : idx) {
        out.points.push_back(cloud.points[i]);
        if (with_normals) out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

}  // namespace acg
