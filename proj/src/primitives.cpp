#include "acg/primitives.hpp"

#include <cmath>

#include "acg/errors.hpp"

namespace acg {

std::string to_string(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::Cylinder: return "cylinder";
        case PrimitiveKind::Cuboid: return "cuboid";
        case PrimitiveKind::Sphere: return "sphere";
    }
    return "?";
}

PrimitiveKind primitive_kind_from_string(const std::string& s) {
    if (s == "cylinder") return PrimitiveKind::Cylinder;
    if (s == "cuboid") return PrimitiveKind::Cuboid;
    if (s == "sphere") return PrimitiveKind::Sphere;
    throw Error("unknown primitive kind: " + s);
}

std::size_t size_arity(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::Cylinder: return 2;
        case PrimitiveKind::Cuboid: return 3;
        case PrimitiveKind::Sphere: return 1;
    }
    return 0;
}

double Primitive::surface_area() const {
    switch (kind) {
        case PrimitiveKind::Cylinder: {
            const double r = size[0], h = size[1];
            return 2.0 * M_PI * r * h + 2.0 * M_PI * r * r;  // lateral + both caps
        }
        case PrimitiveKind::Cuboid: {
            const double a = size[0], b = size[1], c = size[2];
            return 2.0 * (a * b + b * c + c * a);
        }
        case PrimitiveKind::Sphere: {
            const double r = size[0];
            return 4.0 * M_PI * r * r;
        }
    }
    return 0.0;
}

double Primitive::sdf(const Eigen::Vector3d& p_assembly) const {
    const Eigen::Vector3d p = local_pose.inverse().apply(p_assembly);
    switch (kind) {
        case PrimitiveKind::Sphere:
            return p.norm() - size[0];
        case PrimitiveKind::Cuboid: {
            const Eigen::Vector3d half(size[0] / 2, size[1] / 2, size[2] / 2);
            const Eigen::Vector3d q = p.cwiseAbs() - half;
            const Eigen::Vector3d qp = q.cwiseMax(0.0);
            const double outside = qp.norm();
            const double inside = std::min(q.maxCoeff(), 0.0);
            return outside + inside;
        }
        case PrimitiveKind::Cylinder: {
            const double r = size[0], h = size[1];
            const double dr = std::hypot(p.x(), p.y()) - r;
            const double dz = std::abs(p.z()) - h / 2;
            const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
            const double inside = std::min(std::max(dr, dz), 0.0);
            return outside + inside;
        }
    }
    return 0.0;
}

void Primitive::sample(Rng& rng, Eigen::Vector3d& point, Eigen::Vector3d& normal) const {
    Eigen::Vector3d p, n;
    switch (kind) {
        case PrimitiveKind::Sphere: {
            const double r = size[0];
            Eigen::Vector3d g(rng.gaussian(), rng.gaussian(), rng.gaussian());
            while (g.norm() < 1e-12) g = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
            n = g.normalized();
            p = r * n;
            break;
        }
        case PrimitiveKind::Cuboid: {
            const double a = size[0], b = size[1], c = size[2];
            // pick a face proportional to its area, then sample it uniformly
            const double areas[3] = {b * c, a * c, a * b};  // x, y, z face pairs
            const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
            double pick = rng.uniform() * total;
            int axis = 0;
            for (; axis < 2; ++axis) {
                if (pick < 2.0 * areas[axis]) break;
                pick -= 2.0 * areas[axis];
            }
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const Eigen::Vector3d half(a / 2, b / 2, c / 2);
            p = {rng.uniform(-half.x(), half.x()), rng.uniform(-half.y(), half.y()),
                 rng.uniform(-half.z(), half.z())};
            p[axis] = sign * half[axis];
            n = Eigen::Vector3d::Zero();
            n[axis] = sign;
            break;
        }
        case PrimitiveKind::Cylinder: {
            const double r = size[0], h = size[1];
            const double lateral = 2.0 * M_PI * r * h;
            const double cap = M_PI * r * r;
            const double pick = rng.uniform() * (lateral + 2.0 * cap);
            if (pick < lateral) {
                const double phi = rng.uniform(0.0, 2.0 * M_PI);
                n = {std::cos(phi), std::sin(phi), 0.0};
                p = {r * n.x(), r * n.y(), rng.uniform(-h / 2, h / 2)};
            } else {
                const double sign = pick < lateral + cap ? 1.0 : -1.0;
                const double rho = r * std::sqrt(rng.uniform());
                const double phi = rng.uniform(0.0, 2.0 * M_PI);
                p = {rho * std::cos(phi), rho * std::sin(phi), sign * h / 2};
                n = {0.0, 0.0, sign};
            }
            break;
        }
        default:
            throw Error("unreachable primitive kind");
    }
    point = local_pose.apply(p);
    normal = local_pose.R * n;
}

PointCloud sample_surface(const PrimitiveAssembly& assembly, int n, std::uint64_t seed) {
    if (assembly.empty()) throw Error("sample_surface on empty assembly");
    if (n < 1) throw Error("sample_surface requires n >= 1");

    std::vector<double> cumulative;
    cumulative.reserve(assembly.size());
    double total = 0.0;
    for (const auto& prim : assembly) {
        total += prim.surface_area();
        cumulative.push_back(total);
    }
    if (total <= 0.0) throw Error("assembly has zero surface area");

    Rng rng(seed);
    PointCloud cloud;
    cloud.points.resize(n);
    cloud.normals.resize(n);
    for (int i = 0; i < n; ++i) {
        const double pick = rng.uniform() * total;
        std::size_t which = 0;
        while (which + 1 < cumulative.size() && pick >= cumulative[which]) ++which;
        assembly[which].sample(rng, cloud.points[i], cloud.normals[i]);
    }
    return cloud;
}

double assembly_sdf(const PrimitiveAssembly& assembly, const Eigen::Vector3d& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& prim : assembly) best = std::min(best, prim.sdf(p));
    return best;
}

Aabb assembly_bbox(const PrimitiveAssembly& assembly, int probe_samples) {
    Aabb box;
    Rng rng(12345);
    for (const auto& prim : assembly) {
        Eigen::Vector3d p, n;
        for (int i = 0; i < probe_samples; ++i) {
            prim.sample(rng, p, n);
            box.expand(p);
        }
    }
    return box;
}

}  // namespace acg
