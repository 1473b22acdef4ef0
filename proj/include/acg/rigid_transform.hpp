#pragma once

#include <Eigen/Dense>

#include "acg/rng.hpp"

namespace acg {

/// Proper rigid transform in SE(3): x -> R*x + t. Units are meters.
struct RigidTransform {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    static RigidTransform identity() { return {}; }

    static RigidTransform translation(const Eigen::Vector3d& t) {
        RigidTransform T;
        T.t = t;
        return T;
    }

    static RigidTransform rotation(const Eigen::Matrix3d& R) {
        RigidTransform T;
        T.R = R;
        return T;
    }

    /// Rotation by `angle` about the unit axis `dir` through the point `point`.
    static RigidTransform about_axis(const Eigen::Vector3d& point, const Eigen::Vector3d& dir,
                                     double angle) {
        RigidTransform T;
        T.R = Eigen::AngleAxisd(angle, dir.normalized()).toRotationMatrix();
        T.t = point - T.R * point;
        return T;
    }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }

    RigidTransform inverse() const {
        RigidTransform inv;
        inv.R = R.transpose();
        inv.t = -(inv.R * t);
        return inv;
    }

    bool is_valid(double tol = 1e-9) const {
        const Eigen::Matrix3d err = R.transpose() * R - Eigen::Matrix3d::Identity();
        return err.cwiseAbs().maxCoeff() < tol && std::abs(R.determinant() - 1.0) < tol &&
               t.allFinite();
    }
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform c;
    c.R = a.R * b.R;
    c.t = a.R * b.t + a.t;
    return c;
}

inline RigidTransform invert(const RigidTransform& T) { return T.inverse(); }

inline Eigen::Vector3d apply(const RigidTransform& T, const Eigen::Vector3d& p) {
    return T.apply(p);
}

inline RigidTransform rot_x(double a) {
    return RigidTransform::rotation(Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix());
}
inline RigidTransform rot_y(double a) {
    return RigidTransform::rotation(Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix());
}
inline RigidTransform rot_z(double a) {
    return RigidTransform::rotation(Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix());
}

/// Geodesic angle between two rotations, in radians.
inline double rotation_angle_between(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb) {
    const double c = ((Ra.transpose() * Rb).trace() - 1.0) * 0.5;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Uniformly distributed random rotation (quaternion from gaussians).
inline Eigen::Matrix3d random_rotation(Rng& rng) {
    Eigen::Quaterniond q(rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian());
    if (q.norm() < 1e-12) q = Eigen::Quaterniond::Identity();
    q.normalize();
    return q.toRotationMatrix();
}

inline RigidTransform random_transform(Rng& rng, double translation_scale = 1.0) {
    RigidTransform T;
    T.R = random_rotation(rng);
    T.t = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)) *
          translation_scale;
    return T;
}

}  // namespace acg
