#pragma once

#include <map>
#include <string>
#include <variant>

#include "acg/dsl/ast.hpp"
#include "acg/rigid_transform.hpp"

namespace acg::dsl {

/// Runtime value of an expression: scalar, 3-vector, or rigid pose.
class Value {
public:
    Value() : v_(0.0) {}
    Value(double s) : v_(s) {}
    Value(const Eigen::Vector3d& v) : v_(v) {}
    Value(const RigidTransform& p) : v_(p) {}

    Type type() const {
        switch (v_.index()) {
            case 0: return Type::Scalar;
            case 1: return Type::Vec3;
            default: return Type::Pose;
        }
    }

    double scalar() const { return std::get<double>(v_); }
    const Eigen::Vector3d& vec() const { return std::get<Eigen::Vector3d>(v_); }
    const RigidTransform& pose() const { return std::get<RigidTransform>(v_); }

private:
    std::variant<double, Eigen::Vector3d, RigidTransform> v_;
};

/// Name -> value bindings for evaluation.
using Env = std::map<std::string, Value>;

}  // namespace acg::dsl
