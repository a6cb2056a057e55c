#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace wiresim {

using Vec3 = Eigen::Vector3d;

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rotation axis undefined: tangents (anti)parallel beyond recovery.
struct DegenerateTransportError : SimError {
    using SimError::SimError;
};

// Adjacent edges folded back onto each other; curvature binormal blows up.
struct KinkError : SimError {
    using SimError::SimError;
};

struct DivergedError : SimError {
    DivergedError(const std::string& what, long step)
        : SimError(what), step(step) {}
    long step;
};

struct ConstraintError : SimError {
    ConstraintError(const std::string& what, double worst_residual)
        : SimError(what), worst_residual(worst_residual) {}
    double worst_residual;
};

struct NotSettledError : SimError {
    using SimError::SimError;
};

struct ConfigError : SimError {
    using SimError::SimError;
};

inline double signed_angle(const Vec3& a, const Vec3& b, const Vec3& axis) {
    return std::atan2(a.cross(b).dot(axis), a.dot(b));
}

}  // namespace wiresim
