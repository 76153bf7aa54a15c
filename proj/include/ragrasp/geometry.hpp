#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "ragrasp/errors.hpp"

namespace ragrasp {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform in SE(3). Rotation kept as a unit quaternion and
/// renormalized after every composition so norm drift stays below 1e-9
/// over long chains.
struct Pose {
    Quat rotation{1.0, 0.0, 0.0, 0.0};
    Vec3 translation{0.0, 0.0, 0.0};

    static Pose identity() { return Pose{}; }

    static Pose from_matrix(const Mat3& r, const Vec3& t) {
        Pose p;
        p.rotation = Quat(r).normalized();
        p.translation = t;
        return p;
    }

    Mat3 matrix() const { return rotation.toRotationMatrix(); }

    /// Local frame axes expressed in the parent frame.
    Vec3 x_axis() const { return rotation * Vec3::UnitX(); }
    Vec3 y_axis() const { return rotation * Vec3::UnitY(); }
    Vec3 z_axis() const { return rotation * Vec3::UnitZ(); }
};

inline Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = (a.rotation * b.rotation).normalized();
    out.translation = a.translation + a.rotation * b.translation;
    return out;
}

inline Pose inverse(const Pose& a) {
    Pose out;
    out.rotation = a.rotation.conjugate().normalized();
    out.translation = -(out.rotation * a.translation);
    return out;
}

inline Vec3 apply(const Pose& a, const Vec3& p) {
    return a.rotation * p + a.translation;
}

/// Angle of the relative rotation between a and b, in [0, pi].
inline double rotation_angle_between(const Pose& a, const Pose& b) {
    const Quat d = a.rotation.conjugate() * b.rotation;
    const double w = std::min(1.0, std::abs(d.w()) / d.norm());
    return 2.0 * std::acos(w);
}

/// Unit vector pointing into the table halfspace (z <= 0): the direction the
/// gripper travels when approaching from the top hemisphere.
class ApproachDirection {
public:
    explicit ApproachDirection(const Vec3& dir) : d_(dir) {
        const double n = d_.norm();
        if (!(n > 0.0) || !d_.allFinite())
            throw ParameterError("approach direction must be a nonzero finite vector");
        d_ /= n;
        if (d_.z() > 1e-9)
            throw ParameterError("approach direction must point downward (z <= 0)");
        if (d_.z() > 0.0) d_.z() = 0.0;
    }

    static ApproachDirection straight_down() { return ApproachDirection(Vec3(0, 0, -1)); }

    const Vec3& vec() const { return d_; }

    /// Angle from straight-down, in [0, pi/2].
    double tilt() const {
        return std::acos(std::clamp(-d_.z(), -1.0, 1.0));
    }

private:
    Vec3 d_;
};

/// Grasp frame from (point, approach, wrist angle).
///
/// Convention: local +z is the approach direction. The reference x-axis at
/// wrist = 0 is the projection of world +x onto the plane orthogonal to the
/// approach; when the approach is within 1e-6 of +-world x the projection
/// degenerates and world +y is used instead. The wrist angle then rotates
/// the frame about its own z-axis.
inline Pose pose_from_grasp(const Vec3& point, const ApproachDirection& approach,
                            double wrist) {
    if (!std::isfinite(wrist)) throw ParameterError("wrist angle must be finite");
    const Vec3 z = approach.vec();

    Vec3 ref = Vec3::UnitX();
    if (std::abs(std::abs(z.dot(ref)) - 1.0) < 1e-6) ref = Vec3::UnitY();
    Vec3 x0 = ref - z.dot(ref) * z;
    x0.normalize();
    const Vec3 y0 = z.cross(x0);

    const double c = std::cos(wrist), s = std::sin(wrist);
    const Vec3 x = c * x0 + s * y0;
    const Vec3 y = z.cross(x);

    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;

    Pose p = Pose::from_matrix(r, point);
    return p;
}

/// Wrist angle of a grasp frame relative to the deterministic reference
/// x-axis used by pose_from_grasp. Returns a value in [0, 2*pi).
inline double extract_wrist_angle(const Pose& grasp) {
    const Vec3 z = grasp.z_axis();
    Vec3 ref = Vec3::UnitX();
    if (std::abs(std::abs(z.dot(ref)) - 1.0) < 1e-6) ref = Vec3::UnitY();
    Vec3 x0 = ref - z.dot(ref) * z;
    x0.normalize();
    const Vec3 y0 = z.cross(x0);
    const Vec3 x = grasp.x_axis();
    double a = std::atan2(y0.dot(x), x0.dot(x));
    if (a < 0) a += 2.0 * M_PI;
    return a;
}

}  // namespace ragrasp
