#pragma once

#include <cmath>
#include <vector>

#include "ragrasp/cloud.hpp"
#include "ragrasp/geometry.hpp"
#include "ragrasp/rng.hpp"

namespace ragrasp {

/// One sampled 6-DoF grasp candidate. grasp_point is always an element of
/// the cloud it was drawn from; tilt is the angle between the approach and
/// straight-down.
struct GraspCandidate {
    Pose pose;
    Vec3 grasp_point;
    size_t point_index = 0;
    double tilt = 0.0;   // radians
    double wrist = 0.0;  // radians in [0, 2*pi)
};

/// Uniform 6-DoF candidate generation: grasp points uniform over the cloud
/// (with replacement), approach directions uniform in solid angle over the
/// annular cap tilt in [gamma1, gamma2] of the downward hemisphere, wrist
/// uniform in [0, 2*pi). gamma1 == gamma2 gives the single-tilt cap, so
/// gamma1 = gamma2 = 0 yields pure top grasps. Deterministic per seed, with
/// one RNG substream per candidate.
inline std::vector<GraspCandidate> sample_grasps(const PointCloud& object_cloud,
                                                 size_t n, double gamma1_deg,
                                                 double gamma2_deg, uint64_t seed) {
    if (object_cloud.size() == 0)
        throw NoObjectError("cannot sample grasps from an empty object cloud");
    if (!(gamma1_deg >= 0.0) || !(gamma2_deg <= 90.0) || gamma1_deg > gamma2_deg)
        throw ParameterError("require 0 <= gamma1 <= gamma2 <= 90 degrees");

    const double g1 = gamma1_deg * M_PI / 180.0;
    const double g2 = gamma2_deg * M_PI / 180.0;
    const double cos_g1 = std::cos(g1);
    const double cos_g2 = std::cos(g2);

    std::vector<GraspCandidate> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Rng rng = Rng::substream(seed, i);
        GraspCandidate c;
        c.point_index = rng.uniform_index(object_cloud.size());
        c.grasp_point = object_cloud.points[c.point_index];

        // solid-angle uniform on the cap: cos(tilt) uniform in [cos g2, cos g1]
        const double ct = cos_g2 + (cos_g1 - cos_g2) * rng.uniform();
        c.tilt = std::acos(std::clamp(ct, -1.0, 1.0));
        const double st = std::sin(c.tilt);
        const double azimuth = rng.uniform(0.0, 2.0 * M_PI);
        const Vec3 dir(st * std::cos(azimuth), st * std::sin(azimuth), -ct);

        c.wrist = rng.uniform(0.0, 2.0 * M_PI);
        c.pose = pose_from_grasp(c.grasp_point, ApproachDirection(dir), c.wrist);
        out.push_back(c);
    }
    return out;
}

}  // namespace ragrasp
