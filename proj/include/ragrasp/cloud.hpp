#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ragrasp/errors.hpp"
#include "ragrasp/geometry.hpp"
#include "ragrasp/rng.hpp"

namespace ragrasp {

enum class Frame { camera, robot };

/// Unorganized 3D point cloud, optionally with one unit normal per point.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or one per point
    Frame frame = Frame::robot;

    size_t size() const { return points.size(); }
    bool has_normals() const { return !normals.empty(); }

    void validate() const {
        if (!normals.empty() && normals.size() != points.size())
            throw DataError("normal count does not match point count");
        for (size_t i = 0; i < points.size(); ++i) {
            if (!points[i].allFinite())
                throw DataError("non-finite coordinate at point " + std::to_string(i));
        }
        for (size_t i = 0; i < normals.size(); ++i) {
            if (std::abs(normals[i].norm() - 1.0) > 1e-6)
                throw DataError("non-unit normal at point " + std::to_string(i));
        }
    }
};

/// Plane {p : normal . p = offset} with unit normal.
struct Plane {
    Vec3 normal{0, 0, 1};
    double offset = 0.0;

    double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }

    /// Same plane with the normal pointing toward +z.
    Plane oriented_up() const {
        if (normal.z() < 0.0) return Plane{-normal, -offset};
        return *this;
    }
};

// ---------------------------------------------------------------------------
// ASCII PCD subset: VERSION / FIELDS x y z / SIZE / TYPE / COUNT / WIDTH /
// HEIGHT / POINTS / DATA ascii, then one "x y z" line per point.
// ---------------------------------------------------------------------------

inline PointCloud parse_pcd(std::string_view bytes) {
    std::istringstream in{std::string(bytes)};
    std::string line;
    long declared_points = -1;
    long width = -1, height = -1;
    bool data_seen = false;
    size_t line_no = 0;

    auto fail = [&](const std::string& why) {
        throw FormatError("PCD header line " + std::to_string(line_no) + ": " + why +
                          (line.empty() ? "" : " (\"" + line + "\")"));
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "VERSION") {
            // accepted, value ignored
        } else if (key == "FIELDS") {
            std::string a, b, c, extra;
            ls >> a >> b >> c;
            if (a != "x" || b != "y" || c != "z" || (ls >> extra))
                fail("expected FIELDS x y z");
        } else if (key == "SIZE" || key == "TYPE" || key == "COUNT") {
            // accepted, values ignored
        } else if (key == "WIDTH") {
            if (!(ls >> width)) fail("unreadable WIDTH");
        } else if (key == "HEIGHT") {
            if (!(ls >> height)) fail("unreadable HEIGHT");
        } else if (key == "POINTS") {
            if (!(ls >> declared_points)) fail("unreadable POINTS");
        } else if (key == "DATA") {
            std::string mode;
            ls >> mode;
            if (mode != "ascii")
                fail("only DATA ascii is supported, got \"" + mode + "\"");
            data_seen = true;
            break;
        } else {
            fail("unknown header key \"" + key + "\"");
        }
    }
    if (!data_seen) fail("missing DATA line");
    if (declared_points < 0) fail("missing POINTS line");
    if (width >= 0 && height >= 0 && width * height != declared_points)
        fail("WIDTH*HEIGHT does not equal POINTS");

    PointCloud cloud;
    cloud.frame = Frame::camera;
    cloud.points.reserve(static_cast<size_t>(declared_points));
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z))
            throw FormatError("PCD data line " + std::to_string(line_no) +
                              ": expected three coordinates (\"" + line + "\")");
        const size_t idx = cloud.points.size();
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw DataError("non-finite coordinate at point " + std::to_string(idx));
        cloud.points.emplace_back(x, y, z);
    }
    if (static_cast<long>(cloud.points.size()) != declared_points)
        throw FormatError("PCD declares " + std::to_string(declared_points) +
                          " points but file has " + std::to_string(cloud.points.size()));
    return cloud;
}

/// Canonical-form writer; parse_pcd(serialize_pcd(c)) round-trips exactly.
inline std::string serialize_pcd(const PointCloud& cloud) {
    std::string out;
    const size_t n = cloud.size();
    out += "VERSION .7\n";
    out += "FIELDS x y z\n";
    out += "SIZE 8 8 8\n";
    out += "TYPE F F F\n";
    out += "COUNT 1 1 1\n";
    out += "WIDTH " + std::to_string(n) + "\n";
    out += "HEIGHT 1\n";
    out += "POINTS " + std::to_string(n) + "\n";
    out += "DATA ascii\n";
    char buf[96];
    for (const Vec3& p : cloud.points) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normal estimation
// ---------------------------------------------------------------------------

struct NormalsResult {
    PointCloud cloud;
    std::vector<size_t> degenerate;  // indices whose neighborhood had rank < 2
};

/// k-nearest-neighbor PCA normals, sign-flipped to face the sensor origin.
/// Exact linear-scan neighbor search; fine at desk scale (<= 100k points).
inline NormalsResult estimate_normals(const PointCloud& cloud, int k,
                                      const Vec3& sensor_origin = Vec3::Zero()) {
    const size_t n = cloud.size();
    if (k < 3) throw ParameterError("estimate_normals requires k >= 3");
    if (n < static_cast<size_t>(k) + 1)
        throw ParameterError("estimate_normals requires at least k+1 points");

    NormalsResult result;
    result.cloud = cloud;
    result.cloud.normals.assign(n, Vec3(0, 0, 1));

    std::vector<std::pair<double, size_t>> dist(n);
    std::vector<size_t> nearest(static_cast<size_t>(k));
    for (size_t i = 0; i < n; ++i) {
        const Vec3& q = cloud.points[i];
        for (size_t j = 0; j < n; ++j)
            dist[j] = {(cloud.points[j] - q).squaredNorm(), j};
        dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

        Vec3 mean = q;
        for (int m = 0; m < k; ++m) {
            nearest[m] = dist[m].second;
            mean += cloud.points[nearest[m]];
        }
        mean /= static_cast<double>(k + 1);

        Mat3 cov = Mat3::Zero();
        auto accumulate = [&](const Vec3& p) {
            const Vec3 d = p - mean;
            cov += d * d.transpose();
        };
        accumulate(q);
        for (int m = 0; m < k; ++m) accumulate(cloud.points[nearest[m]]);

        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        const Vec3 evals = eig.eigenvalues();  // ascending
        // rank < 2 neighborhood: the two largest eigenvalues do not dominate
        // (collinear points leave only one significant direction)
        if (evals(1) <= 1e-12 * std::max(evals(2), 1e-300) || evals(2) <= 0.0) {
            result.degenerate.push_back(i);
            continue;
        }
        Vec3 normal = eig.eigenvectors().col(0);
        if (normal.dot(sensor_origin - q) < 0.0) normal = -normal;
        result.cloud.normals[i] = normal.normalized();
    }
    return result;
}

// ---------------------------------------------------------------------------
// RANSAC plane segmentation
// ---------------------------------------------------------------------------

struct PlaneFit {
    Plane plane;
    std::vector<size_t> inliers;  // ascending indices
};

/// Best-of-N random 3-point hypotheses. Deterministic for a given seed; the
/// first hypothesis reaching the maximum inlier count wins ties.
inline PlaneFit segment_plane(const PointCloud& cloud, double dist_thresh,
                              int iterations, uint64_t seed) {
    const size_t n = cloud.size();
    if (n < 3) throw ParameterError("segment_plane requires at least 3 points");
    if (dist_thresh <= 0.0) throw ParameterError("segment_plane requires dist_thresh > 0");

    Rng rng(seed);
    Plane best;
    long best_count = -1;
    for (int it = 0; it < iterations; ++it) {
        const size_t i = rng.uniform_index(n);
        const size_t j = rng.uniform_index(n);
        const size_t k = rng.uniform_index(n);
        if (i == j || j == k || i == k) continue;
        const Vec3 u = cloud.points[j] - cloud.points[i];
        const Vec3 v = cloud.points[k] - cloud.points[i];
        Vec3 normal = u.cross(v);
        const double len = normal.norm();
        if (len < 1e-12) continue;  // collinear triple
        normal /= len;
        const double offset = normal.dot(cloud.points[i]);

        long count = 0;
        for (const Vec3& p : cloud.points)
            if (std::abs(normal.dot(p) - offset) <= dist_thresh) ++count;
        if (count > best_count) {
            best_count = count;
            best = Plane{normal, offset};
        }
    }
    if (best_count < 0)
        throw SegmentationError("plane segmentation failed: all sampled triples degenerate");

    PlaneFit fit;
    fit.plane = best;
    for (size_t idx = 0; idx < n; ++idx)
        if (std::abs(best.signed_distance(cloud.points[idx])) <= dist_thresh)
            fit.inliers.push_back(idx);
    return fit;
}

/// Keep only points strictly more than `margin` above the plane. This is the
/// planar-segmentation step producing the object cloud.
inline PointCloud remove_plane(const PointCloud& cloud, const Plane& plane,
                               double margin) {
    const Plane up = plane.oriented_up();
    PointCloud out;
    out.frame = cloud.frame;
    for (size_t i = 0; i < cloud.size(); ++i) {
        if (up.signed_distance(cloud.points[i]) > margin) {
            out.points.push_back(cloud.points[i]);
            if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
        }
    }
    return out;
}

/// Keep points with |p - center|_inf strictly below half_edge.
inline PointCloud crop_box(const PointCloud& cloud, const Vec3& center,
                           double half_edge) {
    if (half_edge <= 0.0) throw ParameterError("crop_box requires half_edge > 0");
    PointCloud out;
    out.frame = cloud.frame;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 d = cloud.points[i] - center;
        if (std::abs(d.x()) < half_edge && std::abs(d.y()) < half_edge &&
            std::abs(d.z()) < half_edge) {
            out.points.push_back(cloud.points[i]);
            if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
        }
    }
    return out;
}

}  // namespace ragrasp
