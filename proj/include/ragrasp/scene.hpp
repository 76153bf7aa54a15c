#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ragrasp/cloud.hpp"
#include "ragrasp/errors.hpp"
#include "ragrasp/geometry.hpp"
#include "ragrasp/rng.hpp"

namespace ragrasp {

// ---------------------------------------------------------------------------
// Primitive shapes
//
// Each shape is modeled in a local resting frame: the table contact is the
// z = 0 plane and the body occupies z >= 0. Every kind decomposes into
// convex pieces (half-space intersections, optionally bounded by one
// cylinder), which gives exact inside/outside tests, exact ray casting with
// analytic normals, and face-by-face surface sampling.
// ---------------------------------------------------------------------------

enum class ShapeKind : uint8_t {
    cube,
    cuboid,
    cylinder,
    half_cylinder,
    wedge,
    tall_cuboid,
    disk,
    l_block,
};

inline const char* to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::cube: return "cube";
        case ShapeKind::cuboid: return "cuboid";
        case ShapeKind::cylinder: return "cylinder";
        case ShapeKind::half_cylinder: return "half_cylinder";
        case ShapeKind::wedge: return "wedge";
        case ShapeKind::tall_cuboid: return "tall_cuboid";
        case ShapeKind::disk: return "disk";
        case ShapeKind::l_block: return "l_block";
    }
    return "?";
}

inline ShapeKind shape_kind_from_string(const std::string& s) {
    for (int i = 0; i < 8; ++i) {
        const auto k = static_cast<ShapeKind>(i);
        if (s == to_string(k)) return k;
    }
    throw FormatError("unknown shape kind \"" + s + "\"");
}

/// Dimensions per kind (meters):
///   cube          [side]
///   cuboid        [lx, ly, lz]
///   cylinder      [radius, height]
///   half_cylinder [radius, length]          (flat face down, axis along x)
///   wedge         [lx, ly, h]               (right triangular prism along y)
///   tall_cuboid   [base, height]
///   disk          [radius, height]
///   l_block       [lx, ly, lz]
struct PrimitiveShape {
    ShapeKind kind = ShapeKind::cube;
    std::array<double, 3> dims{0.05, 0.0, 0.0};

    int dim_count() const {
        switch (kind) {
            case ShapeKind::cube: return 1;
            case ShapeKind::cylinder:
            case ShapeKind::half_cylinder:
            case ShapeKind::tall_cuboid:
            case ShapeKind::disk: return 2;
            default: return 3;
        }
    }

    void validate() const {
        for (int i = 0; i < dim_count(); ++i)
            if (!(dims[i] >= 0.01 && dims[i] <= 0.10))
                throw ParameterError(std::string("shape dimension out of [0.01, 0.10]: ") +
                                     to_string(kind) + " dims[" + std::to_string(i) + "]=" +
                                     std::to_string(dims[i]));
    }

    /// Height of the resting body (max z extent).
    double height() const {
        switch (kind) {
            case ShapeKind::cube: return dims[0];
            case ShapeKind::cuboid: return dims[2];
            case ShapeKind::cylinder: return dims[1];
            case ShapeKind::half_cylinder: return dims[0];
            case ShapeKind::wedge: return dims[2];
            case ShapeKind::tall_cuboid: return dims[1];
            case ShapeKind::disk: return dims[1];
            case ShapeKind::l_block: return dims[2];
        }
        return 0.0;
    }

    /// Radius of the smallest vertical cylinder containing the footprint.
    double footprint_radius() const {
        switch (kind) {
            case ShapeKind::cube: return dims[0] * M_SQRT1_2;
            case ShapeKind::cuboid: return 0.5 * std::hypot(dims[0], dims[1]);
            case ShapeKind::cylinder: return dims[0];
            case ShapeKind::half_cylinder: return std::hypot(0.5 * dims[1], dims[0]);
            case ShapeKind::wedge: return 0.5 * std::hypot(dims[0], dims[1]);
            case ShapeKind::tall_cuboid: return dims[0] * M_SQRT1_2;
            case ShapeKind::disk: return dims[0];
            case ShapeKind::l_block: return 0.5 * std::hypot(dims[0], dims[1]);
        }
        return 0.0;
    }
};

struct HalfSpace {
    Vec3 n;    // outward unit normal
    double d;  // inside iff n . p <= d
};

/// Convex region: intersection of half-spaces, optionally bounded laterally
/// by an infinite cylinder around (cyl_point, cyl_axis).
struct ConvexPiece {
    std::vector<HalfSpace> planes;
    bool has_cylinder = false;
    Vec3 cyl_point = Vec3::Zero();
    Vec3 cyl_axis = Vec3::UnitZ();
    double cyl_radius = 0.0;

    bool inside(const Vec3& p, double tol = 0.0) const {
        for (const auto& h : planes)
            if (h.n.dot(p) > h.d + tol) return false;
        if (has_cylinder) {
            const Vec3 w = p - cyl_point;
            const Vec3 radial = w - w.dot(cyl_axis) * cyl_axis;
            if (radial.norm() > cyl_radius + tol) return false;
        }
        return true;
    }

    /// Absolute distance to the piece boundary; exact for points on or near
    /// the surface, which is all the tests need.
    double boundary_distance(const Vec3& p) const {
        double sdf = -std::numeric_limits<double>::infinity();
        for (const auto& h : planes) sdf = std::max(sdf, h.n.dot(p) - h.d);
        if (has_cylinder) {
            const Vec3 w = p - cyl_point;
            const Vec3 radial = w - w.dot(cyl_axis) * cyl_axis;
            sdf = std::max(sdf, radial.norm() - cyl_radius);
        }
        return std::abs(sdf);
    }

    /// Clips the ray o + t*d, t in [0, t_max]; returns entry t and entry
    /// normal if the interval is non-empty and entry is in front of o.
    std::optional<std::pair<double, Vec3>> raycast(const Vec3& o, const Vec3& d,
                                                   double t_max) const {
        double t0 = 0.0, t1 = t_max;
        Vec3 n0 = Vec3::Zero();
        bool n0_set = false;
        for (const auto& h : planes) {
            const double denom = h.n.dot(d);
            const double dist = h.d - h.n.dot(o);
            if (std::abs(denom) < 1e-14) {
                if (dist < 0.0) return std::nullopt;  // parallel, outside
                continue;
            }
            const double t = dist / denom;
            if (denom > 0.0) {
                t1 = std::min(t1, t);
            } else if (t > t0) {
                t0 = t;
                n0 = h.n;
                n0_set = true;
            }
            if (t0 > t1) return std::nullopt;
        }
        if (has_cylinder) {
            const Vec3 w = (o - cyl_point) - (o - cyl_point).dot(cyl_axis) * cyl_axis;
            const Vec3 v = d - d.dot(cyl_axis) * cyl_axis;
            const double a = v.squaredNorm();
            const double b = 2.0 * w.dot(v);
            const double c = w.squaredNorm() - cyl_radius * cyl_radius;
            if (a < 1e-16) {
                if (c > 0.0) return std::nullopt;  // parallel to axis, outside
            } else {
                const double disc = b * b - 4.0 * a * c;
                if (disc < 0.0) return std::nullopt;
                const double sq = std::sqrt(disc);
                const double ta = (-b - sq) / (2.0 * a);
                const double tb = (-b + sq) / (2.0 * a);
                if (ta > t0) {
                    t0 = ta;
                    const Vec3 hit = o + ta * d;
                    const Vec3 wr = hit - cyl_point;
                    n0 = (wr - wr.dot(cyl_axis) * cyl_axis).normalized();
                    n0_set = true;
                }
                t1 = std::min(t1, tb);
                if (t0 > t1) return std::nullopt;
            }
        }
        if (!n0_set || t0 <= 0.0) return std::nullopt;  // origin inside or behind
        return std::make_pair(t0, n0);
    }
};

namespace detail {

inline ConvexPiece box_piece(double x0, double x1, double y0, double y1, double z0,
                             double z1) {
    ConvexPiece p;
    p.planes = {
        {Vec3(-1, 0, 0), -x0}, {Vec3(1, 0, 0), x1}, {Vec3(0, -1, 0), -y0},
        {Vec3(0, 1, 0), y1},   {Vec3(0, 0, -1), -z0}, {Vec3(0, 0, 1), z1},
    };
    return p;
}

}  // namespace detail

/// Convex decomposition of a shape in its local resting frame.
inline std::vector<ConvexPiece> shape_pieces(const PrimitiveShape& s) {
    using detail::box_piece;
    const auto& d = s.dims;
    std::vector<ConvexPiece> out;
    switch (s.kind) {
        case ShapeKind::cube:
            out.push_back(box_piece(-d[0] / 2, d[0] / 2, -d[0] / 2, d[0] / 2, 0, d[0]));
            break;
        case ShapeKind::cuboid:
            out.push_back(box_piece(-d[0] / 2, d[0] / 2, -d[1] / 2, d[1] / 2, 0, d[2]));
            break;
        case ShapeKind::tall_cuboid:
            out.push_back(box_piece(-d[0] / 2, d[0] / 2, -d[0] / 2, d[0] / 2, 0, d[1]));
            break;
        case ShapeKind::cylinder:
        case ShapeKind::disk: {
            ConvexPiece p;
            p.planes = {{Vec3(0, 0, -1), 0.0}, {Vec3(0, 0, 1), d[1]}};
            p.has_cylinder = true;
            p.cyl_point = Vec3::Zero();
            p.cyl_axis = Vec3::UnitZ();
            p.cyl_radius = d[0];
            out.push_back(p);
            break;
        }
        case ShapeKind::half_cylinder: {
            ConvexPiece p;
            p.planes = {{Vec3(-1, 0, 0), d[1] / 2},
                        {Vec3(1, 0, 0), d[1] / 2},
                        {Vec3(0, 0, -1), 0.0}};
            p.has_cylinder = true;
            p.cyl_point = Vec3::Zero();
            p.cyl_axis = Vec3::UnitX();
            p.cyl_radius = d[0];
            out.push_back(p);
            break;
        }
        case ShapeKind::wedge: {
            // right triangle in xz: vertices (-lx/2,0), (lx/2,0), (-lx/2,h)
            const double lx = d[0], ly = d[1], h = d[2];
            ConvexPiece p;
            const Vec3 slope = Vec3(h, 0, lx).normalized();
            p.planes = {{Vec3(-1, 0, 0), lx / 2},
                        {Vec3(0, -1, 0), ly / 2},
                        {Vec3(0, 1, 0), ly / 2},
                        {Vec3(0, 0, -1), 0.0},
                        {slope, slope.dot(Vec3(lx / 2, 0, 0))}};
            out.push_back(p);
            break;
        }
        case ShapeKind::l_block: {
            const double lx = d[0], ly = d[1], lz = d[2];
            out.push_back(box_piece(-lx / 2, lx / 2, -ly / 2, 0, 0, lz));
            out.push_back(box_piece(-lx / 2, 0, 0, ly / 2, 0, lz));
            break;
        }
    }
    return out;
}

inline bool shape_inside(const PrimitiveShape& s, const Vec3& p_local, double tol = 0.0) {
    for (const auto& piece : shape_pieces(s))
        if (piece.inside(p_local, tol)) return true;
    return false;
}

/// Distance from a near-surface local point to the shape boundary.
inline double shape_surface_distance(const PrimitiveShape& s, const Vec3& p_local) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& piece : shape_pieces(s))
        best = std::min(best, piece.boundary_distance(p_local));
    return best;
}

// ---------------------------------------------------------------------------
// Surface sampling (ground truth for the stability oracle)
// ---------------------------------------------------------------------------

struct SurfacePoint {
    Vec3 p;
    Vec3 n;  // outward unit normal
};

namespace detail {

/// Grid over a planar face spanned by (du, dv) around `origin`; samples are
/// centered in their grid cells so none land on face edges.
inline void sample_face(std::vector<SurfacePoint>& out, const Vec3& origin,
                        const Vec3& du, double len_u, const Vec3& dv, double len_v,
                        const Vec3& n, double spacing) {
    const int nu = std::max(1, static_cast<int>(std::ceil(len_u / spacing)));
    const int nv = std::max(1, static_cast<int>(std::ceil(len_v / spacing)));
    for (int iu = 0; iu < nu; ++iu)
        for (int iv = 0; iv < nv; ++iv) {
            const double u = (iu + 0.5) / nu * len_u;
            const double v = (iv + 0.5) / nv * len_v;
            out.push_back({origin + u * du + v * dv, n});
        }
}

/// Polar grid over a full or partial disk (angles in [a0, a1]).
inline void sample_disk(std::vector<SurfacePoint>& out, const Vec3& center,
                        const Vec3& er, const Vec3& et, double radius, const Vec3& n,
                        double spacing, double a0 = 0.0, double a1 = 2.0 * M_PI) {
    const int nr = std::max(1, static_cast<int>(std::ceil(radius / spacing)));
    for (int ir = 0; ir < nr; ++ir) {
        const double r = (ir + 0.5) / nr * radius;
        const double arc = r * (a1 - a0);
        const int na = std::max(1, static_cast<int>(std::ceil(arc / spacing)));
        for (int ia = 0; ia < na; ++ia) {
            const double a = a0 + (ia + 0.5) / na * (a1 - a0);
            out.push_back({center + r * (std::cos(a) * er + std::sin(a) * et), n});
        }
    }
}

inline void sample_box_faces(std::vector<SurfacePoint>& out, double x0, double x1,
                             double y0, double y1, double z0, double z1,
                             double spacing) {
    const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
    const double lx = x1 - x0, ly = y1 - y0, lz = z1 - z0;
    sample_face(out, Vec3(x0, y0, z1), ex, lx, ey, ly, ez, spacing);    // top
    sample_face(out, Vec3(x0, y0, z0), ex, lx, ey, ly, -ez, spacing);   // bottom
    sample_face(out, Vec3(x1, y0, z0), ey, ly, ez, lz, ex, spacing);    // +x
    sample_face(out, Vec3(x0, y0, z0), ey, ly, ez, lz, -ex, spacing);   // -x
    sample_face(out, Vec3(x0, y1, z0), ex, lx, ez, lz, ey, spacing);    // +y
    sample_face(out, Vec3(x0, y0, z0), ex, lx, ez, lz, -ey, spacing);   // -y
}

}  // namespace detail

/// Dense resampling of the shape surface with outward normals, in the local
/// frame. Spacing is the approximate distance between neighboring samples.
inline std::vector<SurfacePoint> sample_shape_surface(const PrimitiveShape& s,
                                                      double spacing) {
    using namespace detail;
    std::vector<SurfacePoint> out;
    const auto& d = s.dims;
    const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
    switch (s.kind) {
        case ShapeKind::cube:
            sample_box_faces(out, -d[0] / 2, d[0] / 2, -d[0] / 2, d[0] / 2, 0, d[0],
                             spacing);
            break;
        case ShapeKind::cuboid:
            sample_box_faces(out, -d[0] / 2, d[0] / 2, -d[1] / 2, d[1] / 2, 0, d[2],
                             spacing);
            break;
        case ShapeKind::tall_cuboid:
            sample_box_faces(out, -d[0] / 2, d[0] / 2, -d[0] / 2, d[0] / 2, 0, d[1],
                             spacing);
            break;
        case ShapeKind::cylinder:
        case ShapeKind::disk: {
            const double r = d[0], h = d[1];
            sample_disk(out, Vec3(0, 0, h), ex, ey, r, ez, spacing);
            sample_disk(out, Vec3(0, 0, 0), ex, ey, r, -ez, spacing);
            const int na = std::max(3, static_cast<int>(std::ceil(2.0 * M_PI * r / spacing)));
            const int nz = std::max(1, static_cast<int>(std::ceil(h / spacing)));
            for (int ia = 0; ia < na; ++ia) {
                const double a = (ia + 0.5) / na * 2.0 * M_PI;
                const Vec3 n(std::cos(a), std::sin(a), 0);
                for (int iz = 0; iz < nz; ++iz)
                    out.push_back({Vec3(r * n.x(), r * n.y(), (iz + 0.5) / nz * h), n});
            }
            break;
        }
        case ShapeKind::half_cylinder: {
            const double r = d[0], len = d[1];
            // curved top: theta in (0, pi) measured from +y toward +z
            const int na = std::max(3, static_cast<int>(std::ceil(M_PI * r / spacing)));
            const int nx = std::max(1, static_cast<int>(std::ceil(len / spacing)));
            for (int ia = 0; ia < na; ++ia) {
                const double a = (ia + 0.5) / na * M_PI;
                const Vec3 n(0, std::cos(a), std::sin(a));
                for (int ix = 0; ix < nx; ++ix) {
                    const double x = -len / 2 + (ix + 0.5) / nx * len;
                    out.push_back({Vec3(x, r * n.y(), r * n.z()), n});
                }
            }
            // flat bottom
            sample_face(out, Vec3(-len / 2, -r, 0), ex, len, ey, 2 * r, -ez, spacing);
            // half-disk end caps
            sample_disk(out, Vec3(len / 2, 0, 0), ey, ez, r, ex, spacing, 0.0, M_PI);
            sample_disk(out, Vec3(-len / 2, 0, 0), ey, ez, r, -ex, spacing, 0.0, M_PI);
            break;
        }
        case ShapeKind::wedge: {
            const double lx = d[0], ly = d[1], h = d[2];
            const double hyp = std::hypot(lx, h);
            const Vec3 slope_n = Vec3(h, 0, lx).normalized();
            const Vec3 slope_dir = Vec3(lx, 0, -h).normalized();  // from apex to base
            sample_face(out, Vec3(-lx / 2, -ly / 2, 0), ex, lx, ey, ly, -ez, spacing);
            sample_face(out, Vec3(-lx / 2, -ly / 2, 0), ez, h, ey, ly, -ex, spacing);
            sample_face(out, Vec3(-lx / 2, -ly / 2, h), slope_dir, hyp, ey, ly, slope_n,
                        spacing);
            // triangular side walls at y = +-ly/2, sampled on a grid and
            // clipped to the triangle interior
            for (int side = -1; side <= 1; side += 2) {
                const double y = side * ly / 2;
                const Vec3 n = side * ey;
                const int nu = std::max(1, static_cast<int>(std::ceil(lx / spacing)));
                const int nv = std::max(1, static_cast<int>(std::ceil(h / spacing)));
                for (int iu = 0; iu < nu; ++iu)
                    for (int iv = 0; iv < nv; ++iv) {
                        const double x = -lx / 2 + (iu + 0.5) / nu * lx;
                        const double z = (iv + 0.5) / nv * h;
                        if (z * lx + h * x <= h * lx / 2)  // inside triangle
                            out.push_back({Vec3(x, y, z), n});
                    }
            }
            break;
        }
        case ShapeKind::l_block: {
            const double lx = d[0], ly = d[1], lz = d[2];
            std::vector<SurfacePoint> raw;
            sample_box_faces(raw, -lx / 2, lx / 2, -ly / 2, 0, 0, lz, spacing);
            sample_box_faces(raw, -lx / 2, 0, 0, ly / 2, 0, lz, spacing);
            const auto pieces = shape_pieces(s);
            for (const auto& sp : raw) {
                // drop seam samples strictly interior to the other box
                bool interior = false;
                for (const auto& piece : pieces)
                    if (piece.inside(sp.p, -1e-9) &&
                        piece.boundary_distance(sp.p) > 1e-9) {
                        interior = true;
                        break;
                    }
                if (!interior) out.push_back(sp);
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

struct PinholeCamera {
    Pose pose;          // camera frame: +z = optical axis (view direction)
    double focal_px = 140.0;
    int width = 128;
    int height = 128;

    /// Camera hovering above `target`, optical axis straight down, image x
    /// aligned with world x.
    static PinholeCamera top_down(const Vec3& target, double height_m,
                                  double focal = 140.0, int res = 128) {
        PinholeCamera cam;
        Mat3 r;
        r.col(0) = Vec3::UnitX();
        r.col(1) = -Vec3::UnitY();
        r.col(2) = -Vec3::UnitZ();
        cam.pose = Pose::from_matrix(r, target + Vec3(0, 0, height_m));
        cam.focal_px = focal;
        cam.width = res;
        cam.height = res;
        return cam;
    }
};

struct SceneObject {
    int id = 0;
    PrimitiveShape shape;
    Pose pose;  // yaw + xy translation; z = 0 (resting on the table)
};

/// Ground-truth world: primitive objects resting on the z = 0 table plane,
/// observed by a pinhole depth camera. World frame == robot frame.
struct Scene {
    std::vector<SceneObject> objects;
    PinholeCamera camera = PinholeCamera::top_down(Vec3(0.45, 0.0, 0.0), 0.75);

    const SceneObject* find(int id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
};

struct DropRegion {
    double x0 = 0.30, x1 = 0.60, y0 = -0.15, y1 = 0.15;
    double cx() const { return 0.5 * (x0 + x1); }
    double cy() const { return 0.5 * (y0 + y1); }
};

/// Uniformly random shape kind and dimensions. Ranges keep every object
/// graspable by the default 8 cm gripper opening and within the [0.01, 0.10]
/// dimension bound.
inline PrimitiveShape random_shape(Rng& rng) {
    PrimitiveShape s;
    s.kind = static_cast<ShapeKind>(rng.uniform_index(8));
    switch (s.kind) {
        case ShapeKind::cube:
            s.dims = {rng.uniform(0.025, 0.055), 0, 0};
            break;
        case ShapeKind::cuboid:
            s.dims = {rng.uniform(0.03, 0.07), rng.uniform(0.02, 0.055),
                      rng.uniform(0.02, 0.05)};
            break;
        case ShapeKind::cylinder:
            s.dims = {rng.uniform(0.012, 0.0275), rng.uniform(0.04, 0.09), 0};
            break;
        case ShapeKind::half_cylinder:
            s.dims = {rng.uniform(0.015, 0.0275), rng.uniform(0.04, 0.09), 0};
            break;
        case ShapeKind::wedge:
            s.dims = {rng.uniform(0.03, 0.07), rng.uniform(0.03, 0.06),
                      rng.uniform(0.025, 0.05)};
            break;
        case ShapeKind::tall_cuboid:
            s.dims = {rng.uniform(0.02, 0.035), rng.uniform(0.06, 0.10), 0};
            break;
        case ShapeKind::disk:
            s.dims = {rng.uniform(0.02, 0.045), rng.uniform(0.012, 0.025), 0};
            break;
        case ShapeKind::l_block:
            s.dims = {rng.uniform(0.05, 0.09), rng.uniform(0.05, 0.09),
                      rng.uniform(0.02, 0.045)};
            break;
    }
    return s;
}

/// Drops n_objects shapes with uniformly random kind, dimensions, yaw and xy
/// position into the region. Placements whose footprint circles would
/// interpenetrate more than 1 mm are rejected and redrawn, up to 10,000
/// attempts per object. Deterministic per seed.
inline Scene generate_scene(int n_objects, const DropRegion& region, uint64_t seed) {
    if (n_objects < 0) throw ParameterError("n_objects must be >= 0");
    Scene scene;
    Rng rng(seed);
    for (int i = 0; i < n_objects; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            PrimitiveShape shape = random_shape(rng);
            const double x = rng.uniform(region.x0, region.x1);
            const double y = rng.uniform(region.y0, region.y1);
            const double yaw = rng.uniform(0.0, 2.0 * M_PI);
            const double r = shape.footprint_radius();
            bool ok = true;
            for (const auto& other : scene.objects) {
                const double dx = x - other.pose.translation.x();
                const double dy = y - other.pose.translation.y();
                if (std::hypot(dx, dy) < r + other.shape.footprint_radius() - 0.001) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            SceneObject obj;
            obj.id = i;
            obj.shape = shape;
            obj.pose.rotation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
            obj.pose.translation = Vec3(x, y, 0.0);
            scene.objects.push_back(obj);
            placed = true;
            break;
        }
        if (!placed)
            throw RegionTooDenseError("could not place object " + std::to_string(i) +
                                      " after 10000 attempts");
    }
    return scene;
}

inline Scene remove_object(const Scene& scene, int id) {
    if (scene.find(id) == nullptr)
        throw ParameterError("remove_object: no object with id " + std::to_string(id));
    Scene out = scene;
    std::erase_if(out.objects, [id](const SceneObject& o) { return o.id == id; });
    return out;
}

// ---------------------------------------------------------------------------
// Depth rendering
// ---------------------------------------------------------------------------

/// Casts one ray per pixel; the nearest hit among the table plane and all
/// objects becomes one point (robot frame) with its analytic surface normal.
/// Hits farther than 2 m along the ray are dropped.
inline PointCloud render_cloud(const Scene& scene) {
    constexpr double kMaxDepth = 2.0;
    const PinholeCamera& cam = scene.camera;
    const Mat3 cam_r = cam.pose.matrix();
    const Vec3 origin = cam.pose.translation;
    const double cx = 0.5 * cam.width, cy = 0.5 * cam.height;

    struct LocalObject {
        const SceneObject* obj;
        Pose inv_pose;
        Mat3 inv_r;
        Mat3 r;
        std::vector<ConvexPiece> pieces;
    };
    std::vector<LocalObject> locals;
    locals.reserve(scene.objects.size());
    for (const auto& o : scene.objects) {
        LocalObject lo;
        lo.obj = &o;
        lo.inv_pose = inverse(o.pose);
        lo.inv_r = lo.inv_pose.matrix();
        lo.r = o.pose.matrix();
        lo.pieces = shape_pieces(o.shape);
        locals.push_back(std::move(lo));
    }

    PointCloud cloud;
    cloud.frame = Frame::robot;
    const int n_px = cam.width * cam.height;
    std::vector<Vec3> pts(n_px), nrm(n_px);
    std::vector<uint8_t> hit(n_px, 0);

#pragma omp parallel for schedule(static)
    for (int px = 0; px < n_px; ++px) {
        const int v = px / cam.width;
        const int u = px % cam.width;
        const Vec3 dir_cam((u + 0.5 - cx) / cam.focal_px, (v + 0.5 - cy) / cam.focal_px,
                           1.0);
        const Vec3 d = (cam_r * dir_cam).normalized();

        double best_t = kMaxDepth;
        Vec3 best_n = Vec3::Zero();
        bool found = false;

        if (d.z() < -1e-12) {  // table plane z = 0
            const double t = -origin.z() / d.z();
            if (t > 0.0 && t < best_t) {
                best_t = t;
                best_n = Vec3::UnitZ();
                found = true;
            }
        }
        for (const auto& lo : locals) {
            const Vec3 o_l = lo.inv_r * origin + lo.inv_pose.translation;
            const Vec3 d_l = lo.inv_r * d;
            for (const auto& piece : lo.pieces) {
                auto h = piece.raycast(o_l, d_l, best_t);
                if (h && h->first < best_t) {
                    best_t = h->first;
                    best_n = lo.r * h->second;
                    found = true;
                }
            }
        }
        if (found) {
            pts[px] = origin + best_t * d;
            nrm[px] = best_n;
            hit[px] = 1;
        }
    }
    for (int px = 0; px < n_px; ++px) {
        if (hit[px]) {
            cloud.points.push_back(pts[px]);
            cloud.normals.push_back(nrm[px]);
        }
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Stability oracle
// ---------------------------------------------------------------------------

/// Abstract parallel-jaw hand. The closing axis is the grasp-frame y-axis;
/// fingers travel along the grasp-frame z-axis (the approach).
struct GripperModel {
    double max_opening = 0.08;
    double finger_length = 0.05;
    double finger_thickness = 0.016;
    double palm_depth = 0.04;

    void validate() const {
        if (!(max_opening > 0 && finger_length > 0 && finger_thickness > 0 &&
              palm_depth > 0))
            throw ParameterError("gripper dimensions must be positive");
        if (!(max_opening > 2.0 * finger_thickness))
            throw ParameterError("max_opening must exceed twice the finger thickness");
    }
};

struct OracleConfig {
    int min_contact_points = 20;
    double friction_cone_deg = 30.0;  // half-angle
    double contact_shell = 0.004;     // depth of the jaw-side contact band
    double surface_spacing = 0.002;   // ground-truth resampling step
};

enum class StabilityLabel : uint8_t {
    stable,
    no_contact,     // closing region misses, holds too few points, or spans
                    // more than one object
    collision,      // finger or palm volume intersects an object or the table
    not_antipodal,  // no opposing contact pair inside the friction cone
};

inline const char* to_string(StabilityLabel l) {
    switch (l) {
        case StabilityLabel::stable: return "stable";
        case StabilityLabel::no_contact: return "unstable-no-contact";
        case StabilityLabel::collision: return "unstable-collision";
        case StabilityLabel::not_antipodal: return "unstable-not-antipodal";
    }
    return "?";
}

struct StabilityResult {
    StabilityLabel label = StabilityLabel::no_contact;
    int object_id = -1;       // plurality owner of closing-region points
    int contact_points = 0;   // closing-region points of that object
    bool stable() const { return label == StabilityLabel::stable; }
};

/// Ground-truth surface samples of every object, in the robot frame.
struct SceneSurface {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<int> object_ids;
};

inline SceneSurface sample_scene_surfaces(const Scene& scene, double spacing) {
    SceneSurface surf;
    for (const auto& obj : scene.objects) {
        const Mat3 r = obj.pose.matrix();
        for (const auto& sp : sample_shape_surface(obj.shape, spacing)) {
            surf.points.push_back(r * sp.p + obj.pose.translation);
            surf.normals.push_back(r * sp.n);
            surf.object_ids.push_back(obj.id);
        }
    }
    return surf;
}

/// Analytic force-closure proxy. In the grasp frame, with w the finger
/// width, o the max opening, l the finger length:
///   closing region  |x|<=w/2, |y|<=o/2,            |z|<=l/2
///   jaw volumes     |x|<=w/2, o/2<=|y|<=o/2+thick, |z|<=l/2
///   palm            |x|<=w/2, |y|<=o/2+thick,      -l/2-palm<=z<=-l/2
/// The grasp is stable iff the closing region holds >= min_contact_points
/// samples of exactly one object, the jaw and palm volumes are free of
/// object samples and stay above the table, and the closing-region samples
/// contain an antipodal pair: a point within contact_shell of each jaw side
/// whose outward normal is within the friction cone of that jaw's axis.
inline StabilityResult stability_oracle_on(const SceneSurface& surf, const Pose& grasp,
                                           const GripperModel& gripper,
                                           const OracleConfig& cfg = {}) {
    gripper.validate();
    const Pose inv = inverse(grasp);
    const Mat3 inv_r = inv.matrix();
    const Mat3 r = grasp.matrix();

    const double w2 = 0.5 * gripper.finger_thickness;  // half finger width (x)
    const double o2 = 0.5 * gripper.max_opening;
    const double l2 = 0.5 * gripper.finger_length;
    const double jaw_y1 = o2 + gripper.finger_thickness;
    const double palm_z0 = -l2 - gripper.palm_depth;

    // closing-region membership and jaw/palm collision in one pass
    struct Contact {
        double y;
        Vec3 n_g;  // normal in grasp frame
        int id;
    };
    std::vector<Contact> region;
    std::vector<int> per_object_count;
    bool volume_collision = false;

    for (size_t i = 0; i < surf.points.size(); ++i) {
        const Vec3 q = inv_r * surf.points[i] + inv.translation;
        if (std::abs(q.x()) > w2) continue;
        const double ay = std::abs(q.y());
        if (q.z() >= -l2 && q.z() <= l2) {
            if (ay <= o2) {
                const int id = surf.object_ids[i];
                if (id >= static_cast<int>(per_object_count.size()))
                    per_object_count.resize(id + 1, 0);
                ++per_object_count[id];
                region.push_back({q.y(), inv_r * surf.normals[i], id});
            } else if (ay <= jaw_y1) {
                volume_collision = true;
            }
        } else if (q.z() >= palm_z0 && q.z() < -l2 && ay <= jaw_y1) {
            volume_collision = true;
        }
    }

    StabilityResult result;
    int best_id = -1, best_count = 0, total = 0, ids_present = 0;
    for (size_t id = 0; id < per_object_count.size(); ++id) {
        const int c = per_object_count[id];
        if (c > 0) ++ids_present;
        total += c;
        if (c > best_count) {
            best_count = c;
            best_id = static_cast<int>(id);
        }
    }
    result.object_id = best_id;
    result.contact_points = best_count;

    // (1) enough contacts, all from one object
    if (best_count < cfg.min_contact_points || ids_present != 1) {
        result.label = StabilityLabel::no_contact;
        return result;
    }
    // (2) collision-free: jaw/palm volumes empty and above the table. The
    // table check is analytic: no corner of the three solid boxes may dip
    // below z = 0.
    if (!volume_collision) {
        auto box_min_world_z = [&](double x0, double x1, double y0, double y1,
                                   double z0, double z1) {
            double mz = std::numeric_limits<double>::infinity();
            for (int corner = 0; corner < 8; ++corner) {
                const Vec3 c((corner & 1) ? x1 : x0, (corner & 2) ? y1 : y0,
                             (corner & 4) ? z1 : z0);
                mz = std::min(mz, (r * c + grasp.translation).z());
            }
            return mz;
        };
        const double jaw_a = box_min_world_z(-w2, w2, o2, jaw_y1, -l2, l2);
        const double jaw_b = box_min_world_z(-w2, w2, -jaw_y1, -o2, -l2, l2);
        const double palm = box_min_world_z(-w2, w2, -jaw_y1, jaw_y1, palm_z0, -l2);
        if (std::min({jaw_a, jaw_b, palm}) < -1e-9) volume_collision = true;
    }
    if (volume_collision) {
        result.label = StabilityLabel::collision;
        return result;
    }
    // (3) antipodal pair within the friction cone
    double y_max = -std::numeric_limits<double>::infinity();
    double y_min = std::numeric_limits<double>::infinity();
    for (const auto& c : region) {
        y_max = std::max(y_max, c.y);
        y_min = std::min(y_min, c.y);
    }
    const double cos_cone = std::cos(cfg.friction_cone_deg * M_PI / 180.0);
    bool plus_ok = false, minus_ok = false;
    for (const auto& c : region) {
        if (c.y >= y_max - cfg.contact_shell && c.n_g.y() >= cos_cone) plus_ok = true;
        if (c.y <= y_min + cfg.contact_shell && -c.n_g.y() >= cos_cone) minus_ok = true;
        if (plus_ok && minus_ok) break;
    }
    result.label = (plus_ok && minus_ok) ? StabilityLabel::stable
                                         : StabilityLabel::not_antipodal;
    return result;
}

inline StabilityResult stability_oracle(const Scene& scene, const Pose& grasp,
                                        const GripperModel& gripper,
                                        const OracleConfig& cfg = {}) {
    return stability_oracle_on(sample_scene_surfaces(scene, cfg.surface_spacing), grasp,
                               gripper, cfg);
}

// ---------------------------------------------------------------------------
// Scene serialization (text, one object per record)
// ---------------------------------------------------------------------------

inline std::string serialize_scene(const Scene& scene) {
    std::string out = "SCENE 1\n";
    char buf[512];
    const auto& cam = scene.camera;
    std::snprintf(buf, sizeof(buf),
                  "camera %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d %d\n",
                  cam.pose.translation.x(), cam.pose.translation.y(),
                  cam.pose.translation.z(), cam.pose.rotation.w(), cam.pose.rotation.x(),
                  cam.pose.rotation.y(), cam.pose.rotation.z(), cam.focal_px, cam.width,
                  cam.height);
    out += buf;
    for (const auto& o : scene.objects) {
        std::snprintf(buf, sizeof(buf),
                      "object %d %s %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                      "%.17g %.17g\n",
                      o.id, to_string(o.shape.kind), o.shape.dims[0], o.shape.dims[1],
                      o.shape.dims[2], o.pose.translation.x(), o.pose.translation.y(),
                      o.pose.translation.z(), o.pose.rotation.w(), o.pose.rotation.x(),
                      o.pose.rotation.y(), o.pose.rotation.z());
        out += buf;
    }
    return out;
}

inline Scene parse_scene(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("SCENE", 0) != 0)
        throw FormatError("scene file missing SCENE header");
    Scene scene;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "camera") {
            double tx, ty, tz, qw, qx, qy, qz, focal;
            int w, h;
            if (!(ls >> tx >> ty >> tz >> qw >> qx >> qy >> qz >> focal >> w >> h))
                throw FormatError("bad camera record at line " + std::to_string(line_no));
            scene.camera.pose.translation = Vec3(tx, ty, tz);
            scene.camera.pose.rotation = Quat(qw, qx, qy, qz).normalized();
            scene.camera.focal_px = focal;
            scene.camera.width = w;
            scene.camera.height = h;
        } else if (tag == "object") {
            SceneObject o;
            std::string kind;
            double tx, ty, tz, qw, qx, qy, qz;
            if (!(ls >> o.id >> kind >> o.shape.dims[0] >> o.shape.dims[1] >>
                  o.shape.dims[2] >> tx >> ty >> tz >> qw >> qx >> qy >> qz))
                throw FormatError("bad object record at line " + std::to_string(line_no));
            o.shape.kind = shape_kind_from_string(kind);
            o.pose.translation = Vec3(tx, ty, tz);
            o.pose.rotation = Quat(qw, qx, qy, qz).normalized();
            scene.objects.push_back(o);
        } else {
            throw FormatError("unknown scene record \"" + tag + "\" at line " +
                              std::to_string(line_no));
        }
    }
    return scene;
}

}  // namespace ragrasp
