#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>

#include "ragrasp/cloud.hpp"
#include "ragrasp/geometry.hpp"

namespace ragrasp {

/// 32x32x32 binary occupancy over a 0.1 m cube centered on the grasp point,
/// expressed in the grasp frame. Packed one bit per cell, x-major then y
/// then z: linear index = (ix*32 + iy)*32 + iz, LSB-first within each byte.
struct VoxelGrid {
    static constexpr int kDim = 32;
    static constexpr int kCells = kDim * kDim * kDim;   // 32768
    static constexpr int kBytes = kCells / 8;           // 4096
    static constexpr double kEdge = 0.1;                // meters
    static constexpr double kResolution = kEdge / kDim; // 0.003125 m

    std::array<uint8_t, kBytes> bits{};

    static int linear_index(int ix, int iy, int iz) {
        return (ix * kDim + iy) * kDim + iz;
    }

    bool get(int ix, int iy, int iz) const {
        const int li = linear_index(ix, iy, iz);
        return (bits[li >> 3] >> (li & 7)) & 1u;
    }

    void set(int ix, int iy, int iz) {
        const int li = linear_index(ix, iy, iz);
        bits[li >> 3] |= static_cast<uint8_t>(1u << (li & 7));
    }

    bool operator==(const VoxelGrid& other) const { return bits == other.bits; }
};

/// Bin one grasp-frame coordinate. Returns false if the coordinate falls
/// outside [-edge/2, edge/2); half-open so each point lands in exactly one
/// cell and the grasp point itself maps to index 16.
inline bool voxel_bin(double q, int& index) {
    const double shifted = (q + VoxelGrid::kEdge / 2.0) / VoxelGrid::kResolution;
    const double f = std::floor(shifted);
    if (f < 0.0 || f >= static_cast<double>(VoxelGrid::kDim)) return false;
    index = static_cast<int>(f);
    return true;
}

/// Rasterize the object cloud into the grasp frame: each point is mapped by
/// the inverse grasp pose and binned; points outside the cube are ignored.
inline VoxelGrid voxelize(const PointCloud& object_cloud, const Pose& grasp) {
    VoxelGrid grid;
    const Pose inv = inverse(grasp);
    const Mat3 r = inv.matrix();
    for (const Vec3& p : object_cloud.points) {
        const Vec3 q = r * p + inv.translation;
        int ix, iy, iz;
        if (voxel_bin(q.x(), ix) && voxel_bin(q.y(), iy) && voxel_bin(q.z(), iz))
            grid.set(ix, iy, iz);
    }
    return grid;
}

inline int occupied_count(const VoxelGrid& grid) {
    int count = 0;
    for (uint8_t b : grid.bits) count += std::popcount(b);
    return count;
}

}  // namespace ragrasp
