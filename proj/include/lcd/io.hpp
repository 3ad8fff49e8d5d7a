#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "lcd/descriptor_set.hpp"
#include "lcd/geometry.hpp"

namespace lcd {

// One keyframe as stored by the pipeline: id, capture time, its point
// cloud and (optionally) the pose estimate available when it was created.
struct KeyframeRecord {
    std::int64_t id = 0;
    double timestamp = 0.0;
    PointCloud cloud;
    std::optional<RigidTransform> pose_prior;
};

struct TrajectoryEntry {
    double timestamp = 0.0;
    RigidTransform pose;
};

// Timestamped pose sequence; timestamps strictly increasing.
struct Trajectory {
    std::vector<TrajectoryEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

// --- PLY (ascii / binary_little_endian, float x y z [+ intensity]) ---
PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, bool binary = true);

// --- packed f32 x,y,z,intensity scans ---
PointCloud read_lidar_bin(const std::filesystem::path& path);

// --- text trajectories: "timestamp tx ty tz qx qy qz qw", '#' comments ---
Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);

// --- L3DD descriptor files ---
// Little-endian layout: magic "L3DD", u32 version=1, u32 N, u32 d,
// N*3 f32 point coordinates, N*d f32 descriptor components.
struct DescriptorFile {
    PointCloud cloud;
    DescriptorSet descriptors;
};
DescriptorFile read_descriptors(const std::filesystem::path& path);
void write_descriptors(const std::filesystem::path& path, const PointCloud& cloud,
                       const DescriptorSet& descriptors);

// Writes bytes to a temp file in the target directory and renames it over
// path, so readers never observe partial output.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

} // namespace lcd
