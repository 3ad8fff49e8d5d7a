#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lcd/descriptor_set.hpp"
#include "lcd/geometry.hpp"
#include "lcd/io.hpp"

namespace lcd {

// Patches with fewer points than this are treated as undescribable.
inline constexpr std::size_t kMinPatchPoints = 16;

struct SamplingConfig {
    double fraction = 0.4;
    std::uint64_t seed = 0;
    double patch_radius = 2.5;
};

struct SubsampleResult {
    std::vector<std::size_t> indices;
    PointCloud points;
};

// Uniform draw without replacement of max(1, round(fraction * |cloud|))
// points, deterministic per cfg.seed. Indices are in draw order.
SubsampleResult subsample(const PointCloud& cloud, const SamplingConfig& cfg);

// All points with ||p - center|| <= radius, in cloud order.
// Throws EmptyPatch when fewer than min_points fall inside.
PointCloud extract_patch(const PointCloud& cloud, const Point3& center, double radius,
                         std::size_t min_points = kMinPatchPoints);

// Per-point unit normals from the smallest eigenvector of the k-NN
// covariance, oriented away from the cloud centroid. A rank-deficient
// neighbourhood yields the zero vector; callers skip those points.
std::vector<Eigen::Vector3d> estimate_normals(const PointCloud& cloud, std::size_t k);

// 33-bin FPFH (3 angular features x 11 bins) at the selected points,
// neighbourhoods taken from the full cloud within radius, L2-normalized.
// indices is filtered in place down to the points that produced a valid
// descriptor; rows of the result stay aligned with it.
DescriptorSet compute_fpfh(const PointCloud& cloud, std::vector<std::size_t>& indices,
                           double radius);

struct DescriptorBackend {
    enum class Kind { fpfh, external };

    Kind kind = Kind::fpfh;
    std::filesystem::path path;

    static DescriptorBackend make_fpfh() { return {Kind::fpfh, {}}; }
    static DescriptorBackend make_external(std::filesystem::path p) {
        return {Kind::external, std::move(p)};
    }
};

struct KeyframeDescriptors {
    PointCloud points;
    DescriptorSet descriptors;
};

// Subsamples the keyframe cloud (seed mixed with the keyframe id) and
// describes it with the chosen backend. The external backend loads an
// L3DD file; its point list replaces the subsample.
KeyframeDescriptors describe_keyframe(const KeyframeRecord& rec, const SamplingConfig& cfg,
                                      const DescriptorBackend& backend);

} // namespace lcd
