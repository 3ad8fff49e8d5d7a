#include "lcd/descriptors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lcd/errors.hpp"
#include "lcd/kdtree.hpp"
#include "lcd/rng.hpp"

namespace lcd {

namespace {

constexpr std::size_t kFpfhBins = 11;
constexpr std::size_t kFpfhDim = 3 * kFpfhBins;
constexpr std::size_t kNormalNeighbors = 16;

using Histogram = std::array<double, kFpfhDim>;

std::size_t clamp_bin(double t) {
    if (t < 0.0) return 0;
    const auto b = static_cast<std::size_t>(t);
    return b >= kFpfhBins ? kFpfhBins - 1 : b;
}

// Three angular pair features between (p, n_p) and (q, n_q), binned into
// the 11-bin blocks of hist. Returns false for degenerate pairs.
bool accumulate_pair(const Eigen::Vector3d& p, const Eigen::Vector3d& np, const Eigen::Vector3d& q,
                     const Eigen::Vector3d& nq, Histogram& hist) {
    const Eigen::Vector3d dp = q - p;
    const double dist = dp.norm();
    if (dist <= 0.0) return false;

    const Eigen::Vector3d& u = np;
    Eigen::Vector3d v = dp.cross(u);
    const double vn = v.norm();
    if (vn <= 1e-12 * dist) return false;
    v /= vn;
    const Eigen::Vector3d w = u.cross(v);

    const double f1 = v.dot(nq);
    const double f2 = u.dot(dp) / dist;
    const double f3 = std::atan2(w.dot(nq), u.dot(nq));

    hist[clamp_bin((f1 + 1.0) * 0.5 * kFpfhBins)] += 1.0;
    hist[kFpfhBins + clamp_bin((f2 + 1.0) * 0.5 * kFpfhBins)] += 1.0;
    hist[2 * kFpfhBins +
         clamp_bin((f3 + std::numbers::pi) / (2.0 * std::numbers::pi) * kFpfhBins)] += 1.0;
    return true;
}

} // namespace

SubsampleResult subsample(const PointCloud& cloud, const SamplingConfig& cfg) {
    if (cloud.empty()) throw DegenerateInput("subsample: empty cloud");
    if (!(cfg.fraction > 0.0) || cfg.fraction > 1.0) {
        throw InvariantViolation("subsample: fraction must be in (0,1]");
    }
    auto count = static_cast<std::size_t>(
        std::max<long>(1, std::lround(cfg.fraction * static_cast<double>(cloud.size()))));
    count = std::min(count, cloud.size());

    Rng rng(cfg.seed);
    SubsampleResult out;
    out.indices = rng.sample_without_replacement(count, cloud.size());
    out.points.points.reserve(count);
    if (cloud.has_intensity()) out.points.intensities.reserve(count);
    for (const std::size_t i : out.indices) {
        out.points.points.push_back(cloud.points[i]);
        if (cloud.has_intensity()) out.points.intensities.push_back(cloud.intensities[i]);
    }
    return out;
}

PointCloud extract_patch(const PointCloud& cloud, const Point3& center, double radius,
                         std::size_t min_points) {
    if (!(radius > 0.0)) throw InvariantViolation("extract_patch: radius must be positive");
    const double r2 = radius * radius;
    PointCloud patch;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if ((cloud.points[i] - center).squaredNorm() <= r2) {
            patch.points.push_back(cloud.points[i]);
            if (cloud.has_intensity()) patch.intensities.push_back(cloud.intensities[i]);
        }
    }
    if (patch.size() < min_points) {
        throw EmptyPatch("patch has " + std::to_string(patch.size()) + " points, need " +
                         std::to_string(min_points));
    }
    return patch;
}

std::vector<Eigen::Vector3d> estimate_normals(const PointCloud& cloud, std::size_t k) {
    if (k < 3) throw InvariantViolation("estimate_normals: k must be at least 3");
    if (cloud.size() <= k) {
        throw DegenerateInput("estimate_normals: cloud must have more than k points");
    }

    const PointKdTree tree(cloud.points);
    const Point3 centroid =
        std::accumulate(cloud.points.begin(), cloud.points.end(), Point3(0, 0, 0)) /
        static_cast<double>(cloud.size());

    std::vector<Eigen::Vector3d> normals(cloud.size(), Eigen::Vector3d::Zero());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto hits = tree.knearest(cloud.points[i], k);

        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (const auto& h : hits) mean += cloud.points[h.index];
        mean /= static_cast<double>(hits.size());

        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const auto& h : hits) {
            const Eigen::Vector3d d = cloud.points[h.index] - mean;
            cov += d * d.transpose();
        }

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        const Eigen::Vector3d evals = eig.eigenvalues();
        if (!(evals(2) > 0.0) || evals(1) <= 1e-9 * evals(2)) continue;

        Eigen::Vector3d n = eig.eigenvectors().col(0);
        const double outward = n.dot(cloud.points[i] - centroid);
        if (std::abs(outward) > 1e-9) {
            if (outward < 0.0) n = -n;
        } else {
            // Centroid lies in the tangent plane; orient by the dominant
            // component so the whole cloud still gets a consistent sign.
            int major;
            n.cwiseAbs().maxCoeff(&major);
            if (n(major) < 0.0) n = -n;
        }
        normals[i] = n;
    }
    return normals;
}

DescriptorSet compute_fpfh(const PointCloud& cloud, std::vector<std::size_t>& indices,
                           double radius) {
    if (!(radius > 0.0)) throw InvariantViolation("compute_fpfh: radius must be positive");
    if (indices.empty()) throw EmptyPatch("compute_fpfh: no points selected");
    for (const std::size_t i : indices) {
        if (i >= cloud.size()) throw InvariantViolation("compute_fpfh: index out of range");
    }
    if (cloud.size() <= kNormalNeighbors) {
        throw DegenerateInput("compute_fpfh: cloud too small for normal estimation");
    }

    const auto normals = estimate_normals(cloud, kNormalNeighbors);
    const PointKdTree tree(cloud.points);

    std::vector<std::vector<std::size_t>> neighborhoods(cloud.size());
    std::vector<char> neighborhood_done(cloud.size(), 0);
    auto neighbors_of = [&](std::size_t i) -> const std::vector<std::size_t>& {
        if (!neighborhood_done[i]) {
            auto nb = tree.radius_indices(cloud.points[i], radius);
            nb.erase(std::remove(nb.begin(), nb.end(), i), nb.end());
            neighborhoods[i] = std::move(nb);
            neighborhood_done[i] = 1;
        }
        return neighborhoods[i];
    };

    // SPFH per point, computed on demand. A point without a valid normal
    // or without usable pairs has no SPFH and is skipped everywhere.
    std::vector<Histogram> spfh(cloud.size());
    std::vector<char> spfh_state(cloud.size(), 0); // 0 unknown, 1 valid, 2 invalid
    auto spfh_of = [&](std::size_t i) -> const Histogram* {
        if (spfh_state[i] == 0) {
            spfh_state[i] = 2;
            if (normals[i].squaredNorm() > 0.0) {
                Histogram h{};
                double pairs = 0.0;
                for (const std::size_t j : neighbors_of(i)) {
                    if (normals[j].squaredNorm() == 0.0) continue;
                    if (accumulate_pair(cloud.points[i], normals[i], cloud.points[j], normals[j],
                                        h)) {
                        pairs += 1.0;
                    }
                }
                if (pairs > 0.0) {
                    for (double& b : h) b /= pairs;
                    spfh[i] = h;
                    spfh_state[i] = 1;
                }
            }
        }
        return spfh_state[i] == 1 ? &spfh[i] : nullptr;
    };

    std::vector<std::size_t> kept;
    std::vector<float> data;
    kept.reserve(indices.size());
    data.reserve(indices.size() * kFpfhDim);

    for (const std::size_t i : indices) {
        const Histogram* own = spfh_of(i);
        if (own == nullptr) continue;
        const auto& nb = neighbors_of(i);
        if (nb.size() + 1 < kMinPatchPoints) continue;

        Histogram acc = *own;
        Histogram weighted{};
        double used = 0.0;
        for (const std::size_t j : nb) {
            const Histogram* hj = spfh_of(j);
            if (hj == nullptr) continue;
            const double w = (cloud.points[i] - cloud.points[j]).norm();
            if (w <= 0.0) continue;
            for (std::size_t b = 0; b < kFpfhDim; ++b) weighted[b] += (*hj)[b] / w;
            used += 1.0;
        }
        if (used > 0.0) {
            for (std::size_t b = 0; b < kFpfhDim; ++b) acc[b] += weighted[b] / used;
        }

        double norm2 = 0.0;
        for (const double b : acc) norm2 += b * b;
        if (norm2 <= 0.0) continue;
        const double inv = 1.0 / std::sqrt(norm2);
        for (const double b : acc) data.push_back(static_cast<float>(b * inv));
        kept.push_back(i);
    }

    if (kept.empty()) throw EmptyPatch("compute_fpfh: no describable points");
    indices = std::move(kept);
    DescriptorSet out(kFpfhDim, std::move(data));
    out.normalize();
    return out;
}

KeyframeDescriptors describe_keyframe(const KeyframeRecord& rec, const SamplingConfig& cfg,
                                      const DescriptorBackend& backend) {
    if (backend.kind == DescriptorBackend::Kind::external) {
        DescriptorFile file = read_descriptors(backend.path);
        file.descriptors.check_unit_norm();
        return {std::move(file.cloud), std::move(file.descriptors)};
    }

    SamplingConfig keyed = cfg;
    keyed.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rec.id));
    auto sampled = subsample(rec.cloud, keyed);
    DescriptorSet descs = compute_fpfh(rec.cloud, sampled.indices, cfg.patch_radius);

    PointCloud points;
    points.points.reserve(sampled.indices.size());
    for (const std::size_t i : sampled.indices) points.points.push_back(rec.cloud.points[i]);
    return {std::move(points), std::move(descs)};
}

} // namespace lcd
