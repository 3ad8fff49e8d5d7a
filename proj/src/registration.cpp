#include "lcd/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "lcd/errors.hpp"
#include "lcd/rng.hpp"

namespace lcd {

namespace {

constexpr double kMinTriangleArea = 1e-6;
constexpr std::size_t kSampleRetries = 32;

struct Score {
    std::size_t count = 0;
    double rmse = std::numeric_limits<double>::infinity();
    double mean = std::numeric_limits<double>::infinity();
};

Score score_hypothesis(const std::vector<Point3>& dst, const std::vector<Point3>& src,
                       const RigidTransform& T, double threshold,
                       std::vector<std::size_t>* inliers) {
    const double thr2 = threshold * threshold;
    double sq_sum = 0.0;
    double abs_sum = 0.0;
    std::size_t count = 0;
    if (inliers) inliers->clear();
    for (std::size_t k = 0; k < dst.size(); ++k) {
        const double sq = (dst[k] - apply(T, src[k])).squaredNorm();
        if (sq <= thr2) {
            sq_sum += sq;
            abs_sum += std::sqrt(sq);
            ++count;
            if (inliers) inliers->push_back(k);
        }
    }
    Score s;
    s.count = count;
    if (count > 0) {
        s.rmse = std::sqrt(sq_sum / static_cast<double>(count));
        s.mean = abs_sum / static_cast<double>(count);
    }
    return s;
}

bool spread_enough(const std::vector<Point3>& pts, const std::vector<std::size_t>& sample) {
    if (sample.size() < 3) return true;
    const Point3& p0 = pts[sample[0]];
    const Point3& p1 = pts[sample[1]];
    const Point3& p2 = pts[sample[2]];
    return 0.5 * (p1 - p0).cross(p2 - p0).norm() >= kMinTriangleArea;
}

} // namespace

InlierStats count_inliers(const PointCloud& a, const PointCloud& b, const CorrespondenceSet& c,
                          const RigidTransform& T, double threshold) {
    if (!T.is_valid()) throw InvariantViolation("count_inliers: invalid transform");
    const double thr2 = threshold * threshold;
    double sq_sum = 0.0;
    std::size_t count = 0;
    for (const auto& [i, j] : c.pairs) {
        const double sq = (a.points[i] - apply(T, b.points[j])).squaredNorm();
        if (sq <= thr2) {
            sq_sum += sq;
            ++count;
        }
    }
    InlierStats stats;
    stats.count = count;
    stats.rmse = count > 0 ? std::sqrt(sq_sum / static_cast<double>(count)) : 0.0;
    return stats;
}

RegistrationResult ransac_register(const PointCloud& a, const PointCloud& b,
                                   const CorrespondenceSet& c, const RansacConfig& cfg) {
    if (cfg.sample_size < 3) throw InvariantViolation("ransac_register: sample_size must be >= 3");
    if (cfg.max_iterations < 1) {
        throw InvariantViolation("ransac_register: max_iterations must be >= 1");
    }
    if (!(cfg.inlier_threshold > 0.0)) {
        throw InvariantViolation("ransac_register: inlier_threshold must be positive");
    }
    if (c.size() < cfg.sample_size) {
        throw InsufficientCorrespondences("ransac_register: " + std::to_string(c.size()) +
                                          " correspondences, need " +
                                          std::to_string(cfg.sample_size));
    }

    // Flatten correspondences so a hypothesis is scored over dst[k] ~ T(src[k]).
    std::vector<Point3> dst(c.size());
    std::vector<Point3> src(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        dst[k] = a.points[c.pairs[k].first];
        src[k] = b.points[c.pairs[k].second];
    }

    Score best;
    RigidTransform best_transform = RigidTransform::identity();
    bool have_best = false;
    std::size_t streak = 0;
    std::size_t iterations = 0;

    std::vector<Point3> sample_src(cfg.sample_size);
    std::vector<Point3> sample_dst(cfg.sample_size);

    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        iterations = iter + 1;
        Rng rng(mix_seed(cfg.seed, iter));

        std::vector<std::size_t> sample;
        for (std::size_t attempt = 0; attempt < kSampleRetries; ++attempt) {
            auto draw = rng.sample_without_replacement(cfg.sample_size, c.size());
            if (spread_enough(src, draw) && spread_enough(dst, draw)) {
                sample = std::move(draw);
                break;
            }
        }
        bool improved = false;
        if (!sample.empty()) {
            for (std::size_t k = 0; k < cfg.sample_size; ++k) {
                sample_src[k] = src[sample[k]];
                sample_dst[k] = dst[sample[k]];
            }
            RigidTransform hyp;
            bool ok = true;
            try {
                hyp = kabsch_fit(sample_src, sample_dst);
            } catch (const DegenerateInput&) {
                ok = false;
            }
            if (ok) {
                const Score s = score_hypothesis(dst, src, hyp, cfg.inlier_threshold, nullptr);
                if (s.count > 0 &&
                    (!have_best || s.count > best.count ||
                     (s.count == best.count && s.rmse < best.rmse))) {
                    best = s;
                    best_transform = hyp;
                    have_best = true;
                    improved = true;
                }
            }
        }

        if (improved) {
            streak = 0;
        } else if (have_best) {
            ++streak;
        }
        if (have_best && best.count >= cfg.sample_size && best.mean <= cfg.inlier_threshold &&
            streak >= cfg.confirmation_iterations) {
            break;
        }
    }

    if (!have_best || best.count < cfg.sample_size) {
        throw NoConsensus("ransac_register: best hypothesis has " + std::to_string(best.count) +
                          " inliers after " + std::to_string(iterations) + " iterations");
    }

    std::vector<std::size_t> inlier_ids;
    score_hypothesis(dst, src, best_transform, cfg.inlier_threshold, &inlier_ids);

    std::vector<Point3> in_src(inlier_ids.size());
    std::vector<Point3> in_dst(inlier_ids.size());
    for (std::size_t k = 0; k < inlier_ids.size(); ++k) {
        in_src[k] = src[inlier_ids[k]];
        in_dst[k] = dst[inlier_ids[k]];
    }

    RegistrationResult result;
    result.transform = kabsch_fit(in_src, in_dst);
    result.inlier_pairs.size_a = c.size_a;
    result.inlier_pairs.size_b = c.size_b;
    result.inlier_pairs.pairs.reserve(inlier_ids.size());
    for (const std::size_t k : inlier_ids) result.inlier_pairs.pairs.push_back(c.pairs[k]);

    double sq_sum = 0.0;
    for (std::size_t k = 0; k < inlier_ids.size(); ++k) {
        sq_sum += (in_dst[k] - apply(result.transform, in_src[k])).squaredNorm();
    }
    result.inlier_rmse = std::sqrt(sq_sum / static_cast<double>(inlier_ids.size()));
    result.iterations_used = iterations;
    return result;
}

} // namespace lcd
