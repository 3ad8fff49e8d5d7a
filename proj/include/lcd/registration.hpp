#pragma once

#include <cstdint>

#include "lcd/geometry.hpp"
#include "lcd/matching.hpp"

namespace lcd {

struct RansacConfig {
    std::size_t max_iterations = 500000;
    std::size_t confirmation_iterations = 1000;
    double inlier_threshold = 0.03;
    std::size_t sample_size = 3;
    std::uint64_t seed = 0;
};

struct RegistrationResult {
    RigidTransform transform;
    CorrespondenceSet inlier_pairs;
    double inlier_rmse = 0.0;
    std::size_t iterations_used = 0;
};

struct InlierStats {
    std::size_t count = 0;
    double rmse = 0.0;
};

// Pairs (i, j) of c with ||a[i] - T(b[j])|| <= threshold; rmse is over
// those pairs only.
InlierStats count_inliers(const PointCloud& a, const PointCloud& b, const CorrespondenceSet& c,
                          const RigidTransform& T, double threshold);

// Seeded RANSAC rigid fit of the transform mapping b's points onto a's
// through the correspondences. The best hypothesis by inlier count
// (ties by lower rmse) is refit with kabsch_fit on its full inlier set.
// Stops early once the incumbent has survived confirmation_iterations
// consecutive iterations with mean inlier error within the threshold.
RegistrationResult ransac_register(const PointCloud& a, const PointCloud& b,
                                   const CorrespondenceSet& c, const RansacConfig& cfg);

} // namespace lcd
