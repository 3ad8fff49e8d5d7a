#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcd/geometry.hpp"
#include "lcd/io.hpp"
#include "lcd/loopclosure.hpp"
#include "lcd/registration.hpp"

namespace lcd {

// Pairs with ground-truth overlap above this fraction count as true loops.
inline constexpr double kLoopOverlapCutoff = 0.3;

struct GtLabel {
    std::int64_t query_id = 0;
    std::int64_t candidate_id = 0;
    double gt_overlap = 0.0;

    bool is_loop() const { return gt_overlap > kLoopOverlapCutoff; }
};

// Fraction of a's points whose nearest neighbour in t_gt(b) lies within
// dist (1 m suits LiDAR-scale clouds; use ~0.1 m indoors).
double gt_overlap(const PointCloud& a, const PointCloud& b, const RigidTransform& t_gt,
                  double dist = 1.0);

struct PRPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct PRCurve {
    std::vector<PRPoint> points; // ascending by threshold
    double auc = 0.0;
};

enum class ScoreKind { overlap, ron };

// Reduces a full score log to the one verified row per query demanded by
// the PR protocol. Queries verified more than once keep their
// best-scoring row.
std::vector<ScoredPair> best_rows(const std::vector<ScoredPair>& log, ScoreKind kind);

// Threshold sweep over the given rows' scores. Every row must have a
// label; a pair without one raises MissingLabel. AUC is the trapezoidal
// area over the recall axis.
PRCurve pr_curve(const std::vector<ScoredPair>& rows, const std::vector<GtLabel>& labels,
                 ScoreKind kind);

// CSV: threshold,precision,recall rows plus an auc=<value> footer line.
std::string format_pr(const PRCurve& curve);

// CSV: query_id,candidate_id,gt_overlap.
std::string format_labels(const std::vector<GtLabel>& labels);
std::vector<GtLabel> parse_labels(const std::string& text);

// One registration benchmark pair: subsampled clouds with descriptors and
// the ground-truth transform mapping b's points onto a's.
struct EvalPair {
    PointCloud points_a;
    DescriptorSet desc_a;
    PointCloud points_b;
    DescriptorSet desc_b;
    RigidTransform t_gt;
};

// Fraction of pairs whose mean ground-truth-correspondence error after
// RANSAC registration is below threshold. Pairs that fail to register
// count as failures. match_dist selects the ground-truth correspondences
// (nearest neighbour under t_gt); <= 0 uses threshold.
double registration_recall(const std::vector<EvalPair>& pairs, const RansacConfig& rcfg,
                           double threshold = 0.2, double match_dist = 0.0);

struct AteResult {
    double rmse = 0.0;
    RigidTransform alignment;
};

// Absolute trajectory error: associates est to gt entries by nearest
// timestamp within max_dt, aligns est positions onto gt by least squares,
// and reports the RMS translational residual.
AteResult ate_rmse(const Trajectory& est, const Trajectory& gt, double max_dt = 0.02);

// "rmse_m=<value>" line plus the 16-float row-major alignment.
std::string format_ate(const AteResult& result);

} // namespace lcd
