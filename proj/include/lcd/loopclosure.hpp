#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcd/descriptors.hpp"
#include "lcd/geometry.hpp"
#include "lcd/io.hpp"
#include "lcd/matching.hpp"
#include "lcd/registration.hpp"

namespace lcd {

// 3-sigma style gate on pose-prior distance between query and candidate.
// sigmas is indexed by keyframe id; out-of-range ids use sigma_default.
struct PositionalPrior {
    std::vector<double> sigmas;
    double sigma_default = 1.0;
    double multiplier = 3.0;

    double sigma_at(std::int64_t id) const {
        const auto idx = static_cast<std::size_t>(id);
        return (id >= 0 && idx < sigmas.size()) ? sigmas[idx] : sigma_default;
    }
};

struct LoopConfig {
    double overlap_threshold = 0.13;
    double error_threshold = 0.1;
    double ron_threshold = 0.2;
    std::size_t exclusion_window = 100;
    std::optional<PositionalPrior> positional_prior;
    // Verify every candidate above the overlap gate and pick the best by
    // RON instead of verifying only the highest-overlap one.
    bool rank_by_ron = false;
};

enum class LoopDecision { rejected_overlap, rejected_registration, rejected_ron, accepted };
const char* to_string(LoopDecision d);

struct LoopVerdict {
    std::int64_t query_id = 0;
    std::int64_t candidate_id = 0;
    double overlap = 0.0;
    std::optional<RigidTransform> transform; // maps candidate points into the query frame
    std::optional<double> ron;
    LoopDecision decision = LoopDecision::rejected_overlap;
};

// One row of the score log. decision is empty for candidates that were
// scored but not selected for verification.
struct ScoredPair {
    std::int64_t query_id = 0;
    std::int64_t candidate_id = 0;
    double overlap = 0.0;
    std::optional<double> ron;
    std::optional<LoopDecision> decision;
};

// A keyframe ready for querying: subsampled points plus their descriptors.
struct DescribedKeyframe {
    std::int64_t id = 0;
    double timestamp = 0.0;
    std::optional<RigidTransform> pose_prior;
    PointCloud points;
    DescriptorSet descriptors;
};

DescribedKeyframe make_described(const KeyframeRecord& rec, const SamplingConfig& cfg,
                                 const DescriptorBackend& backend);

// Append-only keyframe database; ids must arrive strictly increasing.
// Each entry keeps a prebuilt NN index for repeated queries.
class KeyframeStore {
public:
    void push(DescribedKeyframe kf);
    std::size_t size() const { return entries_.size(); }
    const DescribedKeyframe& keyframe(std::size_t pos) const { return entries_[pos].kf; }
    const NNIndex& index(std::size_t pos) const { return *entries_[pos].index; }

private:
    struct Entry {
        DescribedKeyframe kf;
        std::unique_ptr<NNIndex> index;
    };
    std::vector<Entry> entries_;
};

// Fraction of correspondences whose endpoints land within error_threshold
// of each other after mapping b through T.
double ron(const PointCloud& a, const PointCloud& b, const CorrespondenceSet& c,
           const RigidTransform& T, double error_threshold);

// Full single-pair decision: overlap gate, RANSAC registration, RON gate.
LoopVerdict verify_pair(const DescribedKeyframe& query, const DescribedKeyframe& cand,
                        const LoopConfig& cfg, const RansacConfig& rcfg);

enum class QueryMode { setting1, setting2 };

struct QueryResult {
    std::optional<LoopVerdict> best;
    std::vector<ScoredPair> scored;
};

// Scores the admissible candidates for one query and verifies the
// highest-overlap one (or all, under rank_by_ron). setting1 excludes the
// most recent exclusion_window keyframes and applies the positional
// prior when configured; setting2 scans every prior keyframe.
QueryResult query_loops(const KeyframeStore& db, const DescribedKeyframe& query,
                        const LoopConfig& cfg, const RansacConfig& rcfg, QueryMode mode);

struct SequenceResult {
    std::vector<LoopVerdict> verdicts;
    std::vector<ScoredPair> score_log;
};

// Runs the incremental protocol: each keyframe serves as a query against
// the database of its predecessors, then joins the database. stride > 1
// keeps every stride-th keyframe only.
SequenceResult run_sequence(std::vector<DescribedKeyframe> keyframes, const LoopConfig& cfg,
                            const RansacConfig& rcfg, QueryMode mode, std::size_t stride = 1);

// CSV: query_id,candidate_id,overlap,ron,decision (ron empty when absent,
// decision "not_verified" for unselected candidates).
std::string format_score_log(const std::vector<ScoredPair>& rows);
std::vector<ScoredPair> parse_score_log(const std::string& text);

// CSV: query_id,candidate_id followed by the row-major 4x4 transform,
// accepted verdicts only.
std::string format_accepted_loops(const std::vector<LoopVerdict>& verdicts);

} // namespace lcd
