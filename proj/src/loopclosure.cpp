#include "lcd/loopclosure.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

#include "lcd/errors.hpp"
#include "lcd/rng.hpp"

namespace lcd {

namespace {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RansacConfig pair_seeded(const RansacConfig& rcfg, std::int64_t query_id, std::int64_t cand_id) {
    RansacConfig out = rcfg;
    out.seed = mix_seed(mix_seed(rcfg.seed, static_cast<std::uint64_t>(query_id)),
                        static_cast<std::uint64_t>(cand_id));
    return out;
}

// Registration + RON gates on a pair whose correspondences and overlap
// are already known.
LoopVerdict verify_scored(const DescribedKeyframe& query, const DescribedKeyframe& cand,
                          const CorrespondenceSet& c, double o, const LoopConfig& cfg,
                          const RansacConfig& rcfg) {
    LoopVerdict v;
    v.query_id = query.id;
    v.candidate_id = cand.id;
    v.overlap = o;
    if (!(o > cfg.overlap_threshold)) {
        v.decision = LoopDecision::rejected_overlap;
        return v;
    }

    RegistrationResult reg;
    try {
        reg = ransac_register(query.points, cand.points, c, pair_seeded(rcfg, query.id, cand.id));
    } catch (const InsufficientCorrespondences&) {
        v.decision = LoopDecision::rejected_registration;
        return v;
    } catch (const NoConsensus&) {
        v.decision = LoopDecision::rejected_registration;
        return v;
    }

    v.transform = reg.transform;
    const double r = ron(query.points, cand.points, c, reg.transform, cfg.error_threshold);
    v.ron = r;
    v.decision = r > cfg.ron_threshold ? LoopDecision::accepted : LoopDecision::rejected_ron;
    return v;
}

} // namespace

const char* to_string(LoopDecision d) {
    switch (d) {
    case LoopDecision::rejected_overlap: return "rejected_overlap";
    case LoopDecision::rejected_registration: return "rejected_registration";
    case LoopDecision::rejected_ron: return "rejected_ron";
    case LoopDecision::accepted: return "accepted";
    }
    return "unknown";
}

DescribedKeyframe make_described(const KeyframeRecord& rec, const SamplingConfig& cfg,
                                 const DescriptorBackend& backend) {
    auto described = describe_keyframe(rec, cfg, backend);
    DescribedKeyframe out;
    out.id = rec.id;
    out.timestamp = rec.timestamp;
    out.pose_prior = rec.pose_prior;
    out.points = std::move(described.points);
    out.descriptors = std::move(described.descriptors);
    return out;
}

void KeyframeStore::push(DescribedKeyframe kf) {
    if (!entries_.empty() && kf.id <= entries_.back().kf.id) {
        throw InvariantViolation("KeyframeStore: ids must be strictly increasing");
    }
    Entry e;
    e.index = std::make_unique<NNIndex>(kf.descriptors);
    e.kf = std::move(kf);
    entries_.push_back(std::move(e));
}

double ron(const PointCloud& a, const PointCloud& b, const CorrespondenceSet& c,
           const RigidTransform& T, double error_threshold) {
    if (c.empty()) throw EmptyCorrespondences("ron: no correspondences");
    if (!T.is_valid()) throw InvariantViolation("ron: invalid transform");
    std::size_t near = 0;
    for (const auto& [i, j] : c.pairs) {
        if ((a.points[i] - apply(T, b.points[j])).norm() < error_threshold) ++near;
    }
    return static_cast<double>(near) / static_cast<double>(c.pairs.size());
}

LoopVerdict verify_pair(const DescribedKeyframe& query, const DescribedKeyframe& cand,
                        const LoopConfig& cfg, const RansacConfig& rcfg) {
    const CorrespondenceSet c = mutual_nn(query.descriptors, cand.descriptors);
    return verify_scored(query, cand, c, mnn_overlap(c), cfg, rcfg);
}

QueryResult query_loops(const KeyframeStore& db, const DescribedKeyframe& query,
                        const LoopConfig& cfg, const RansacConfig& rcfg, QueryMode mode) {
    std::vector<std::size_t> candidates;
    for (std::size_t pos = 0; pos < db.size(); ++pos) {
        const DescribedKeyframe& kf = db.keyframe(pos);
        if (kf.id >= query.id) {
            throw InvariantViolation("query_loops: database contains keyframe ids >= query id");
        }
        if (mode == QueryMode::setting1) {
            if (kf.id > query.id - static_cast<std::int64_t>(cfg.exclusion_window)) continue;
            if (cfg.positional_prior && query.pose_prior && kf.pose_prior) {
                const double gate =
                    cfg.positional_prior->multiplier * cfg.positional_prior->sigma_at(query.id);
                const double d =
                    (query.pose_prior->translation - kf.pose_prior->translation).norm();
                if (d > gate) continue;
            }
        }
        candidates.push_back(pos);
    }

    QueryResult result;
    if (candidates.empty()) return result;

    const NNIndex query_index(query.descriptors);
    std::vector<CorrespondenceSet> corrs(candidates.size());
    std::vector<double> overlaps(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const std::size_t pos = candidates[k];
        corrs[k] = mutual_nn(query.descriptors, query_index, db.keyframe(pos).descriptors,
                             db.index(pos));
        overlaps[k] = mnn_overlap(corrs[k]);
    }

    result.scored.resize(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        auto& row = result.scored[k];
        row.query_id = query.id;
        row.candidate_id = db.keyframe(candidates[k]).id;
        row.overlap = overlaps[k];
    }

    auto record = [&](std::size_t k, const LoopVerdict& v) {
        result.scored[k].ron = v.ron;
        result.scored[k].decision = v.decision;
    };

    if (cfg.rank_by_ron) {
        // Verify everything above the overlap gate, keep the best RON.
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (!(overlaps[k] > cfg.overlap_threshold)) continue;
            const LoopVerdict v = verify_scored(query, db.keyframe(candidates[k]), corrs[k],
                                                overlaps[k], cfg, rcfg);
            record(k, v);
            const double score = v.ron.value_or(-1.0);
            if (!result.best || score > result.best->ron.value_or(-1.0) ||
                (score == result.best->ron.value_or(-1.0) && v.overlap > result.best->overlap)) {
                result.best = v;
            }
        }
        if (!result.best) {
            // Nothing passed the gate; fall back to the highest overlap.
            const std::size_t k = static_cast<std::size_t>(
                std::max_element(overlaps.begin(), overlaps.end()) - overlaps.begin());
            const LoopVerdict v =
                verify_scored(query, db.keyframe(candidates[k]), corrs[k], overlaps[k], cfg, rcfg);
            record(k, v);
            result.best = v;
        }
        return result;
    }

    std::size_t best_k = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        if (overlaps[k] > overlaps[best_k]) best_k = k;
    }
    const LoopVerdict v = verify_scored(query, db.keyframe(candidates[best_k]), corrs[best_k],
                                        overlaps[best_k], cfg, rcfg);
    record(best_k, v);
    result.best = v;
    return result;
}

SequenceResult run_sequence(std::vector<DescribedKeyframe> keyframes, const LoopConfig& cfg,
                            const RansacConfig& rcfg, QueryMode mode, std::size_t stride) {
    if (stride == 0) throw InvariantViolation("run_sequence: stride must be positive");

    SequenceResult out;
    KeyframeStore db;
    for (std::size_t pos = 0; pos < keyframes.size(); pos += stride) {
        DescribedKeyframe& kf = keyframes[pos];
        if (db.size() > 0) {
            QueryResult q = query_loops(db, kf, cfg, rcfg, mode);
            if (q.best) out.verdicts.push_back(*q.best);
            out.score_log.insert(out.score_log.end(), q.scored.begin(), q.scored.end());
        }
        db.push(std::move(kf));
    }
    return out;
}

std::string format_score_log(const std::vector<ScoredPair>& rows) {
    std::string out = "query_id,candidate_id,overlap,ron,decision\n";
    for (const auto& row : rows) {
        out += std::to_string(row.query_id);
        out += ',';
        out += std::to_string(row.candidate_id);
        out += ',';
        out += fmt_g17(row.overlap);
        out += ',';
        if (row.ron) out += fmt_g17(*row.ron);
        out += ',';
        out += row.decision ? to_string(*row.decision) : "not_verified";
        out += '\n';
    }
    return out;
}

std::vector<ScoredPair> parse_score_log(const std::string& text) {
    std::vector<ScoredPair> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("query_id", 0) == 0) continue;

        std::array<std::string, 5> fields;
        std::size_t field = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= fields.size()) {
                    throw ParseError("score log line " + std::to_string(lineno) +
                                     ": too many fields");
                }
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != fields.size()) {
            throw ParseError("score log line " + std::to_string(lineno) + ": expected 5 fields");
        }

        ScoredPair row;
        try {
            row.query_id = std::stoll(fields[0]);
            row.candidate_id = std::stoll(fields[1]);
            row.overlap = std::stod(fields[2]);
            if (!fields[3].empty()) row.ron = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw ParseError("score log line " + std::to_string(lineno) + ": bad numeric field");
        }
        const std::string& d = fields[4];
        if (d == "not_verified") {
            row.decision = std::nullopt;
        } else if (d == "rejected_overlap") {
            row.decision = LoopDecision::rejected_overlap;
        } else if (d == "rejected_registration") {
            row.decision = LoopDecision::rejected_registration;
        } else if (d == "rejected_ron") {
            row.decision = LoopDecision::rejected_ron;
        } else if (d == "accepted") {
            row.decision = LoopDecision::accepted;
        } else {
            throw ParseError("score log line " + std::to_string(lineno) + ": unknown decision '" +
                             d + "'");
        }
        rows.push_back(row);
    }
    return rows;
}

std::string format_accepted_loops(const std::vector<LoopVerdict>& verdicts) {
    std::string out =
        "query_id,candidate_id,t00,t01,t02,t03,t10,t11,t12,t13,t20,t21,t22,t23,t30,t31,t32,t33\n";
    for (const auto& v : verdicts) {
        if (v.decision != LoopDecision::accepted || !v.transform) continue;
        out += std::to_string(v.query_id);
        out += ',';
        out += std::to_string(v.candidate_id);
        const Eigen::Matrix4d m = v.transform->to_matrix();
        for (int r = 0; r < 4; ++r) {
            for (int col = 0; col < 4; ++col) {
                out += ',';
                out += fmt_g17(m(r, col));
            }
        }
        out += '\n';
    }
    return out;
}

} // namespace lcd
