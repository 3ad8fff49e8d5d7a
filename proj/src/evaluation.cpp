#include "lcd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "lcd/errors.hpp"
#include "lcd/kdtree.hpp"
#include "lcd/rng.hpp"

namespace lcd {

namespace {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double row_score(const ScoredPair& row, ScoreKind kind) {
    return kind == ScoreKind::overlap ? row.overlap : row.ron.value_or(0.0);
}

} // namespace

double gt_overlap(const PointCloud& a, const PointCloud& b, const RigidTransform& t_gt,
                  double dist) {
    if (!t_gt.is_valid()) throw InvariantViolation("gt_overlap: invalid transform");
    if (a.empty() || b.empty()) return 0.0;

    std::vector<Point3> moved(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) moved[j] = apply(t_gt, b.points[j]);
    const PointKdTree tree(moved);

    const double d2 = dist * dist;
    std::size_t hit = 0;
    for (const auto& p : a.points) {
        if (tree.nearest(p).sq_dist <= d2) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(a.size());
}

std::vector<ScoredPair> best_rows(const std::vector<ScoredPair>& log, ScoreKind kind) {
    std::map<std::int64_t, ScoredPair> best;
    for (const auto& row : log) {
        if (!row.decision) continue;
        const auto it = best.find(row.query_id);
        if (it == best.end() || row_score(row, kind) > row_score(it->second, kind)) {
            best[row.query_id] = row;
        }
    }
    std::vector<ScoredPair> out;
    out.reserve(best.size());
    for (const auto& [id, row] : best) out.push_back(row);
    return out;
}

PRCurve pr_curve(const std::vector<ScoredPair>& rows, const std::vector<GtLabel>& labels,
                 ScoreKind kind) {
    std::map<std::pair<std::int64_t, std::int64_t>, double> overlap_of;
    for (const auto& label : labels) overlap_of[{label.query_id, label.candidate_id}] = label.gt_overlap;

    std::vector<double> scores(rows.size());
    std::vector<bool> is_loop(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        scores[k] = row_score(rows[k], kind);
        const auto it = overlap_of.find({rows[k].query_id, rows[k].candidate_id});
        if (it == overlap_of.end()) {
            throw MissingLabel("no ground-truth label for pair " +
                               std::to_string(rows[k].query_id) + "," +
                               std::to_string(rows[k].candidate_id));
        }
        is_loop[k] = it->second > kLoopOverlapCutoff;
    }

    std::vector<double> thresholds(scores);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    if (thresholds.empty()) thresholds.push_back(0.0);
    thresholds.push_back(thresholds.back() + 1.0);

    PRCurve curve;
    curve.points.reserve(thresholds.size());
    for (const double thr : thresholds) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const bool accepted = scores[k] >= thr;
            if (accepted && is_loop[k]) ++tp;
            if (accepted && !is_loop[k]) ++fp;
            if (!accepted && is_loop[k]) ++fn;
        }
        PRPoint pt;
        pt.threshold = thr;
        pt.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
        pt.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
        curve.points.push_back(pt);
    }

    std::vector<PRPoint> by_recall(curve.points);
    std::stable_sort(by_recall.begin(), by_recall.end(), [](const PRPoint& x, const PRPoint& y) {
        if (x.recall != y.recall) return x.recall < y.recall;
        return x.precision > y.precision;
    });
    double auc = 0.0;
    for (std::size_t k = 1; k < by_recall.size(); ++k) {
        auc += (by_recall[k].recall - by_recall[k - 1].recall) *
               (by_recall[k].precision + by_recall[k - 1].precision) * 0.5;
    }
    curve.auc = auc;
    return curve;
}

std::string format_pr(const PRCurve& curve) {
    std::string out = "threshold,precision,recall\n";
    for (const auto& pt : curve.points) {
        out += fmt_g17(pt.threshold);
        out += ',';
        out += fmt_g17(pt.precision);
        out += ',';
        out += fmt_g17(pt.recall);
        out += '\n';
    }
    out += "auc=" + fmt_g17(curve.auc) + "\n";
    return out;
}

std::string format_labels(const std::vector<GtLabel>& labels) {
    std::string out = "query_id,candidate_id,gt_overlap\n";
    for (const auto& label : labels) {
        out += std::to_string(label.query_id);
        out += ',';
        out += std::to_string(label.candidate_id);
        out += ',';
        out += fmt_g17(label.gt_overlap);
        out += '\n';
    }
    return out;
}

std::vector<GtLabel> parse_labels(const std::string& text) {
    std::vector<GtLabel> labels;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("query_id", 0) == 0) continue;

        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        GtLabel label;
        if (!(ls >> label.query_id >> label.candidate_id >> label.gt_overlap)) {
            throw ParseError("labels line " + std::to_string(lineno) +
                             ": expected query_id,candidate_id,gt_overlap");
        }
        labels.push_back(label);
    }
    return labels;
}

double registration_recall(const std::vector<EvalPair>& pairs, const RansacConfig& rcfg,
                           double threshold, double match_dist) {
    if (pairs.empty()) throw DegenerateInput("registration_recall: no pairs");
    if (match_dist <= 0.0) match_dist = threshold;

    std::size_t successes = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const EvalPair& pair = pairs[k];

        RegistrationResult reg;
        try {
            const CorrespondenceSet c = mutual_nn(pair.desc_a, pair.desc_b);
            RansacConfig seeded = rcfg;
            seeded.seed = mix_seed(rcfg.seed, k);
            reg = ransac_register(pair.points_a, pair.points_b, c, seeded);
        } catch (const InsufficientCorrespondences&) {
            continue;
        } catch (const NoConsensus&) {
            continue;
        }

        const PointKdTree tree(pair.points_a.points);
        const double match2 = match_dist * match_dist;
        double err_sum = 0.0;
        std::size_t matched = 0;
        for (const auto& q : pair.points_b.points) {
            const auto hit = tree.nearest(apply(pair.t_gt, q));
            if (hit.sq_dist > match2) continue;
            err_sum += (pair.points_a.points[hit.index] - apply(reg.transform, q)).norm();
            ++matched;
        }
        if (matched > 0 && err_sum / static_cast<double>(matched) < threshold) ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(pairs.size());
}

AteResult ate_rmse(const Trajectory& est, const Trajectory& gt, double max_dt) {
    std::vector<std::size_t> est_ids;
    std::vector<std::size_t> gt_ids;
    for (std::size_t i = 0; i < est.entries.size(); ++i) {
        const double ts = est.entries[i].timestamp;
        const auto it = std::lower_bound(
            gt.entries.begin(), gt.entries.end(), ts,
            [](const TrajectoryEntry& e, double t) { return e.timestamp < t; });
        std::size_t best = gt.entries.size();
        double best_dt = max_dt;
        if (it != gt.entries.end() && std::abs(it->timestamp - ts) <= best_dt) {
            best = static_cast<std::size_t>(it - gt.entries.begin());
            best_dt = std::abs(it->timestamp - ts);
        }
        if (it != gt.entries.begin()) {
            const auto prev = it - 1;
            if (std::abs(prev->timestamp - ts) < best_dt ||
                (best == gt.entries.size() && std::abs(prev->timestamp - ts) <= best_dt)) {
                best = static_cast<std::size_t>(prev - gt.entries.begin());
            }
        }
        if (best < gt.entries.size()) {
            est_ids.push_back(i);
            gt_ids.push_back(best);
        }
    }

    if (est_ids.size() < 3) {
        throw InsufficientAssociations("ate_rmse: " + std::to_string(est_ids.size()) +
                                       " associations, need 3");
    }

    std::vector<Point3> est_pos(est_ids.size());
    std::vector<Point3> gt_pos(est_ids.size());
    for (std::size_t k = 0; k < est_ids.size(); ++k) {
        est_pos[k] = est.entries[est_ids[k]].pose.translation;
        gt_pos[k] = gt.entries[gt_ids[k]].pose.translation;
    }

    AteResult result;
    result.alignment = kabsch_fit(est_pos, gt_pos);

    double sq_sum = 0.0;
    for (std::size_t k = 0; k < est_ids.size(); ++k) {
        const RigidTransform err =
            compose(invert(gt.entries[gt_ids[k]].pose),
                    compose(result.alignment, est.entries[est_ids[k]].pose));
        sq_sum += err.translation.squaredNorm();
    }
    result.rmse = std::sqrt(sq_sum / static_cast<double>(est_ids.size()));
    return result;
}

std::string format_ate(const AteResult& result) {
    std::string out = "rmse_m=" + fmt_g17(result.rmse) + "\n";
    out += format_matrix4_text(result.alignment);
    return out;
}

} // namespace lcd
