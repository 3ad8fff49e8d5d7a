#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "lcd/config.hpp"
#include "lcd/descriptors.hpp"
#include "lcd/errors.hpp"
#include "lcd/evaluation.hpp"
#include "lcd/io.hpp"
#include "lcd/loopclosure.hpp"
#include "lcd/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::uint64_t seed = 0;
    std::string config;
    std::string out;
    std::string profile;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "RNG seed");
    cmd->add_option("--config", opts.config, "key=value config file");
    cmd->add_option("--out", opts.out, "output file or directory");
    cmd->add_option("--profile", opts.profile, "dataset profile: lidar or indoor");
}

lcd::PipelineConfig build_config(const CommonOpts& opts, const std::string& manifest_profile = "") {
    lcd::PipelineConfig cfg;
    bool config_has_profile = false;
    if (!opts.config.empty()) {
        const auto kv = lcd::KeyValueFile::load(opts.config);
        config_has_profile = kv.has("profile");
        cfg = lcd::make_pipeline_config(kv, fs::path(opts.config).parent_path());
    }
    if (!manifest_profile.empty() && !config_has_profile && opts.profile.empty()) {
        lcd::apply_profile(cfg, manifest_profile);
    }
    if (!opts.profile.empty()) lcd::apply_profile(cfg, opts.profile);
    cfg.sampling.seed = opts.seed;
    cfg.ransac.seed = opts.seed;
    return cfg;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw lcd::IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void require_exists(const fs::path& path) {
    if (!fs::exists(path)) throw lcd::IoError("missing input path " + path.string());
}

lcd::PointCloud read_cloud(const fs::path& path) {
    require_exists(path);
    const std::string ext = path.extension().string();
    if (ext == ".ply") return lcd::read_ply(path);
    if (ext == ".bin") return lcd::read_lidar_bin(path);
    throw lcd::UnsupportedFormat("unknown cloud format '" + ext + "' for " + path.string());
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
    } else {
        lcd::atomic_write_file(out, text);
    }
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --- detect-loops ---

struct DetectOpts {
    CommonOpts common;
    std::string manifest;
    std::string mode = "setting1";
    std::size_t stride = 1;
    std::string backend = "auto";
    bool rank_by_ron = false;
};

int run_detect_loops(const DetectOpts& opts) {
    const lcd::Manifest manifest = lcd::load_manifest(opts.manifest);
    lcd::PipelineConfig cfg = build_config(opts.common, manifest.profile);
    if (opts.rank_by_ron) cfg.loop.rank_by_ron = true;
    if (opts.common.out.empty()) throw lcd::IoError("detect-loops requires --out directory");

    lcd::Trajectory traj;
    if (manifest.trajectory) {
        require_exists(*manifest.trajectory);
        traj = lcd::read_trajectory(*manifest.trajectory);
    }

    std::vector<lcd::DescribedKeyframe> described;
    described.reserve(manifest.entries.size());
    for (std::size_t k = 0; k < manifest.entries.size(); ++k) {
        const auto& entry = manifest.entries[k];
        lcd::KeyframeRecord rec;
        rec.id = entry.id;
        rec.timestamp = 0.1 * static_cast<double>(entry.id);
        rec.cloud = read_cloud(entry.cloud);
        if (k < traj.size()) {
            rec.timestamp = traj.entries[k].timestamp;
            rec.pose_prior = traj.entries[k].pose;
        }

        lcd::DescriptorBackend backend = lcd::DescriptorBackend::make_fpfh();
        if (opts.backend == "external" ||
            (opts.backend == "auto" && entry.descriptors.has_value())) {
            if (!entry.descriptors) {
                throw lcd::IoError("keyframe " + std::to_string(entry.id) +
                                   " has no descriptor file but --backend external was given");
            }
            require_exists(*entry.descriptors);
            backend = lcd::DescriptorBackend::make_external(*entry.descriptors);
        }
        described.push_back(lcd::make_described(rec, cfg.sampling, backend));
    }

    const lcd::QueryMode mode =
        opts.mode == "setting2" ? lcd::QueryMode::setting2 : lcd::QueryMode::setting1;
    const lcd::SequenceResult result =
        lcd::run_sequence(std::move(described), cfg.loop, cfg.ransac, mode, opts.stride);

    fs::create_directories(opts.common.out);
    const fs::path out_dir(opts.common.out);
    lcd::atomic_write_file(out_dir / "score_log.csv", lcd::format_score_log(result.score_log));
    lcd::atomic_write_file(out_dir / "accepted_loops.csv",
                           lcd::format_accepted_loops(result.verdicts));

    std::size_t accepted = 0;
    for (const auto& v : result.verdicts) {
        if (v.decision == lcd::LoopDecision::accepted) ++accepted;
    }
    std::cout << "keyframes=" << manifest.entries.size() << " scored=" << result.score_log.size()
              << " accepted=" << accepted << "\n";
    return 0;
}

// --- register-pair ---

struct RegisterOpts {
    CommonOpts common;
    std::string cloud_a;
    std::string cloud_b;
    std::string desc_a;
    std::string desc_b;
};

int run_register_pair(const RegisterOpts& opts) {
    const lcd::PipelineConfig cfg = build_config(opts.common);

    auto describe = [&](const std::string& cloud_path, const std::string& desc_path,
                        std::int64_t id) {
        lcd::KeyframeRecord rec;
        rec.id = id;
        rec.cloud = read_cloud(cloud_path);
        const auto backend = desc_path.empty()
                                 ? lcd::DescriptorBackend::make_fpfh()
                                 : lcd::DescriptorBackend::make_external(desc_path);
        return lcd::make_described(rec, cfg.sampling, backend);
    };

    const lcd::DescribedKeyframe a = describe(opts.cloud_a, opts.desc_a, 1);
    const lcd::DescribedKeyframe b = describe(opts.cloud_b, opts.desc_b, 0);

    const lcd::LoopVerdict v = lcd::verify_pair(a, b, cfg.loop, cfg.ransac);

    std::string text = "overlap=" + fmt_g17(v.overlap);
    if (v.ron) text += " ron=" + fmt_g17(*v.ron);
    text += "\n";
    if (v.transform) text += lcd::format_matrix4_text(*v.transform);
    text += "decision=";
    text += lcd::to_string(v.decision);
    text += "\n";
    emit(text, opts.common.out);
    if (!opts.common.out.empty()) std::cout << text;

    if (v.decision == lcd::LoopDecision::rejected_registration) return 2;
    return 0;
}

// --- eval-pr ---

struct EvalPrOpts {
    CommonOpts common;
    std::string log;
    std::string labels;
    std::string score = "ron";
};

int run_eval_pr(const EvalPrOpts& opts) {
    require_exists(opts.log);
    require_exists(opts.labels);
    const auto kind = opts.score == "overlap" ? lcd::ScoreKind::overlap : lcd::ScoreKind::ron;
    const auto rows = lcd::parse_score_log(slurp(opts.log));
    const auto labels = lcd::parse_labels(slurp(opts.labels));
    const auto curve = lcd::pr_curve(lcd::best_rows(rows, kind), labels, kind);
    emit(lcd::format_pr(curve), opts.common.out);
    return 0;
}

// --- eval-ate ---

struct EvalAteOpts {
    CommonOpts common;
    std::string est;
    std::string gt;
    double max_dt = 0.02;
};

int run_eval_ate(const EvalAteOpts& opts) {
    require_exists(opts.est);
    require_exists(opts.gt);
    const auto est = lcd::read_trajectory(opts.est);
    const auto gt = lcd::read_trajectory(opts.gt);
    const auto result = lcd::ate_rmse(est, gt, opts.max_dt);
    emit(lcd::format_ate(result), opts.common.out);
    return 0;
}

// --- extract-fpfh ---

struct ExtractOpts {
    CommonOpts common;
    std::string cloud;
    std::int64_t id = 0;
};

int run_extract_fpfh(const ExtractOpts& opts) {
    const lcd::PipelineConfig cfg = build_config(opts.common);
    if (opts.common.out.empty()) throw lcd::IoError("extract-fpfh requires --out file");

    lcd::KeyframeRecord rec;
    rec.id = opts.id;
    rec.cloud = read_cloud(opts.cloud);
    const auto described =
        lcd::describe_keyframe(rec, cfg.sampling, lcd::DescriptorBackend::make_fpfh());
    lcd::write_descriptors(opts.common.out, described.points, described.descriptors);
    std::cout << "points=" << described.points.size() << " dim=" << described.descriptors.dim()
              << "\n";
    return 0;
}

// --- gen-synthetic ---

struct GenOpts {
    CommonOpts common;
    std::size_t frames = 200;
    std::size_t loops = 5;
    double crop = 0.6;
    double density = 2000.0;
    double noise = 0.002;
};

int run_gen_synthetic(const GenOpts& opts) {
    CommonOpts common = opts.common;
    if (common.profile.empty()) common.profile = "indoor";
    const lcd::PipelineConfig cfg = build_config(common);
    if (common.out.empty()) throw lcd::IoError("gen-synthetic requires --out directory");

    lcd::TrajectorySpec spec;
    spec.frames = opts.frames;
    spec.loops = opts.loops;
    spec.crop_fraction = opts.crop;
    spec.density = opts.density;
    spec.noise_sigma = opts.noise;
    spec.seed = common.seed;
    const lcd::SyntheticSequence seq = lcd::gen_trajectory(spec);

    const fs::path out_dir(common.out);
    fs::create_directories(out_dir / "clouds");
    fs::create_directories(out_dir / "descriptors");

    std::string manifest = "profile=" + cfg.profile + "\ntrajectory=groundtruth.txt\n";
    char name[64];
    for (const auto& rec : seq.keyframes) {
        std::snprintf(name, sizeof(name), "clouds/%06lld.ply",
                      static_cast<long long>(rec.id));
        const std::string cloud_rel = name;
        lcd::write_ply(out_dir / cloud_rel, rec.cloud);

        std::snprintf(name, sizeof(name), "descriptors/%06lld.l3dd",
                      static_cast<long long>(rec.id));
        const std::string desc_rel = name;
        const auto described =
            lcd::describe_keyframe(rec, cfg.sampling, lcd::DescriptorBackend::make_fpfh());
        lcd::write_descriptors(out_dir / desc_rel, described.points, described.descriptors);

        manifest += "cloud." + std::to_string(rec.id) + "=" + cloud_rel + "\n";
        manifest += "desc." + std::to_string(rec.id) + "=" + desc_rel + "\n";
    }

    lcd::write_trajectory(out_dir / "groundtruth.txt", seq.ground_truth);
    lcd::atomic_write_file(out_dir / "labels.csv",
                           lcd::format_labels(lcd::sequence_labels(seq, spec.view_radius,
                                                                   cfg.gt_label_dist)));

    std::string loops_csv =
        "query_id,candidate_id,overlap,"
        "t00,t01,t02,t03,t10,t11,t12,t13,t20,t21,t22,t23,t30,t31,t32,t33\n";
    for (const auto& loop : seq.loops) {
        loops_csv += std::to_string(loop.later_id);
        loops_csv += ',';
        loops_csv += std::to_string(loop.earlier_id);
        loops_csv += ',';
        loops_csv += fmt_g17(loop.overlap);
        const Eigen::Matrix4d m = loop.relative.to_matrix();
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                loops_csv += ',';
                loops_csv += fmt_g17(m(r, c));
            }
        }
        loops_csv += '\n';
    }
    lcd::atomic_write_file(out_dir / "planted_loops.csv", loops_csv);
    lcd::atomic_write_file(out_dir / "manifest.txt", manifest);

    std::cout << "frames=" << seq.keyframes.size() << " loops=" << seq.loops.size() << " out="
              << out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"loop closure detection via mutual-NN descriptor overlap"};
    app.require_subcommand(1);

    DetectOpts detect;
    auto* cmd_detect = app.add_subcommand("detect-loops", "run the loop detection protocol");
    add_common(cmd_detect, detect.common);
    cmd_detect->add_option("--manifest", detect.manifest, "keyframe manifest file")->required();
    cmd_detect->add_option("--mode", detect.mode, "setting1 or setting2")
        ->check(CLI::IsMember({"setting1", "setting2"}));
    cmd_detect->add_option("--stride", detect.stride, "keep every stride-th keyframe");
    cmd_detect->add_option("--backend", detect.backend, "descriptor backend")
        ->check(CLI::IsMember({"auto", "fpfh", "external"}));
    cmd_detect->add_flag("--rank-by-ron", detect.rank_by_ron,
                         "verify all gated candidates, rank by RON");

    RegisterOpts reg;
    auto* cmd_reg = app.add_subcommand("register-pair", "overlap, RON and transform for a pair");
    add_common(cmd_reg, reg.common);
    cmd_reg->add_option("--cloud-a", reg.cloud_a, "query cloud")->required();
    cmd_reg->add_option("--cloud-b", reg.cloud_b, "candidate cloud")->required();
    cmd_reg->add_option("--desc-a", reg.desc_a, "query descriptor file");
    cmd_reg->add_option("--desc-b", reg.desc_b, "candidate descriptor file");

    EvalPrOpts evalpr;
    auto* cmd_pr = app.add_subcommand("eval-pr", "precision-recall curve from a score log");
    add_common(cmd_pr, evalpr.common);
    cmd_pr->add_option("--log", evalpr.log, "score log CSV")->required();
    cmd_pr->add_option("--labels", evalpr.labels, "ground-truth labels CSV")->required();
    cmd_pr->add_option("--score", evalpr.score, "score column to sweep")
        ->check(CLI::IsMember({"overlap", "ron"}));

    EvalAteOpts evalate;
    auto* cmd_ate = app.add_subcommand("eval-ate", "absolute trajectory error");
    add_common(cmd_ate, evalate.common);
    cmd_ate->add_option("--est", evalate.est, "estimated trajectory")->required();
    cmd_ate->add_option("--gt", evalate.gt, "ground-truth trajectory")->required();
    cmd_ate->add_option("--max-dt", evalate.max_dt, "association window, seconds");

    ExtractOpts extract;
    auto* cmd_extract = app.add_subcommand("extract-fpfh", "subsample and describe one cloud");
    add_common(cmd_extract, extract.common);
    cmd_extract->add_option("--cloud", extract.cloud, "input cloud")->required();
    cmd_extract->add_option("--id", extract.id, "keyframe id (seeds the subsample)");

    GenOpts gen;
    auto* cmd_gen = app.add_subcommand("gen-synthetic", "generate a synthetic benchmark");
    add_common(cmd_gen, gen.common);
    cmd_gen->add_option("--frames", gen.frames, "number of keyframes");
    cmd_gen->add_option("--loops", gen.loops, "number of planted loops");
    cmd_gen->add_option("--crop", gen.crop, "overlap fraction of planted loops");
    cmd_gen->add_option("--density", gen.density, "points per square meter");
    cmd_gen->add_option("--noise", gen.noise, "per-frame noise sigma, meters");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_detect->parsed()) return run_detect_loops(detect);
        if (cmd_reg->parsed()) return run_register_pair(reg);
        if (cmd_pr->parsed()) return run_eval_pr(evalpr);
        if (cmd_ate->parsed()) return run_eval_ate(evalate);
        if (cmd_extract->parsed()) return run_extract_fpfh(extract);
        if (cmd_gen->parsed()) return run_gen_synthetic(gen);
    } catch (const lcd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
