#include "lcd/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lcd/errors.hpp"

namespace lcd {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

} // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError("line " + std::to_string(lineno) + ": expected key=value, got '" +
                             stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
        kv.values_[key] = trim(stripped.substr(eq + 1));
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    try {
        return parse(slurp(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string KeyValueFile::get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("key '" + key + "': expected a number, got '" + it->second + "'");
    }
}

std::int64_t KeyValueFile::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("key '" + key + "': expected an integer, got '" + it->second + "'");
    }
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ParseError("key '" + key + "': expected true/false, got '" + it->second + "'");
}

void apply_profile(PipelineConfig& cfg, const std::string& profile) {
    if (profile == "lidar") {
        cfg.sampling.patch_radius = 2.5;
        cfg.gt_label_dist = 1.0;
    } else if (profile == "indoor") {
        cfg.sampling.patch_radius = 0.2;
        cfg.gt_label_dist = 0.1;
    } else {
        throw ParseError("unknown profile '" + profile + "' (expected lidar or indoor)");
    }
    cfg.profile = profile;
}

PipelineConfig make_pipeline_config(const KeyValueFile& kv,
                                    const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    apply_profile(cfg, kv.get("profile", "lidar"));

    cfg.sampling.fraction = kv.get_double("fraction", cfg.sampling.fraction);
    cfg.sampling.patch_radius = kv.get_double("patch_radius", cfg.sampling.patch_radius);
    cfg.gt_label_dist = kv.get_double("gt_label_dist", cfg.gt_label_dist);

    cfg.ransac.max_iterations = static_cast<std::size_t>(
        kv.get_int("max_iterations", static_cast<std::int64_t>(cfg.ransac.max_iterations)));
    cfg.ransac.confirmation_iterations = static_cast<std::size_t>(kv.get_int(
        "confirmation_iterations", static_cast<std::int64_t>(cfg.ransac.confirmation_iterations)));
    cfg.ransac.inlier_threshold = kv.get_double("inlier_threshold", cfg.ransac.inlier_threshold);
    cfg.ransac.sample_size = static_cast<std::size_t>(
        kv.get_int("sample_size", static_cast<std::int64_t>(cfg.ransac.sample_size)));

    cfg.loop.overlap_threshold = kv.get_double("overlap_threshold", cfg.loop.overlap_threshold);
    cfg.loop.error_threshold = kv.get_double("error_threshold", cfg.loop.error_threshold);
    cfg.loop.ron_threshold = kv.get_double("ron_threshold", cfg.loop.ron_threshold);
    cfg.loop.exclusion_window = static_cast<std::size_t>(
        kv.get_int("exclusion_window", static_cast<std::int64_t>(cfg.loop.exclusion_window)));
    cfg.loop.rank_by_ron = kv.get_bool("rank_by_ron", cfg.loop.rank_by_ron);

    if (kv.has("sigma_series") || kv.has("prior_sigma") || kv.has("prior_multiplier")) {
        PositionalPrior prior;
        prior.sigma_default = kv.get_double("prior_sigma", prior.sigma_default);
        prior.multiplier = kv.get_double("prior_multiplier", prior.multiplier);
        if (kv.has("sigma_series")) {
            std::filesystem::path series(kv.get("sigma_series"));
            if (series.is_relative()) series = base_dir / series;
            prior.sigmas = read_sigma_series(series);
        }
        cfg.loop.positional_prior = std::move(prior);
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    return make_pipeline_config(KeyValueFile::load(path), path.parent_path());
}

std::vector<double> read_sigma_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> sigmas;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        try {
            sigmas.push_back(std::stod(stripped));
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected a sigma value");
        }
    }
    return sigmas;
}

Manifest load_manifest(const std::filesystem::path& path) {
    const KeyValueFile kv = KeyValueFile::load(path);
    const std::filesystem::path dir = path.parent_path();

    auto resolve = [&](const std::string& rel) {
        std::filesystem::path p(rel);
        return p.is_relative() ? dir / p : p;
    };

    Manifest manifest;
    manifest.profile = kv.get("profile", "");
    if (kv.has("trajectory")) manifest.trajectory = resolve(kv.get("trajectory"));

    std::map<std::int64_t, ManifestEntry> by_id;
    for (const auto& [key, value] : kv.values()) {
        const bool is_cloud = key.rfind("cloud.", 0) == 0;
        const bool is_desc = key.rfind("desc.", 0) == 0;
        if (!is_cloud && !is_desc) continue;
        const std::string id_text = key.substr(key.find('.') + 1);
        std::int64_t id = 0;
        try {
            std::size_t used = 0;
            id = std::stoll(id_text, &used);
            if (used != id_text.size()) throw ParseError("");
        } catch (const std::exception&) {
            throw ParseError(path.string() + ": bad keyframe id in key '" + key + "'");
        }
        auto& entry = by_id[id];
        entry.id = id;
        if (is_cloud) entry.cloud = resolve(value);
        if (is_desc) entry.descriptors = resolve(value);
    }

    manifest.entries.reserve(by_id.size());
    for (auto& [id, entry] : by_id) {
        if (entry.cloud.empty()) {
            throw ParseError(path.string() + ": keyframe " + std::to_string(id) +
                             " has descriptors but no cloud");
        }
        manifest.entries.push_back(std::move(entry));
    }
    if (manifest.entries.empty()) {
        throw ParseError(path.string() + ": manifest lists no keyframes");
    }
    return manifest;
}

} // namespace lcd
