#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lcd/descriptors.hpp"
#include "lcd/loopclosure.hpp"
#include "lcd/registration.hpp"

namespace lcd {

// Line-oriented key=value text. '#' starts a comment, blank lines are
// skipped, whitespace around keys and values is trimmed.
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text);
    static KeyValueFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Everything the pipeline needs, assembled from profile defaults plus
// config-file overrides.
struct PipelineConfig {
    std::string profile = "lidar";
    SamplingConfig sampling;
    RansacConfig ransac;
    LoopConfig loop;
    double gt_label_dist = 1.0;
};

// "lidar": 2.5 m patches, 1 m ground-truth overlap distance.
// "indoor": 0.2 m patches, 0.1 m ground-truth overlap distance.
void apply_profile(PipelineConfig& cfg, const std::string& profile);

// base_dir anchors relative paths named inside the file (sigma_series).
PipelineConfig make_pipeline_config(const KeyValueFile& kv, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// One sigma value per line, indexed by keyframe id.
std::vector<double> read_sigma_series(const std::filesystem::path& path);

struct ManifestEntry {
    std::int64_t id = 0;
    std::filesystem::path cloud;
    std::optional<std::filesystem::path> descriptors;
};

// Keyframe listing for detect-loops: cloud.<id>= and desc.<id>= lines,
// optional trajectory= (timestamps and pose priors) and profile=.
// Paths are resolved against the manifest's directory.
struct Manifest {
    std::string profile;
    std::vector<ManifestEntry> entries;
    std::optional<std::filesystem::path> trajectory;
};

Manifest load_manifest(const std::filesystem::path& path);

} // namespace lcd
