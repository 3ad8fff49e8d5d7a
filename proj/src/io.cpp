#include "lcd/io.hpp"

#include <Eigen/Geometry>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "lcd/errors.hpp"

namespace lcd {

namespace {

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

float le_f32(const char* p) {
    float v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}

void put_f32(std::string& out, float v) {
    char buf[sizeof(float)];
    std::memcpy(buf, &v, sizeof(v));
    out.append(buf, sizeof(buf));
}

void put_u32(std::string& out, std::uint32_t v) {
    char buf[sizeof(v)];
    std::memcpy(buf, &v, sizeof(v));
    out.append(buf, sizeof(buf));
}

std::uint32_t le_u32(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}

void check_finite(const Point3& p, std::size_t index) {
    if (!p.allFinite()) {
        throw ParseError("point " + std::to_string(index) + " has non-finite coordinates");
    }
}

struct PlyProperty {
    std::string type;
    std::string name;
};

std::size_t ply_type_size(const std::string& type) {
    static const std::map<std::string, std::size_t> sizes = {
        {"char", 1},  {"int8", 1},    {"uchar", 1},  {"uint8", 1},  {"short", 2},
        {"int16", 2}, {"ushort", 2},  {"uint16", 2}, {"int", 4},    {"int32", 4},
        {"uint", 4},  {"uint32", 4},  {"float", 4},  {"float32", 4}, {"double", 8},
        {"float64", 8},
    };
    const auto it = sizes.find(type);
    if (it == sizes.end()) throw UnsupportedFormat("unsupported PLY property type '" + type + "'");
    return it->second;
}

bool is_float_type(const std::string& type) { return type == "float" || type == "float32"; }

} // namespace

PointCloud read_ply(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);

    // Header is line-oriented text up to "end_header".
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string {
        if (pos >= bytes.size()) throw ParseError("PLY header ended before end_header");
        std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string::npos) eol = bytes.size();
        std::string line = bytes.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    if (next_line() != "ply") throw ParseError("missing 'ply' magic line");

    bool binary = false;
    bool have_format = false;
    std::size_t vertex_count = 0;
    bool in_vertex_element = false;
    bool seen_vertex_element = false;
    std::vector<PlyProperty> vertex_props;

    for (;;) {
        const std::string line = next_line();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "end_header") break;
        if (word.empty() || word == "comment" || word == "obj_info") continue;
        if (word == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else if (fmt == "binary_big_endian") {
                throw UnsupportedFormat("big-endian PLY is not supported");
            } else {
                throw ParseError("unknown PLY format '" + fmt + "'");
            }
            have_format = true;
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            if (!(ls >> name >> count)) throw ParseError("malformed element line: " + line);
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) {
                vertex_count = count;
                seen_vertex_element = true;
            }
        } else if (word == "property") {
            if (!in_vertex_element) continue;
            std::string type;
            ls >> type;
            if (type == "list") throw UnsupportedFormat("list properties on vertices are not supported");
            std::string name;
            ls >> name;
            if (name.empty()) throw ParseError("malformed property line: " + line);
            vertex_props.push_back({type, name});
        }
    }

    if (!have_format) throw ParseError("PLY header has no format line");
    if (!seen_vertex_element) throw UnsupportedFormat("PLY has no vertex element");

    int ix = -1, iy = -1, iz = -1, ii = -1;
    for (std::size_t i = 0; i < vertex_props.size(); ++i) {
        const auto& prop = vertex_props[i];
        if (prop.name == "x") ix = static_cast<int>(i);
        if (prop.name == "y") iy = static_cast<int>(i);
        if (prop.name == "z") iz = static_cast<int>(i);
        if (prop.name == "intensity") ii = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw UnsupportedFormat("PLY vertex element lacks x/y/z");
    for (const int idx : {ix, iy, iz}) {
        if (!is_float_type(vertex_props[static_cast<std::size_t>(idx)].type)) {
            throw UnsupportedFormat("PLY x/y/z must be float properties");
        }
    }
    if (ii >= 0 && !is_float_type(vertex_props[static_cast<std::size_t>(ii)].type)) ii = -1;

    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    if (ii >= 0) cloud.intensities.reserve(vertex_count);

    if (binary) {
        std::vector<std::size_t> offsets(vertex_props.size());
        std::size_t record_size = 0;
        for (std::size_t i = 0; i < vertex_props.size(); ++i) {
            offsets[i] = record_size;
            record_size += ply_type_size(vertex_props[i].type);
        }
        if (bytes.size() - pos < vertex_count * record_size) {
            throw ParseError("PLY body truncated: header declares " + std::to_string(vertex_count) +
                             " vertices");
        }
        for (std::size_t v = 0; v < vertex_count; ++v) {
            const char* rec = bytes.data() + pos + v * record_size;
            const Point3 p(le_f32(rec + offsets[static_cast<std::size_t>(ix)]),
                           le_f32(rec + offsets[static_cast<std::size_t>(iy)]),
                           le_f32(rec + offsets[static_cast<std::size_t>(iz)]));
            check_finite(p, v);
            cloud.points.push_back(p);
            if (ii >= 0) cloud.intensities.push_back(le_f32(rec + offsets[static_cast<std::size_t>(ii)]));
        }
    } else {
        std::istringstream body(bytes.substr(pos));
        std::vector<double> fields(vertex_props.size());
        for (std::size_t v = 0; v < vertex_count; ++v) {
            for (std::size_t f = 0; f < vertex_props.size(); ++f) {
                if (!(body >> fields[f])) {
                    throw ParseError("PLY body truncated: header declares " +
                                     std::to_string(vertex_count) + " vertices, row " +
                                     std::to_string(v) + " incomplete");
                }
            }
            // ASCII values pass through f32 so ascii and binary agree.
            const Point3 p(static_cast<float>(fields[static_cast<std::size_t>(ix)]),
                           static_cast<float>(fields[static_cast<std::size_t>(iy)]),
                           static_cast<float>(fields[static_cast<std::size_t>(iz)]));
            check_finite(p, v);
            cloud.points.push_back(p);
            if (ii >= 0) cloud.intensities.push_back(static_cast<float>(fields[static_cast<std::size_t>(ii)]));
        }
    }
    return cloud;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, bool binary) {
    const bool with_intensity = cloud.has_intensity();
    if (with_intensity && cloud.intensities.size() != cloud.points.size()) {
        throw InvariantViolation("write_ply: intensity channel size mismatch");
    }

    std::string out;
    out += "ply\n";
    out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
    out += "element vertex " + std::to_string(cloud.size()) + "\n";
    out += "property float x\nproperty float y\nproperty float z\n";
    if (with_intensity) out += "property float intensity\n";
    out += "end_header\n";

    if (binary) {
        out.reserve(out.size() + cloud.size() * (with_intensity ? 16 : 12));
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto& p = cloud.points[i];
            put_f32(out, static_cast<float>(p.x()));
            put_f32(out, static_cast<float>(p.y()));
            put_f32(out, static_cast<float>(p.z()));
            if (with_intensity) put_f32(out, cloud.intensities[i]);
        }
    } else {
        char buf[160];
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto& p = cloud.points[i];
            if (with_intensity) {
                std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g\n", p.x(), p.y(), p.z(),
                              static_cast<double>(cloud.intensities[i]));
            } else {
                std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
            }
            out += buf;
        }
    }
    atomic_write_file(path, out);
}

PointCloud read_lidar_bin(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() % 16 != 0) {
        throw ParseError("scan size " + std::to_string(bytes.size()) +
                         " is not a multiple of 16 bytes");
    }
    PointCloud cloud;
    const std::size_t n = bytes.size() / 16;
    cloud.points.reserve(n);
    cloud.intensities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const char* rec = bytes.data() + i * 16;
        const Point3 p(le_f32(rec), le_f32(rec + 4), le_f32(rec + 8));
        check_finite(p, i);
        cloud.points.push_back(p);
        cloud.intensities.push_back(le_f32(rec + 12));
    }
    return cloud;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    Trajectory traj;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream ls(line);
        double ts, tx, ty, tz, qx, qy, qz, qw;
        if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 8 numeric fields 'timestamp tx ty tz qx qy qz qw'");
        }
        std::string extra;
        if (ls >> extra) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": trailing fields after qw");
        }
        Eigen::Quaterniond q(qw, qx, qy, qz);
        if (q.norm() <= 0.0 || !std::isfinite(q.norm())) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": invalid quaternion");
        }
        q.normalize();

        if (!traj.entries.empty() && ts <= traj.entries.back().timestamp) {
            throw InvariantViolation(path.string() + ":" + std::to_string(lineno) +
                                     ": timestamps must be strictly increasing");
        }
        TrajectoryEntry entry;
        entry.timestamp = ts;
        entry.pose.rotation = q.toRotationMatrix();
        entry.pose.translation = Eigen::Vector3d(tx, ty, tz);
        traj.entries.push_back(entry);
    }
    return traj;
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
    std::string out;
    char buf[256];
    for (const auto& entry : traj.entries) {
        const Eigen::Quaterniond q(entry.pose.rotation);
        const auto& t = entry.pose.translation;
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                      entry.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
        out += buf;
    }
    atomic_write_file(path, out);
}

DescriptorFile read_descriptors(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() < 16) throw ParseError("descriptor file shorter than its 16-byte header");
    if (std::memcmp(bytes.data(), "L3DD", 4) != 0) throw ParseError("bad descriptor file magic");
    const std::uint32_t version = le_u32(bytes.data() + 4);
    if (version != 1) throw ParseError("unsupported descriptor file version " + std::to_string(version));
    const std::uint32_t n = le_u32(bytes.data() + 8);
    const std::uint32_t d = le_u32(bytes.data() + 12);
    if (n == 0) throw ParseError("descriptor file declares zero descriptors");
    if (d == 0) throw ParseError("descriptor file declares zero dimensionality");

    const std::size_t expected = 16 + std::size_t{n} * 12 + std::size_t{n} * d * 4;
    if (bytes.size() != expected) {
        throw ParseError("descriptor file size " + std::to_string(bytes.size()) + " != expected " +
                         std::to_string(expected));
    }

    DescriptorFile out;
    out.cloud.points.reserve(n);
    const char* coords = bytes.data() + 16;
    for (std::uint32_t i = 0; i < n; ++i) {
        const Point3 p(le_f32(coords), le_f32(coords + 4), le_f32(coords + 8));
        check_finite(p, i);
        out.cloud.points.push_back(p);
        coords += 12;
    }

    std::vector<float> data(std::size_t{n} * d);
    std::memcpy(data.data(), bytes.data() + 16 + std::size_t{n} * 12, data.size() * 4);
    DescriptorSet descs(d, std::move(data));

    // Accept small norm drift and renormalize; reject anything further out.
    // Exactly-unit data is kept bit for bit so round-trips are exact.
    for (std::size_t i = 0; i < descs.size(); ++i) {
        double acc = 0.0;
        for (const float x : descs.vec(i)) acc += static_cast<double>(x) * x;
        const double err = std::abs(std::sqrt(acc) - 1.0);
        if (err > 1e-3) {
            throw InvariantViolation("descriptor " + std::to_string(i) +
                                     " deviates from unit norm by more than 1e-3");
        }
        if (err > DescriptorSet::kNormTolerance) {
            descs.normalize();
            break;
        }
    }
    out.descriptors = std::move(descs);
    return out;
}

void write_descriptors(const std::filesystem::path& path, const PointCloud& cloud,
                       const DescriptorSet& descriptors) {
    if (cloud.size() != descriptors.size()) {
        throw InvariantViolation("write_descriptors: cloud and descriptor counts differ");
    }
    if (cloud.empty()) throw InvariantViolation("write_descriptors: empty set");
    descriptors.check_unit_norm();

    std::string out;
    out.reserve(16 + cloud.size() * (12 + descriptors.dim() * 4));
    out += "L3DD";
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(cloud.size()));
    put_u32(out, static_cast<std::uint32_t>(descriptors.dim()));
    for (const auto& p : cloud.points) {
        put_f32(out, static_cast<float>(p.x()));
        put_f32(out, static_cast<float>(p.y()));
        put_f32(out, static_cast<float>(p.z()));
    }
    const auto& data = descriptors.data();
    const std::size_t payload = data.size() * sizeof(float);
    const std::size_t offset = out.size();
    out.resize(offset + payload);
    std::memcpy(out.data() + offset, data.data(), payload);
    atomic_write_file(path, out);
}

void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

} // namespace lcd
