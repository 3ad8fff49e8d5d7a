#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <unistd.h>
#include <vector>

#include "lcd/descriptor_set.hpp"
#include "lcd/geometry.hpp"
#include "lcd/rng.hpp"

namespace testutil {

inline Eigen::Vector3d random_unit3(lcd::Rng& rng) {
    for (;;) {
        const Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
        const double n = v.norm();
        if (n > 1e-6) return v / n;
    }
}

inline lcd::RigidTransform random_transform(lcd::Rng& rng, double max_angle, double max_trans) {
    lcd::RigidTransform t;
    const double angle = rng.uniform(0.0, max_angle);
    t.rotation = Eigen::AngleAxisd(angle, random_unit3(rng)).toRotationMatrix();
    t.translation = max_trans * Eigen::Vector3d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                                rng.uniform(-1.0, 1.0));
    return t;
}

inline lcd::PointCloud random_cloud(lcd::Rng& rng, std::size_t n, double extent) {
    lcd::PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        cloud.points.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                                  rng.uniform(-extent, extent));
    }
    return cloud;
}

// Rows are L2-normalized in double before the float cast.
inline lcd::DescriptorSet make_set(std::size_t dim, const std::vector<std::vector<double>>& rows) {
    std::vector<float> data;
    data.reserve(rows.size() * dim);
    for (const auto& row : rows) {
        double norm2 = 0.0;
        for (const double x : row) norm2 += x * x;
        const double inv = 1.0 / std::sqrt(norm2);
        for (const double x : row) data.push_back(static_cast<float>(x * inv));
    }
    return lcd::DescriptorSet(dim, std::move(data));
}

inline lcd::DescriptorSet random_unit_set(lcd::Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    for (auto& row : rows) {
        for (auto& x : row) x = rng.normal();
    }
    return make_set(dim, rows);
}

// Reference nearest neighbour: linear scan with (squared distance, index)
// ordering, all arithmetic in double.
inline std::size_t linear_nn(std::span<const double> data, std::size_t dim,
                             std::span<const double> query) {
    const std::size_t n = data.size() / dim;
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = query[d] - data[i * dim + d];
            d2 += diff * diff;
        }
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

// Horn's closed-form quaternion alignment, independent of kabsch_fit.
// Returns the transform mapping src onto dst in the least-squares sense.
inline lcd::RigidTransform horn_align(const std::vector<Eigen::Vector3d>& src,
                                      const std::vector<Eigen::Vector3d>& dst) {
    const auto n = static_cast<double>(src.size());
    Eigen::Vector3d cs = Eigen::Vector3d::Zero();
    Eigen::Vector3d cd = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= n;
    cd /= n;

    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        m += (src[i] - cs) * (dst[i] - cd).transpose();
    }

    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    const double sxx = m(0, 0), sxy = m(0, 1), sxz = m(0, 2);
    const double syx = m(1, 0), syy = m(1, 1), syz = m(1, 2);
    const double szx = m(2, 0), szy = m(2, 1), szz = m(2, 2);
    q(0, 0) = sxx + syy + szz;
    q(0, 1) = q(1, 0) = syz - szy;
    q(0, 2) = q(2, 0) = szx - sxz;
    q(0, 3) = q(3, 0) = sxy - syx;
    q(1, 1) = sxx - syy - szz;
    q(1, 2) = q(2, 1) = sxy + syx;
    q(1, 3) = q(3, 1) = szx + sxz;
    q(2, 2) = -sxx + syy - szz;
    q(2, 3) = q(3, 2) = syz + szy;
    q(3, 3) = -sxx - syy + szz;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(q);
    const Eigen::Vector4d v = eig.eigenvectors().col(3);
    const Eigen::Quaterniond quat(v(0), v(1), v(2), v(3));

    lcd::RigidTransform t;
    t.rotation = quat.normalized().toRotationMatrix();
    t.translation = cd - t.rotation * cs;
    return t;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("lcdtest-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
}

} // namespace testutil
