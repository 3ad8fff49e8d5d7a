#include "lcd/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "lcd/errors.hpp"

namespace lcd {

bool RigidTransform::is_valid(double tol) const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rotation.determinant() - 1.0) > tol) return false;
    return translation.allFinite();
}

Eigen::Matrix4d RigidTransform::to_matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = rotation;
    m.block<3, 1>(0, 3) = translation;
    return m;
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m, double tol) {
    RigidTransform t;
    t.rotation = m.block<3, 3>(0, 0);
    t.translation = m.block<3, 1>(0, 3);
    if (!t.is_valid(tol)) {
        throw InvariantViolation("4x4 matrix is not a rigid transform: rotation block fails "
                                 "orthonormality/det(+1) check");
    }
    return t;
}

PointCloud apply(const RigidTransform& t, const PointCloud& cloud) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points) out.points.push_back(apply(t, p));
    out.intensities = cloud.intensities;
    return out;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

RigidTransform invert(const RigidTransform& t) {
    RigidTransform out;
    out.rotation = t.rotation.transpose();
    out.translation = -(out.rotation * t.translation);
    return out;
}

RigidTransform kabsch_fit(std::span<const Point3> src, std::span<const Point3> dst) {
    if (src.size() != dst.size()) {
        throw InvariantViolation("kabsch_fit: src and dst must have equal length");
    }
    if (src.size() < 3) {
        throw InvariantViolation("kabsch_fit: need at least 3 point pairs");
    }
    const double n = static_cast<double>(src.size());

    Eigen::Vector3d src_centroid = Eigen::Vector3d::Zero();
    Eigen::Vector3d dst_centroid = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        src_centroid += src[i];
        dst_centroid += dst[i];
    }
    src_centroid /= n;
    dst_centroid /= n;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    double src_spread = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Eigen::Vector3d a = src[i] - src_centroid;
        const Eigen::Vector3d b = dst[i] - dst_centroid;
        cov += b * a.transpose();
        src_spread += a.squaredNorm();
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();

    // Rank < 2 means the pairs are coincident or collinear and the rotation
    // is not determined.
    const double scale = std::max(sv(0), src_spread / n);
    if (sv(0) <= 0.0 || sv(1) <= 1e-12 * std::max(1.0, scale)) {
        throw DegenerateInput("kabsch_fit: covariance rank < 2 (coincident or collinear points)");
    }

    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
        d(2, 2) = -1.0;
    }

    RigidTransform t;
    t.rotation = svd.matrixU() * d * svd.matrixV().transpose();
    t.translation = dst_centroid - t.rotation * src_centroid;
    return t;
}

double rotation_angle_between(const RigidTransform& a, const RigidTransform& b) {
    const Eigen::Matrix3d r = a.rotation.transpose() * b.rotation;
    const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

std::string format_matrix4_text(const RigidTransform& t) {
    const Eigen::Matrix4d m = t.to_matrix();
    std::string out;
    char buf[32];
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            if (r != 0 || c != 0) out += ' ';
            out += buf;
        }
    }
    return out;
}

RigidTransform parse_matrix4_text(const std::string& text) {
    std::istringstream in(text);
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (!(in >> m(r, c))) {
                throw ParseError("expected 16 numeric fields in 4x4 transform text");
            }
        }
    }
    return RigidTransform::from_matrix(m);
}

std::vector<std::byte> matrix4_to_bytes(const RigidTransform& t) {
    const Eigen::Matrix4d m = t.to_matrix();
    std::vector<std::byte> out(16 * sizeof(double));
    double values[16];
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) values[r * 4 + c] = m(r, c);
    std::memcpy(out.data(), values, sizeof(values));
    return out;
}

RigidTransform matrix4_from_bytes(std::span<const std::byte> bytes) {
    if (bytes.size() != 16 * sizeof(double)) {
        throw ParseError("binary 4x4 transform must be exactly 128 bytes");
    }
    double values[16];
    std::memcpy(values, bytes.data(), sizeof(values));
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = values[r * 4 + c];
    return RigidTransform::from_matrix(m);
}

} // namespace lcd
