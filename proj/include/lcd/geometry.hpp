#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lcd {

using Point3 = Eigen::Vector3d;

// Ordered, index-addressable point set. Coordinates are meters.
// The optional per-point intensity channel is either empty or has one
// entry per point.
struct PointCloud {
    std::vector<Point3> points;
    std::vector<float> intensities;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_intensity() const { return !intensities.empty(); }
};

// Rigid body motion, stored as rotation matrix + translation vector so
// the orthonormality invariant stays directly checkable.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static RigidTransform identity() { return {}; }

    // Orthonormal rotation with det +1, within tol.
    bool is_valid(double tol = 1e-9) const;

    Eigen::Matrix4d to_matrix() const;
    // Validates the rotation block of m.
    static RigidTransform from_matrix(const Eigen::Matrix4d& m, double tol = 1e-9);
};

inline Point3 apply(const RigidTransform& t, const Point3& p) {
    return t.rotation * p + t.translation;
}

PointCloud apply(const RigidTransform& t, const PointCloud& cloud);

// compose(a, b) maps p to a(b(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

RigidTransform invert(const RigidTransform& t);

// Least-squares rigid fit: returns T minimising sum ||dst_i - T(src_i)||^2.
// Uses SVD with sign correction so the rotation is never a reflection.
// Throws DegenerateInput if the point pairs are coincident or collinear.
RigidTransform kabsch_fit(std::span<const Point3> src, std::span<const Point3> dst);

// Angle of the rotation taking a.rotation to b.rotation, radians.
double rotation_angle_between(const RigidTransform& a, const RigidTransform& b);

// 16 floats, row-major homogeneous matrix, for file interchange.
std::string format_matrix4_text(const RigidTransform& t);
RigidTransform parse_matrix4_text(const std::string& text);
std::vector<std::byte> matrix4_to_bytes(const RigidTransform& t);
RigidTransform matrix4_from_bytes(std::span<const std::byte> bytes);

} // namespace lcd
