#include "lcd/synthetic.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "lcd/errors.hpp"
#include "lcd/kdtree.hpp"
#include "lcd/rng.hpp"

namespace lcd {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

std::size_t surface_count(double density, double area) {
    return static_cast<std::size_t>(std::max<long>(1, std::lround(density * area)));
}

Eigen::Vector3d random_unit(Rng& rng) {
    for (;;) {
        const Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
        const double n = v.norm();
        if (n > 1e-6) return v / n;
    }
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    const Eigen::Vector3d axis = random_unit(rng);
    const double angle = rng.uniform(0.0, kTau);
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Smooth pseudo-random height field used to emboss shape surfaces, so that
// every spot on a landmark has its own local relief.
struct Texture {
    std::array<Eigen::Vector3d, 3> waves;
    std::array<double, 3> phases;
    double amplitude = 0.0;

    static Texture draw(Rng& rng) {
        Texture tex;
        tex.amplitude = rng.uniform(0.02, 0.035);
        for (std::size_t k = 0; k < 3; ++k) {
            const double wavelength = rng.uniform(0.1, 0.22);
            tex.waves[k] = (kTau / wavelength) * random_unit(rng);
            tex.phases[k] = rng.uniform(0.0, kTau);
        }
        return tex;
    }

    double height(const Eigen::Vector3d& rel) const {
        double h = 0.0;
        for (std::size_t k = 0; k < 3; ++k) h += std::sin(waves[k].dot(rel) + phases[k]);
        return amplitude * h / 3.0;
    }
};

void emboss(std::vector<Point3>& out, const Eigen::Vector3d& center, const Eigen::Vector3d& p,
            const Eigen::Vector3d& normal, const Texture* tex) {
    if (tex == nullptr) {
        out.push_back(p);
    } else {
        out.push_back(p + tex->height(p - center) * normal);
    }
}

void sample_plane(std::vector<Point3>& out, const Eigen::Vector3d& center,
                  const Eigen::Matrix3d& orient, double size, std::size_t count, Rng& rng,
                  const Texture* tex = nullptr) {
    const Eigen::Vector3d normal = orient.col(2);
    for (std::size_t k = 0; k < count; ++k) {
        const double u = rng.uniform(-0.5, 0.5) * size;
        const double v = rng.uniform(-0.5, 0.5) * size;
        emboss(out, center, center + orient * Eigen::Vector3d(u, v, 0.0), normal, tex);
    }
}

void sample_sphere(std::vector<Point3>& out, const Eigen::Vector3d& center, double radius,
                   std::size_t count, Rng& rng, const Texture* tex = nullptr) {
    for (std::size_t k = 0; k < count; ++k) {
        const Eigen::Vector3d dir = random_unit(rng);
        emboss(out, center, center + radius * dir, dir, tex);
    }
}

void sample_box(std::vector<Point3>& out, const Eigen::Vector3d& center,
                const Eigen::Matrix3d& orient, double size, std::size_t count, Rng& rng,
                const Texture* tex = nullptr) {
    const double h = 0.5 * size;
    for (std::size_t k = 0; k < count; ++k) {
        const auto face = rng.uniform_int(6);
        const double u = rng.uniform(-h, h);
        const double v = rng.uniform(-h, h);
        Eigen::Vector3d p;
        Eigen::Vector3d n;
        switch (face) {
        case 0: p = {h, u, v}; n = {1, 0, 0}; break;
        case 1: p = {-h, u, v}; n = {-1, 0, 0}; break;
        case 2: p = {u, h, v}; n = {0, 1, 0}; break;
        case 3: p = {u, -h, v}; n = {0, -1, 0}; break;
        case 4: p = {u, v, h}; n = {0, 0, 1}; break;
        default: p = {u, v, -h}; n = {0, 0, -1}; break;
        }
        emboss(out, center, center + orient * p, orient * n, tex);
    }
}

// Deterministic non-overlapping layout positions for gen_scene.
Eigen::Vector3d grid_slot(std::size_t g, double spacing) {
    static constexpr std::array<std::array<int, 2>, 16> kSlots = {{{0, 0},
                                                                   {1, 0},
                                                                   {0, 1},
                                                                   {-1, 0},
                                                                   {0, -1},
                                                                   {1, 1},
                                                                   {-1, 1},
                                                                   {1, -1},
                                                                   {-1, -1},
                                                                   {2, 0},
                                                                   {0, 2},
                                                                   {-2, 0},
                                                                   {0, -2},
                                                                   {2, 1},
                                                                   {1, 2},
                                                                   {2, 2}}};
    const auto& s = kSlots[g % kSlots.size()];
    const double shift = static_cast<double>(g / kSlots.size()) * 6.0 * spacing;
    return {s[0] * spacing, s[1] * spacing + shift, 0.0};
}

void add_noise(std::vector<Point3>& points, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    for (auto& p : points) {
        p.x() += sigma * rng.normal();
        p.y() += sigma * rng.normal();
        p.z() += sigma * rng.normal();
    }
}

Eigen::Matrix3d yaw_rotation(double yaw) {
    return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

// Indices of the k lowest-x points, ties by index, in original order.
std::vector<std::size_t> crop_indices(const std::vector<Point3>& points, std::size_t k) {
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].x() != points[b].x()) return points[a].x() < points[b].x();
        return a < b;
    });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}


} // namespace

PointCloud gen_scene(const SceneSpec& spec) {
    if (!(spec.density > 0.0)) throw InvariantViolation("gen_scene: density must be positive");
    if (spec.noise_sigma < 0.0) throw InvariantViolation("gen_scene: negative noise sigma");

    Rng rng(spec.seed);
    const double spacing =
        2.0 * std::max({spec.plane_size, 2.0 * spec.sphere_radius, spec.box_size, 0.5});

    PointCloud cloud;
    std::size_t g = 0;
    for (std::size_t k = 0; k < spec.planes; ++k, ++g) {
        // Alternate orientations so multi-plane scenes are not all coplanar.
        Eigen::Matrix3d orient = Eigen::Matrix3d::Identity();
        if (k % 3 == 1) {
            orient = Eigen::AngleAxisd(kTau / 4.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
        } else if (k % 3 == 2) {
            orient = Eigen::AngleAxisd(kTau / 4.0, Eigen::Vector3d::UnitX()).toRotationMatrix();
        }
        sample_plane(cloud.points, grid_slot(g, spacing), orient, spec.plane_size,
                     surface_count(spec.density, spec.plane_size * spec.plane_size), rng);
    }
    for (std::size_t k = 0; k < spec.spheres; ++k, ++g) {
        sample_sphere(cloud.points, grid_slot(g, spacing), spec.sphere_radius,
                      surface_count(spec.density,
                                    2.0 * kTau * spec.sphere_radius * spec.sphere_radius),
                      rng);
    }
    for (std::size_t k = 0; k < spec.boxes; ++k, ++g) {
        sample_box(cloud.points, grid_slot(g, spacing), random_rotation(rng), spec.box_size,
                   surface_count(spec.density, 6.0 * spec.box_size * spec.box_size), rng);
    }

    add_noise(cloud.points, spec.noise_sigma, rng);
    return cloud;
}

LoopPair gen_loop_pair(const PointCloud& cloud, const RigidTransform& t, double crop_fraction,
                       double sigma, std::uint64_t seed) {
    if (crop_fraction < 0.0 || crop_fraction > 1.0) {
        throw InvariantViolation("gen_loop_pair: crop_fraction must be in [0,1]");
    }
    if (!t.is_valid()) throw InvariantViolation("gen_loop_pair: invalid transform");

    const auto keep = crop_indices(
        cloud.points,
        static_cast<std::size_t>(std::lround(crop_fraction * static_cast<double>(cloud.size()))));

    LoopPair pair;
    pair.p_t = cloud;
    pair.p_t_prime.points.reserve(keep.size());
    for (const std::size_t i : keep) pair.p_t_prime.points.push_back(apply(t, cloud.points[i]));

    Rng rng(seed);
    add_noise(pair.p_t_prime.points, sigma, rng);
    pair.t_gt = invert(t);
    return pair;
}

CorrespondenceSet brute_mnn(const DescriptorSet& a, const DescriptorSet& b) {
    if (a.empty() || b.empty()) throw InvariantViolation("brute_mnn: empty descriptor set");
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("brute_mnn: dims " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
    }
    const std::size_t dim = a.dim();

    auto sq_dist = [dim](std::span<const float> x, std::span<const float> y) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = static_cast<double>(x[d]) - static_cast<double>(y[d]);
            acc += diff * diff;
        }
        return acc;
    };

    std::vector<std::size_t> nn_ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::size_t best = 0;
        double best_d = sq_dist(a.vec(i), b.vec(0));
        for (std::size_t j = 1; j < b.size(); ++j) {
            const double d = sq_dist(a.vec(i), b.vec(j));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        nn_ab[i] = best;
    }
    std::vector<std::size_t> nn_ba(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
        std::size_t best = 0;
        double best_d = sq_dist(b.vec(j), a.vec(0));
        for (std::size_t i = 1; i < a.size(); ++i) {
            const double d = sq_dist(b.vec(j), a.vec(i));
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        nn_ba[j] = best;
    }

    CorrespondenceSet out;
    out.size_a = a.size();
    out.size_b = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (nn_ba[nn_ab[i]] == i) out.pairs.emplace_back(i, nn_ab[i]);
    }
    return out;
}

SyntheticSequence gen_trajectory(const TrajectorySpec& spec) {
    if (spec.frames < 2) throw InvariantViolation("gen_trajectory: need at least 2 frames");
    if (!(spec.step > 0.0) || !(spec.view_radius > 0.0) || !(spec.density > 0.0)) {
        throw InvariantViolation("gen_trajectory: step, view_radius and density must be positive");
    }
    if (spec.crop_fraction <= 0.0 || spec.crop_fraction > 1.0) {
        throw InvariantViolation("gen_trajectory: crop_fraction must be in (0,1]");
    }

    // Base path: forward in x with gentle lateral and vertical sway, so
    // frame separation grows linearly with index distance.
    auto base_position = [&](double t) {
        return Eigen::Vector3d(t * spec.step, 0.6 * std::sin(kTau * t / 40.0),
                               0.2 * std::sin(kTau * t / 57.0));
    };
    auto base_yaw = [&](double t) {
        const double dy = 0.6 * (kTau / 40.0) * std::cos(kTau * t / 40.0);
        return std::atan2(dy, spec.step);
    };

    std::vector<RigidTransform> poses(spec.frames);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        poses[t].rotation = yaw_rotation(base_yaw(static_cast<double>(t)));
        poses[t].translation = base_position(static_cast<double>(t));
    }

    // Plant loops: frame j revisits frame i's pose with a small offset.
    std::vector<PlantedLoop> loops(spec.loops);
    std::vector<std::int64_t> loop_of(spec.frames, -1);
    Rng loop_rng(mix_seed(spec.seed, 2));
    for (std::size_t k = 0; k < spec.loops; ++k) {
        const std::int64_t j = static_cast<std::int64_t>(spec.frames) - 1 -
                               static_cast<std::int64_t>(7 * k);
        const std::int64_t i = j - static_cast<std::int64_t>(spec.min_loop_gap + 11 * k);
        if (i < 0 || j <= i) {
            throw DegenerateInput("gen_trajectory: cannot place " + std::to_string(spec.loops) +
                                  " loops with gap " + std::to_string(spec.min_loop_gap) +
                                  " in " + std::to_string(spec.frames) + " frames");
        }
        RigidTransform delta;
        delta.rotation = yaw_rotation(loop_rng.uniform(-0.4, 0.4));
        delta.translation = Eigen::Vector3d(loop_rng.uniform(-0.05, 0.05),
                                            loop_rng.uniform(-0.05, 0.05),
                                            loop_rng.uniform(-0.02, 0.02));
        poses[static_cast<std::size_t>(j)] = compose(poses[static_cast<std::size_t>(i)], delta);
        loops[k].earlier_id = i;
        loops[k].later_id = j;
        loops[k].relative = invert(delta);
        loop_of[static_cast<std::size_t>(j)] = i;
    }

    // Terrain: embossed primitives scattered along the base path corridor.
    // Positions, types, sizes and surface relief are all drawn from one
    // stream, so no two landmarks present the same local surface anywhere.
    // A frame sees a landmark either whole or not at all, so a shared
    // landmark produces the same geometry in every frame that contains it.
    struct Primitive {
        std::size_t begin = 0;
        std::size_t count = 0;
        Eigen::Vector3d center = Eigen::Vector3d::Zero();
    };
    Rng terrain_rng(mix_seed(spec.seed, 1));
    std::vector<Point3> world;
    std::vector<Primitive> prims;
    const double corridor = static_cast<double>(spec.frames) * spec.step;
    const double spacing = 0.18;
    const auto n_prims = static_cast<std::size_t>(corridor / spacing) + 4;
    for (std::size_t m = 0; m < n_prims; ++m) {
        const double t = (static_cast<double>(m) * spacing - 0.7) / spec.step;
        Eigen::Vector3d center = base_position(t);
        center.x() += terrain_rng.uniform(-0.1, 0.1);
        center.y() += terrain_rng.uniform(-0.9, 0.9);
        center.z() += terrain_rng.uniform(-0.35, 0.35);

        Primitive prim;
        prim.begin = world.size();
        prim.center = center;
        const Texture tex = Texture::draw(terrain_rng);
        switch (terrain_rng.uniform_int(5)) {
        case 0: {
            const double r = terrain_rng.uniform(0.1, 0.16);
            sample_sphere(world, center, r, surface_count(spec.density, 2.0 * kTau * r * r),
                          terrain_rng, &tex);
            break;
        }
        case 1:
        case 2: {
            const double s = terrain_rng.uniform(0.12, 0.22);
            sample_box(world, center, random_rotation(terrain_rng), s,
                       surface_count(spec.density, 6.0 * s * s), terrain_rng, &tex);
            break;
        }
        default: {
            const double s = terrain_rng.uniform(0.25, 0.38);
            sample_plane(world, center, random_rotation(terrain_rng), s,
                         surface_count(spec.density, s * s), terrain_rng, &tex);
            break;
        }
        }
        prim.count = world.size() - prim.begin;
        prims.push_back(prim);
    }

    SyntheticSequence seq;
    seq.keyframes.resize(spec.frames);
    seq.ground_truth.entries.resize(spec.frames);

    std::vector<std::vector<std::size_t>> views(spec.frames);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        const Eigen::Vector3d& center = poses[t].translation;
        std::vector<std::size_t> visible;
        std::size_t total = 0;
        for (std::size_t p = 0; p < prims.size(); ++p) {
            if ((prims[p].center - center).norm() <= spec.view_radius) {
                visible.push_back(p);
                total += prims[p].count;
            }
        }
        // A revisit sees only the inner part of the view it returned to.
        if (loop_of[t] >= 0) {
            std::sort(visible.begin(), visible.end(), [&](std::size_t a, std::size_t b) {
                const double da = (prims[a].center - center).squaredNorm();
                const double db = (prims[b].center - center).squaredNorm();
                if (da != db) return da < db;
                return a < b;
            });
            const auto target = static_cast<std::size_t>(
                std::lround(spec.crop_fraction * static_cast<double>(total)));
            std::size_t kept = 0;
            std::size_t n_keep = 0;
            while (n_keep < visible.size() && kept < target) {
                kept += prims[visible[n_keep]].count;
                ++n_keep;
            }
            visible.resize(n_keep);
            std::sort(visible.begin(), visible.end());
        }
        for (const std::size_t p : visible) {
            for (std::size_t k = 0; k < prims[p].count; ++k) {
                views[t].push_back(prims[p].begin + k);
            }
        }
    }

    for (std::size_t t = 0; t < spec.frames; ++t) {
        KeyframeRecord& rec = seq.keyframes[t];
        rec.id = static_cast<std::int64_t>(t);
        rec.timestamp = 0.1 * static_cast<double>(t);
        rec.pose_prior = poses[t];

        const RigidTransform inv_pose = invert(poses[t]);
        rec.cloud.points.reserve(views[t].size());
        for (const std::size_t w : views[t]) rec.cloud.points.push_back(apply(inv_pose, world[w]));

        Rng frame_rng(mix_seed(spec.seed, 3000 + t));
        add_noise(rec.cloud.points, spec.noise_sigma, frame_rng);

        seq.ground_truth.entries[t].timestamp = rec.timestamp;
        seq.ground_truth.entries[t].pose = poses[t];
    }

    for (auto& loop : loops) {
        const auto& q = seq.keyframes[static_cast<std::size_t>(loop.later_id)];
        const auto& c = seq.keyframes[static_cast<std::size_t>(loop.earlier_id)];
        loop.overlap = gt_overlap(q.cloud, c.cloud, loop.relative, 0.1);
    }
    seq.loops = std::move(loops);
    return seq;
}

std::vector<GtLabel> sequence_labels(const SyntheticSequence& seq, double view_radius,
                                     double dist) {
    const auto& frames = seq.keyframes;
    std::vector<GtLabel> labels;
    labels.reserve(frames.size() * (frames.size() - 1) / 2);

    for (std::size_t q = 1; q < frames.size(); ++q) {
        const RigidTransform& pose_q = seq.ground_truth.entries[q].pose;
        for (std::size_t c = 0; c < q; ++c) {
            GtLabel label;
            label.query_id = frames[q].id;
            label.candidate_id = frames[c].id;

            const RigidTransform& pose_c = seq.ground_truth.entries[c].pose;
            const double gap = (pose_q.translation - pose_c.translation).norm();
            if (gap <= 2.0 * view_radius + 1.0 + 4.0 * dist) {
                const RigidTransform rel = compose(invert(pose_q), pose_c);
                label.gt_overlap = gt_overlap(frames[q].cloud, frames[c].cloud, rel, dist);
            }
            labels.push_back(label);
        }
    }
    return labels;
}

} // namespace lcd
