#pragma once

#include <cstdint>
#include <vector>

#include "lcd/evaluation.hpp"
#include "lcd/geometry.hpp"
#include "lcd/io.hpp"
#include "lcd/matching.hpp"

namespace lcd {

// Primitive-soup scene: planes, spheres and boxes laid out on a
// deterministic grid, surface-sampled at the given density.
struct SceneSpec {
    std::size_t planes = 1;
    std::size_t spheres = 1;
    std::size_t boxes = 1;
    double plane_size = 1.0;
    double sphere_radius = 0.3;
    double box_size = 0.4;
    double density = 2000.0; // points per square meter of surface
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

PointCloud gen_scene(const SceneSpec& spec);

struct LoopPair {
    PointCloud p_t;
    PointCloud p_t_prime;
    RigidTransform t_gt; // maps p_t_prime back onto p_t
};

// Crops the lowest-x fraction of the cloud, moves it through t and adds
// Gaussian noise. p_t is the untouched input.
LoopPair gen_loop_pair(const PointCloud& cloud, const RigidTransform& t, double crop_fraction,
                       double sigma, std::uint64_t seed);

// O(N^2) reference for mutual_nn; identical tie-breaking.
CorrespondenceSet brute_mnn(const DescriptorSet& a, const DescriptorSet& b);

// Sequence generator: a meandering path over procedurally scattered
// primitives. Frames far apart along the path never share geometry;
// planted loops revisit an earlier pose with a cropped, re-noised view.
struct TrajectorySpec {
    std::size_t frames = 200;
    std::size_t loops = 5;
    double crop_fraction = 0.6;
    double step = 0.9;         // path spacing between frames, meters
    double view_radius = 1.2;  // frame sees scene points within this radius
    double density = 2000.0;   // points per square meter of primitive surface
    double noise_sigma = 0.002;
    std::size_t min_loop_gap = 110; // planted later-earlier id separation
    std::uint64_t seed = 0;
};

struct PlantedLoop {
    std::int64_t earlier_id = 0;
    std::int64_t later_id = 0;
    RigidTransform relative; // maps earlier-frame points into the later frame
    double overlap = 0.0;    // achieved ground-truth overlap of the pair
};

struct SyntheticSequence {
    std::vector<KeyframeRecord> keyframes; // body-frame clouds, pose_prior set
    Trajectory ground_truth;
    std::vector<PlantedLoop> loops;
};

SyntheticSequence gen_trajectory(const TrajectorySpec& spec);

// Ground-truth labels for every ordered pair (query > candidate) of the
// sequence. Pairs whose poses are too far apart to share geometry are
// labeled zero without a nearest-neighbour pass.
std::vector<GtLabel> sequence_labels(const SyntheticSequence& seq, double view_radius,
                                     double dist);

} // namespace lcd
