#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "lcd/errors.hpp"
#include "lcd/loopclosure.hpp"
#include "lcd/synthetic.hpp"

using lcd::Point3;
using lcd::PointCloud;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

lcd::DescribedKeyframe manual_keyframe(std::int64_t id, lcd::Rng& rng, std::size_t n,
                                       const Point3& prior_pos) {
    lcd::DescribedKeyframe kf;
    kf.id = id;
    kf.timestamp = 0.1 * static_cast<double>(id);
    kf.points = testutil::random_cloud(rng, n, 5.0);
    kf.descriptors = testutil::random_unit_set(rng, n, 8);
    lcd::RigidTransform prior;
    prior.translation = prior_pos;
    kf.pose_prior = prior;
    return kf;
}

lcd::DescribedKeyframe describe_cloud(std::int64_t id, const PointCloud& cloud, double radius,
                                      std::uint64_t seed) {
    lcd::KeyframeRecord rec;
    rec.id = id;
    rec.cloud = cloud;
    lcd::SamplingConfig cfg;
    cfg.fraction = 0.4;
    cfg.seed = seed;
    cfg.patch_radius = radius;
    return lcd::make_described(rec, cfg, lcd::DescriptorBackend::make_fpfh());
}

// RANSAC budget for tests that register garbage correspondences on
// purpose; the default confirmation logic never ends those early.
lcd::RansacConfig small_ransac(std::uint64_t seed) {
    lcd::RansacConfig rcfg;
    rcfg.max_iterations = 2000;
    rcfg.confirmation_iterations = 100;
    rcfg.seed = seed;
    return rcfg;
}

const lcd::SyntheticSequence& planted_sequence() {
    static const lcd::SyntheticSequence seq = [] {
        lcd::TrajectorySpec spec;
        spec.frames = 118;
        spec.loops = 1;
        spec.density = 1200.0;
        spec.seed = 5;
        return lcd::gen_trajectory(spec);
    }();
    return seq;
}

const std::vector<lcd::DescribedKeyframe>& planted_described() {
    static const std::vector<lcd::DescribedKeyframe> kfs = [] {
        std::vector<lcd::DescribedKeyframe> out;
        lcd::SamplingConfig cfg;
        cfg.fraction = 0.4;
        cfg.seed = 5;
        cfg.patch_radius = 0.2;
        for (const auto& rec : planted_sequence().keyframes) {
            out.push_back(lcd::make_described(rec, cfg, lcd::DescriptorBackend::make_fpfh()));
        }
        return out;
    }();
    return kfs;
}

} // namespace

TEST_SUITE("loopclosure") {

TEST_CASE("ron counts strict sub-threshold distances") {
    PointCloud a;
    a.points = {Point3(0.05, 0, 0), Point3(0.2, 0, 0), Point3(0.5, 0, 0)};
    PointCloud b;
    b.points = {Point3(0, 0, 0), Point3(0, 0, 0), Point3(0, 0, 0)};
    lcd::CorrespondenceSet c;
    c.pairs = {{0, 0}, {1, 1}, {2, 2}};
    c.size_a = c.size_b = 3;

    CHECK(lcd::ron(a, b, c, lcd::RigidTransform::identity(), 0.1) == 1.0 / 3.0);
}

TEST_CASE("ron comparison is strictly less than the threshold") {
    PointCloud a;
    a.points = {Point3(0.125, 0, 0)};
    PointCloud b;
    b.points = {Point3(0, 0, 0)};
    lcd::CorrespondenceSet c;
    c.pairs = {{0, 0}};
    c.size_a = c.size_b = 1;

    CHECK(lcd::ron(a, b, c, lcd::RigidTransform::identity(), 0.125) == 0.0);
    CHECK(lcd::ron(a, b, c, lcd::RigidTransform::identity(), 0.1250001) == 1.0);
}

TEST_CASE("ron of identical clouds under identity is 1") {
    lcd::Rng rng(81);
    const auto cloud = testutil::random_cloud(rng, 30, 2.0);
    lcd::CorrespondenceSet c;
    for (std::size_t k = 0; k < cloud.size(); ++k) c.pairs.emplace_back(k, k);
    c.size_a = c.size_b = cloud.size();
    CHECK(lcd::ron(cloud, cloud, c, lcd::RigidTransform::identity(), 1e-9) == 1.0);
}

TEST_CASE("ron requires correspondences") {
    PointCloud a;
    a.points = {Point3(0, 0, 0)};
    lcd::CorrespondenceSet empty;
    empty.size_a = empty.size_b = 1;
    CHECK_THROWS_AS(lcd::ron(a, a, empty, lcd::RigidTransform::identity(), 0.1),
                    lcd::EmptyCorrespondences);
}

TEST_CASE("ron is monotone in the error threshold") {
    lcd::Rng rng(82);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = testutil::random_cloud(rng, 40, 1.0);
        const auto b = testutil::random_cloud(rng, 40, 1.0);
        lcd::CorrespondenceSet c;
        for (std::size_t k = 0; k < 40; ++k) c.pairs.emplace_back(k, k);
        c.size_a = c.size_b = 40;
        const auto t = testutil::random_transform(rng, 1.0, 0.5);

        double prev = 0.0;
        for (const double tau : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0}) {
            const double r = lcd::ron(a, b, c, t, tau);
            CHECK(r >= prev);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            prev = r;
        }
    }
}

TEST_CASE("a keyframe verified against itself is accepted") {
    lcd::Rng rng(83);
    auto kf = manual_keyframe(7, rng, 50, Point3(0, 0, 0));
    const auto v = lcd::verify_pair(kf, kf, lcd::LoopConfig{}, small_ransac(83));
    CHECK(v.overlap == 1.0);
    REQUIRE(v.ron.has_value());
    CHECK(*v.ron == 1.0);
    CHECK(v.decision == lcd::LoopDecision::accepted);
    REQUIRE(v.transform.has_value());
    CHECK(v.transform->translation.norm() < 1e-9);
    CHECK(lcd::rotation_angle_between(*v.transform, lcd::RigidTransform::identity()) < 1e-6);
}

TEST_CASE("rejection below the overlap gate skips registration") {
    lcd::Rng rng(84);
    const auto q = manual_keyframe(10, rng, 40, Point3(0, 0, 0));
    const auto c = manual_keyframe(2, rng, 40, Point3(0, 0, 0));
    lcd::LoopConfig cfg;
    cfg.overlap_threshold = 1.0;
    const auto v = lcd::verify_pair(q, c, cfg, small_ransac(84));
    CHECK(v.decision == lcd::LoopDecision::rejected_overlap);
    CHECK_FALSE(v.transform.has_value());
    CHECK_FALSE(v.ron.has_value());
}

TEST_CASE("planted loop pair is accepted with a tight transform") {
    lcd::SceneSpec scene;
    scene.planes = 2;
    scene.spheres = 1;
    scene.boxes = 1;
    scene.plane_size = 0.8;
    scene.sphere_radius = 0.25;
    scene.box_size = 0.3;
    scene.density = 2500.0;
    scene.noise_sigma = 0.0;
    scene.seed = 85;
    const auto cloud = lcd::gen_scene(scene);

    lcd::RigidTransform t;
    t.rotation = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    t.translation = Point3(0.4, -0.2, 0.1);
    const auto pair = lcd::gen_loop_pair(cloud, t, 0.6, 0.002, 86);

    const auto query = describe_cloud(1, pair.p_t, 0.2, 86);
    const auto cand = describe_cloud(0, pair.p_t_prime, 0.2, 86);

    const auto v = lcd::verify_pair(query, cand, lcd::LoopConfig{}, lcd::RansacConfig{});
    CHECK(v.decision == lcd::LoopDecision::accepted);
    REQUIRE(v.transform.has_value());
    CHECK(lcd::rotation_angle_between(*v.transform, pair.t_gt) < 2.0 * kDeg);
    CHECK((v.transform->translation - pair.t_gt.translation).norm() < 0.05);
}

TEST_CASE("unrelated rooms fail the overlap gate") {
    lcd::SceneSpec a;
    a.planes = 0;
    a.spheres = 3;
    a.boxes = 0;
    a.sphere_radius = 0.25;
    a.density = 2500.0;
    a.noise_sigma = 0.001;
    a.seed = 87;

    lcd::SceneSpec b;
    b.planes = 0;
    b.spheres = 0;
    b.boxes = 3;
    b.box_size = 0.3;
    b.density = 2500.0;
    b.noise_sigma = 0.001;
    b.seed = 88;

    const auto query = describe_cloud(1, lcd::gen_scene(a), 0.2, 87);
    const auto cand = describe_cloud(0, lcd::gen_scene(b), 0.2, 88);
    const auto v = lcd::verify_pair(query, cand, lcd::LoopConfig{}, small_ransac(88));
    CHECK(v.decision == lcd::LoopDecision::rejected_overlap);
}

TEST_CASE("keyframe store demands increasing ids") {
    lcd::Rng rng(89);
    lcd::KeyframeStore store;
    store.push(manual_keyframe(0, rng, 20, Point3(0, 0, 0)));
    store.push(manual_keyframe(5, rng, 20, Point3(0, 0, 0)));
    CHECK_THROWS_AS(store.push(manual_keyframe(5, rng, 20, Point3(0, 0, 0))),
                    lcd::InvariantViolation);
}

TEST_CASE("a short history leaves setting1 queries without candidates") {
    lcd::Rng rng(90);
    lcd::KeyframeStore store;
    for (std::int64_t id = 0; id < 50; ++id) {
        store.push(manual_keyframe(id, rng, 20, Point3(0, 0, 0)));
    }
    const auto query = manual_keyframe(50, rng, 20, Point3(0, 0, 0));
    const auto res = lcd::query_loops(store, query, lcd::LoopConfig{}, small_ransac(90),
                                      lcd::QueryMode::setting1);
    CHECK_FALSE(res.best.has_value());
    CHECK(res.scored.empty());
}

TEST_CASE("setting1 candidates are a subset of setting2") {
    lcd::Rng rng(91);
    lcd::KeyframeStore store;
    for (std::int64_t id = 0; id < 130; ++id) {
        store.push(manual_keyframe(id, rng, 15, Point3(0, 0, 0)));
    }
    const auto query = manual_keyframe(130, rng, 15, Point3(0, 0, 0));
    lcd::LoopConfig cfg;
    cfg.overlap_threshold = 1.0;

    const auto s1 =
        lcd::query_loops(store, query, cfg, small_ransac(91), lcd::QueryMode::setting1);
    const auto s2 =
        lcd::query_loops(store, query, cfg, small_ransac(91), lcd::QueryMode::setting2);

    std::set<std::int64_t> ids1;
    std::set<std::int64_t> ids2;
    for (const auto& row : s1.scored) ids1.insert(row.candidate_id);
    for (const auto& row : s2.scored) ids2.insert(row.candidate_id);
    CHECK(ids2.size() == 130);
    CHECK(std::includes(ids2.begin(), ids2.end(), ids1.begin(), ids1.end()));
    for (const auto id : ids1) CHECK(id <= 30);
}

TEST_CASE("the positional prior gates setting1 candidates") {
    lcd::Rng rng(92);
    lcd::KeyframeStore store;
    for (std::int64_t id = 0; id < 131; ++id) {
        store.push(manual_keyframe(id, rng, 15, Point3(static_cast<double>(id), 0, 0)));
    }
    auto query = manual_keyframe(131, rng, 15, Point3(5.0, 0, 0));

    lcd::LoopConfig cfg;
    cfg.overlap_threshold = 1.0;
    cfg.positional_prior = lcd::PositionalPrior{};

    const auto res =
        lcd::query_loops(store, query, cfg, small_ransac(92), lcd::QueryMode::setting1);
    std::set<std::int64_t> ids;
    for (const auto& row : res.scored) ids.insert(row.candidate_id);
    CHECK(ids == std::set<std::int64_t>{2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("query against a planted revisit finds the true keyframe") {
    const auto& seq = planted_sequence();
    REQUIRE(seq.loops.size() == 1);
    const auto& loop = seq.loops[0];

    const auto& kfs = planted_described();
    lcd::KeyframeStore store;
    for (std::size_t pos = 0; pos + 1 < kfs.size(); ++pos) store.push(kfs[pos]);

    const auto res = lcd::query_loops(store, kfs.back(), lcd::LoopConfig{}, lcd::RansacConfig{},
                                      lcd::QueryMode::setting1);
    REQUIRE(res.best.has_value());
    CHECK(res.best->candidate_id == loop.earlier_id);
    CHECK(res.best->query_id == loop.later_id);
    CHECK(res.best->decision == lcd::LoopDecision::accepted);

    REQUIRE(res.best->transform.has_value());
    CHECK(lcd::rotation_angle_between(*res.best->transform, loop.relative) < 2.0 * kDeg);
    CHECK((res.best->transform->translation - loop.relative.translation).norm() < 0.05);
}

TEST_CASE("run_sequence with stride keeps the setting2 pair combinatorics") {
    lcd::Rng rng(93);
    std::vector<lcd::DescribedKeyframe> kfs;
    for (std::int64_t id = 0; id < 60; ++id) {
        kfs.push_back(manual_keyframe(id, rng, 12, Point3(0, 0, 0)));
    }
    lcd::LoopConfig cfg;
    cfg.overlap_threshold = 1.0;
    const auto res = lcd::run_sequence(kfs, cfg, small_ransac(93), lcd::QueryMode::setting2, 20);

    CHECK(res.score_log.size() == 3);
    std::set<std::int64_t> queries;
    std::set<std::int64_t> cands;
    for (const auto& row : res.score_log) {
        queries.insert(row.query_id);
        cands.insert(row.candidate_id);
    }
    CHECK(queries == std::set<std::int64_t>{20, 40});
    CHECK(cands == std::set<std::int64_t>{0, 20});
    CHECK(res.verdicts.size() == 2);
    for (const auto& v : res.verdicts) CHECK(v.decision != lcd::LoopDecision::accepted);
}

TEST_CASE("a sequence without revisits accepts nothing") {
    lcd::Rng rng(94);
    std::vector<lcd::DescribedKeyframe> kfs;
    for (std::int64_t id = 0; id < 20; ++id) {
        kfs.push_back(manual_keyframe(id, rng, 25, Point3(0, 0, 0)));
    }
    const auto res =
        lcd::run_sequence(kfs, lcd::LoopConfig{}, small_ransac(94), lcd::QueryMode::setting2);
    for (const auto& v : res.verdicts) CHECK(v.decision != lcd::LoopDecision::accepted);
}

TEST_CASE("score log text round-trips") {
    std::vector<lcd::ScoredPair> rows(3);
    rows[0] = {120, 3, 0.25, 0.75, lcd::LoopDecision::accepted};
    rows[1] = {120, 4, 0.125, std::nullopt, std::nullopt};
    rows[2] = {121, 3, 0.5, 0.1, lcd::LoopDecision::rejected_ron};

    const auto text = lcd::format_score_log(rows);
    const auto back = lcd::parse_score_log(text);
    REQUIRE(back.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(back[k].query_id == rows[k].query_id);
        CHECK(back[k].candidate_id == rows[k].candidate_id);
        CHECK(back[k].overlap == rows[k].overlap);
        CHECK(back[k].ron == rows[k].ron);
        CHECK(back[k].decision == rows[k].decision);
    }
}

TEST_CASE("accepted loops text lists accepted verdicts with transforms") {
    lcd::LoopVerdict v;
    v.query_id = 42;
    v.candidate_id = 7;
    v.overlap = 0.5;
    v.transform = lcd::RigidTransform::identity();
    v.ron = 0.9;
    v.decision = lcd::LoopDecision::accepted;

    lcd::LoopVerdict rejected = v;
    rejected.decision = lcd::LoopDecision::rejected_ron;

    const auto text = lcd::format_accepted_loops({v, rejected});
    CHECK(text.find("42,7") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

} // TEST_SUITE
