#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <Eigen/Geometry>

#include "helpers.hpp"
#include "lcd/geometry.hpp"
#include "lcd/io.hpp"
#include "lcd/synthetic.hpp"

using testutil::TempDir;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const TempDir& dir, const std::string& args) {
    const auto out_path = dir.file("stdout.txt");
    const auto err_path = dir.file("stderr.txt");
    const std::string cmd = std::string(LCDET_BIN) + " " + args + " > " + out_path.string() +
                            " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = testutil::read_file(out_path);
    res.err = testutil::read_file(err_path);
    return res;
}

void write_scene_ply(const std::filesystem::path& path, std::uint64_t seed) {
    lcd::SceneSpec spec;
    spec.planes = 2;
    spec.plane_size = 0.8;
    spec.sphere_radius = 0.25;
    spec.box_size = 0.3;
    spec.density = 2500.0;
    spec.seed = seed;
    lcd::write_ply(path, lcd::gen_scene(spec), true);
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-synthetic lays out the full benchmark directory") {
    TempDir dir("cli-gen");
    const auto out = dir.file("bench");
    const auto res = run_cli(dir, "gen-synthetic --frames 8 --loops 0 --density 700 --seed 3 --out " +
                                      out.string());
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("frames=8") != std::string::npos);

    CHECK(std::filesystem::exists(out / "manifest.txt"));
    CHECK(std::filesystem::exists(out / "groundtruth.txt"));
    CHECK(std::filesystem::exists(out / "labels.csv"));
    CHECK(std::filesystem::exists(out / "planted_loops.csv"));
    for (int i = 0; i < 8; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%06d", i);
        CHECK(std::filesystem::exists(out / "clouds" / (std::string(name) + ".ply")));
        CHECK(std::filesystem::exists(out / "descriptors" / (std::string(name) + ".l3dd")));
    }

    const auto traj = lcd::read_trajectory(out / "groundtruth.txt");
    CHECK(traj.size() == 8);
}

TEST_CASE("detect-loops is reproducible byte for byte") {
    TempDir dir("cli-detect");
    const auto bench = dir.file("bench");
    auto res = run_cli(dir, "gen-synthetic --frames 10 --loops 0 --density 700 --seed 4 --out " +
                                bench.string());
    REQUIRE(res.exit_code == 0);

    testutil::write_file(dir.file("fast.cfg"),
                         "max_iterations=20000\nconfirmation_iterations=500\n");
    const std::string common = "detect-loops --manifest " + (bench / "manifest.txt").string() +
                               " --mode setting2 --config " + dir.file("fast.cfg").string() +
                               " --seed 4 --out ";

    res = run_cli(dir, common + dir.file("run1").string());
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("keyframes=10") != std::string::npos);
    res = run_cli(dir, common + dir.file("run2").string());
    REQUIRE(res.exit_code == 0);

    const auto log1 = testutil::read_file(dir.file("run1") / "score_log.csv");
    const auto log2 = testutil::read_file(dir.file("run2") / "score_log.csv");
    CHECK(log1 == log2);
    CHECK(log1.rfind("query_id,candidate_id,overlap,ron,decision", 0) == 0);

    const auto acc1 = testutil::read_file(dir.file("run1") / "accepted_loops.csv");
    const auto acc2 = testutil::read_file(dir.file("run2") / "accepted_loops.csv");
    CHECK(acc1 == acc2);
}

TEST_CASE("detect-loops stride thins the protocol") {
    TempDir dir("cli-stride");
    const auto bench = dir.file("bench");
    auto res = run_cli(dir, "gen-synthetic --frames 9 --loops 0 --density 700 --seed 5 --out " +
                                bench.string());
    REQUIRE(res.exit_code == 0);

    testutil::write_file(dir.file("fast.cfg"),
                         "max_iterations=20000\nconfirmation_iterations=500\n");
    const std::string base = "detect-loops --manifest " + (bench / "manifest.txt").string() +
                             " --mode setting2 --config " + dir.file("fast.cfg").string();

    res = run_cli(dir, base + " --stride 4 --out " + dir.file("strided").string());
    REQUIRE(res.exit_code == 0);
    const auto log = lcd::parse_score_log(testutil::read_file(dir.file("strided") / "score_log.csv"));
    for (const auto& row : log) {
        CHECK(row.query_id % 4 == 0);
        CHECK(row.candidate_id % 4 == 0);
    }
}

TEST_CASE("register-pair accepts a cloud against itself near identity") {
    TempDir dir("cli-self");
    write_scene_ply(dir.file("room.ply"), 31);
    const auto res = run_cli(dir, "register-pair --profile indoor --cloud-a " +
                                      dir.file("room.ply").string() + " --cloud-b " +
                                      dir.file("room.ply").string());
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.rfind("overlap=", 0) == 0);
    REQUIRE(res.out.find("ron=") != std::string::npos);
    CHECK(res.out.find("decision=accepted") != std::string::npos);

    // The query and candidate roles subsample keypoints independently, so
    // overlap stays below 1 even for identical clouds; it must still clear
    // the gate comfortably and the recovered transform must be identity.
    const double overlap = std::stod(res.out.substr(res.out.find("overlap=") + 8));
    const double ron = std::stod(res.out.substr(res.out.find("ron=") + 4));
    CHECK(overlap > 0.2);
    CHECK(ron > 0.9);

    const auto matrix_begin = res.out.find('\n') + 1;
    const auto matrix_end = res.out.find("decision=");
    REQUIRE(matrix_end != std::string::npos);
    std::istringstream cells(res.out.substr(matrix_begin, matrix_end - matrix_begin));
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) REQUIRE(static_cast<bool>(cells >> m(r, c)));
    lcd::RigidTransform t;
    t.rotation = m.block<3, 3>(0, 0);
    t.translation = m.block<3, 1>(0, 3);
    CHECK(lcd::rotation_angle_between(t, lcd::RigidTransform::identity()) < 0.02);
    CHECK(t.translation.norm() < 0.02);
}

TEST_CASE("eval-pr reproduces a hand-checked sweep") {
    TempDir dir("cli-pr");
    testutil::write_file(dir.file("log.csv"),
                         "query_id,candidate_id,overlap,ron,decision\n"
                         "1,11,0.9,0.9,accepted\n"
                         "2,12,0.8,0.8,rejected_ron\n"
                         "3,13,0.7,0.7,accepted\n"
                         "4,14,0.6,0.6,rejected_ron\n");
    testutil::write_file(dir.file("labels.csv"),
                         "query_id,candidate_id,gt_overlap\n"
                         "1,11,0.8\n"
                         "2,12,0.1\n"
                         "3,13,0.5\n"
                         "4,14,0.0\n");
    const auto res = run_cli(dir, "eval-pr --score overlap --log " + dir.file("log.csv").string() +
                                      " --labels " + dir.file("labels.csv").string());
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("auc=0.7916666666666") != std::string::npos);
}

TEST_CASE("eval-ate reports zero error for identical trajectories") {
    TempDir dir("cli-ate");
    lcd::Trajectory traj;
    for (int i = 0; i < 12; ++i) {
        lcd::TrajectoryEntry e;
        e.timestamp = 0.1 * i;
        e.pose.translation = lcd::Point3(i, std::sin(0.4 * i), 0.1 * i);
        e.pose.rotation =
            Eigen::AngleAxisd(0.05 * i, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        traj.entries.push_back(e);
    }
    lcd::write_trajectory(dir.file("traj.txt"), traj);
    const auto res = run_cli(dir, "eval-ate --est " + dir.file("traj.txt").string() + " --gt " +
                                      dir.file("traj.txt").string());
    REQUIRE(res.exit_code == 0);
    REQUIRE(res.out.rfind("rmse_m=", 0) == 0);
    const double rmse = std::stod(res.out.substr(7));
    CHECK(rmse < 1e-9);
}

TEST_CASE("missing inputs fail with a named path") {
    TempDir dir("cli-missing");
    const auto res =
        run_cli(dir, "eval-ate --est /nonexistent/a.txt --gt /nonexistent/b.txt");
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("/nonexistent/a.txt") != std::string::npos);
}

TEST_CASE("unknown modes are rejected at parse time") {
    TempDir dir("cli-badmode");
    const auto res = run_cli(dir, "detect-loops --manifest x --mode setting9 --out y");
    CHECK(res.exit_code != 0);
}

} // TEST_SUITE
