#include <doctest.h>

#include <string>

#include "helpers.hpp"
#include "lcd/config.hpp"
#include "lcd/errors.hpp"

using testutil::TempDir;

TEST_SUITE("config") {

TEST_CASE("key=value parsing trims, skips comments and blanks") {
    const std::string text =
        "# header comment\n"
        "\n"
        "  alpha = 1.5  \n"
        "beta=hello world # trailing note\n"
        "\r\n"
        "gamma =  spaced value \r\n";
    const auto kv = lcd::KeyValueFile::parse(text);
    CHECK(kv.get("alpha") == "1.5");
    CHECK(kv.get("beta") == "hello world");
    CHECK(kv.get("gamma") == "spaced value");
    CHECK(kv.has("alpha"));
    CHECK_FALSE(kv.has("delta"));
    CHECK(kv.get("delta", "fallback") == "fallback");
}

TEST_CASE("typed getters convert or fall back") {
    const auto kv = lcd::KeyValueFile::parse("x=2.5\nn=42\nflag=true\noff=0\n");
    CHECK(kv.get_double("x", 0.0) == 2.5);
    CHECK(kv.get_double("missing", 7.25) == 7.25);
    CHECK(kv.get_int("n", 0) == 42);
    CHECK(kv.get_int("missing", -3) == -3);
    CHECK(kv.get_bool("flag", false));
    CHECK_FALSE(kv.get_bool("off", true));
    CHECK(kv.get_bool("missing", true));
}

TEST_CASE("typed getters reject malformed values") {
    const auto kv = lcd::KeyValueFile::parse("x=two\nn=1.5\nflag=maybe\n");
    CHECK_THROWS_AS(kv.get_double("x", 0.0), lcd::ParseError);
    CHECK_THROWS_AS(kv.get_int("n", 0), lcd::ParseError);
    CHECK_THROWS_AS(kv.get_bool("flag", false), lcd::ParseError);
}

TEST_CASE("lines without an equals sign are parse errors") {
    CHECK_THROWS_AS(lcd::KeyValueFile::parse("just a line\n"), lcd::ParseError);
    CHECK_THROWS_AS(lcd::KeyValueFile::parse("=value\n"), lcd::ParseError);
}

TEST_CASE("profiles set patch radius and label distance") {
    lcd::PipelineConfig cfg;
    lcd::apply_profile(cfg, "lidar");
    CHECK(cfg.sampling.patch_radius == 2.5);
    CHECK(cfg.gt_label_dist == 1.0);
    lcd::apply_profile(cfg, "indoor");
    CHECK(cfg.sampling.patch_radius == 0.2);
    CHECK(cfg.gt_label_dist == 0.1);
    CHECK(cfg.profile == "indoor");
    CHECK_THROWS_AS(lcd::apply_profile(cfg, "submarine"), lcd::ParseError);
}

TEST_CASE("pipeline config starts from defaults and applies overrides") {
    const auto defaults = lcd::make_pipeline_config(lcd::KeyValueFile::parse(""), ".");
    CHECK(defaults.profile == "lidar");
    CHECK(defaults.sampling.fraction == 0.4);
    CHECK(defaults.sampling.patch_radius == 2.5);
    CHECK(defaults.ransac.max_iterations == 500000);
    CHECK(defaults.ransac.inlier_threshold == 0.03);
    CHECK(defaults.loop.overlap_threshold == 0.13);
    CHECK(defaults.loop.error_threshold == 0.1);
    CHECK(defaults.loop.ron_threshold == 0.2);
    CHECK(defaults.loop.exclusion_window == 100);
    CHECK_FALSE(defaults.loop.positional_prior.has_value());
    CHECK_FALSE(defaults.loop.rank_by_ron);

    const auto kv = lcd::KeyValueFile::parse(
        "profile=indoor\n"
        "fraction=0.25\n"
        "patch_radius=0.35\n"
        "max_iterations=1000\n"
        "overlap_threshold=0.2\n"
        "rank_by_ron=true\n");
    const auto cfg = lcd::make_pipeline_config(kv, ".");
    CHECK(cfg.profile == "indoor");
    CHECK(cfg.gt_label_dist == 0.1);
    CHECK(cfg.sampling.fraction == 0.25);
    CHECK(cfg.sampling.patch_radius == 0.35);
    CHECK(cfg.ransac.max_iterations == 1000);
    CHECK(cfg.loop.overlap_threshold == 0.2);
    CHECK(cfg.loop.rank_by_ron);
}

TEST_CASE("prior settings build a positional prior") {
    const auto kv = lcd::KeyValueFile::parse("prior_sigma=0.5\nprior_multiplier=2\n");
    const auto cfg = lcd::make_pipeline_config(kv, ".");
    REQUIRE(cfg.loop.positional_prior.has_value());
    CHECK(cfg.loop.positional_prior->sigma_default == 0.5);
    CHECK(cfg.loop.positional_prior->multiplier == 2.0);
    CHECK(cfg.loop.positional_prior->sigmas.empty());
}

TEST_CASE("sigma series files load one value per line") {
    TempDir dir("sigma");
    testutil::write_file(dir.file("s.txt"), "# per-frame sigmas\n0.1\n0.2\n\n0.3\n");
    const auto sigmas = lcd::read_sigma_series(dir.file("s.txt"));
    REQUIRE(sigmas.size() == 3);
    CHECK(sigmas[0] == 0.1);
    CHECK(sigmas[2] == 0.3);

    testutil::write_file(dir.file("bad.txt"), "0.1\nnot-a-number\n");
    CHECK_THROWS_AS(lcd::read_sigma_series(dir.file("bad.txt")), lcd::ParseError);
    CHECK_THROWS_AS(lcd::read_sigma_series(dir.file("absent.txt")), lcd::IoError);
}

TEST_CASE("sigma series paths resolve against the config directory") {
    TempDir dir("cfgdir");
    testutil::write_file(dir.file("sigmas.txt"), "1.0\n2.0\n");
    testutil::write_file(dir.file("pipeline.cfg"), "sigma_series=sigmas.txt\n");
    const auto cfg = lcd::load_pipeline_config(dir.file("pipeline.cfg"));
    REQUIRE(cfg.loop.positional_prior.has_value());
    REQUIRE(cfg.loop.positional_prior->sigmas.size() == 2);
    CHECK(cfg.loop.positional_prior->sigmas[1] == 2.0);
}

TEST_CASE("manifests resolve keyframe paths and metadata") {
    TempDir dir("manifest");
    testutil::write_file(dir.file("run.manifest"),
                         "profile=indoor\n"
                         "trajectory=priors.txt\n"
                         "cloud.0=frames/a.ply\n"
                         "desc.0=frames/a.l3dd\n"
                         "cloud.2=/abs/b.ply\n");
    const auto manifest = lcd::load_manifest(dir.file("run.manifest"));
    CHECK(manifest.profile == "indoor");
    REQUIRE(manifest.trajectory.has_value());
    CHECK(*manifest.trajectory == dir.file("priors.txt"));

    REQUIRE(manifest.entries.size() == 2);
    CHECK(manifest.entries[0].id == 0);
    CHECK(manifest.entries[0].cloud == dir.path() / "frames/a.ply");
    REQUIRE(manifest.entries[0].descriptors.has_value());
    CHECK(*manifest.entries[0].descriptors == dir.path() / "frames/a.l3dd");
    CHECK(manifest.entries[1].id == 2);
    CHECK(manifest.entries[1].cloud == std::filesystem::path("/abs/b.ply"));
    CHECK_FALSE(manifest.entries[1].descriptors.has_value());
}

TEST_CASE("manifests without usable keyframes are rejected") {
    TempDir dir("manifest-bad");
    testutil::write_file(dir.file("empty.manifest"), "profile=lidar\n");
    CHECK_THROWS_AS(lcd::load_manifest(dir.file("empty.manifest")), lcd::ParseError);

    testutil::write_file(dir.file("orphan.manifest"), "desc.3=d.l3dd\n");
    CHECK_THROWS_AS(lcd::load_manifest(dir.file("orphan.manifest")), lcd::ParseError);

    testutil::write_file(dir.file("badid.manifest"), "cloud.x7=a.ply\n");
    CHECK_THROWS_AS(lcd::load_manifest(dir.file("badid.manifest")), lcd::ParseError);
}

} // TEST_SUITE
