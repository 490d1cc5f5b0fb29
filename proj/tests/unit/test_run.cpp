#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "morphkit/error.hpp"
#include "morphkit/hashing.hpp"
#include "morphkit/landmarks.hpp"
#include "morphkit/raster.hpp"
#include "morphkit/run.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace morphkit;
using namespace morphkit::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kE2e = fs::path(MORPHKIT_FIXTURE_DIR) / "e2e";

std::string stub(const std::string& mode = "normal") {
  return std::string(MORPHKIT_PYTHON) + " " + MORPHKIT_STUB_ADAPTER + " " + mode;
}

struct Captured {
  std::ostringstream out, err;
  CommandIo io{out, err, {"morphkit", "test"}};
};

void make_images(const fs::path& root, int count) {
  fs::create_directories(root);
  for (int i = 1; i <= count; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "%03d.png", i);
    save_image(gradient_face(40, 48, static_cast<std::uint64_t>(i)), root / name);
  }
}

}  // namespace

TEST_CASE("config parsing") {
  TempDir dir;
  write_file(dir / "c.json", R"({"image_root": "imgs", "protocol": "/abs/p.csv", "alpha": 0.25,
    "tool": "latent", "direction": "probes", "seed": 5, "synthesis_size": 64,
    "evaluation": {"manifests": {"probes": "m.csv"}, "embeddings": ["e.csv"], "aggregation": "mean"}})");
  const RunConfig c = load_run_config(dir / "c.json");
  CHECK(c.image_root == fs::absolute(dir.path()) / "imgs");
  CHECK(c.protocol == "/abs/p.csv");
  CHECK(c.output_root == fs::absolute(dir.path()));
  CHECK(c.alpha == 0.25);
  CHECK(c.tool == MorphTool::Latent);
  CHECK(c.effective_tool_name() == "stylegan");
  CHECK(c.directions == std::vector<Direction>{Direction::MorphsAsProbes});
  CHECK(c.seed == 5);
  CHECK(c.synthesis_size == 64);
  CHECK(c.evaluation.aggregation == SubjectAggregation::Mean);
  CHECK(c.evaluation.manifests.at(Direction::MorphsAsProbes) == fs::absolute(dir.path()) / "m.csv");

  // config_to_json is a fixed point through config_from_json.
  const auto j = config_to_json(c);
  CHECK(config_to_json(config_from_json(j, "/elsewhere")) == j);

  CHECK(parse_directions("both").size() == 2);
  CHECK_THROWS_AS(parse_directions("sideways"), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpah", 0.5}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"evaluation", {{"datset", "x"}}}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpha", "half"}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"tool", "magic"}}, "/"), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array(), "/"), Error);
  write_file(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), Error);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), Error);
}

TEST_CASE("invalid input exits with 1") {
  TempDir dir;
  Captured cap;
  RunConfig c;
  c.output_root = dir.path();
  CHECK(run_command("morph", c, cap.io) == kExitInvalid);
  CHECK(run_command("evaluate", c, cap.io) == kExitInvalid);
  CHECK(run_command("landmarks", c, cap.io) == kExitInvalid);
  CHECK(run_command("dance", c, cap.io) == kExitInvalid);
  c.target_fmr = 1.5;
  CHECK(run_command("report", c, cap.io) == kExitInvalid);
  CHECK(cap.err.str().find("error") != std::string::npos);
}

TEST_CASE("landmarks then landmark morphs") {
  TempDir dir;
  make_images(dir / "imgs", 3);
  RunConfig c;
  c.image_root = dir / "imgs";
  c.landmark_root = dir / "lm";
  c.output_root = dir / "out";
  c.detector_command = stub();
  c.landmark_count = 10;
  c.workers = 2;
  Captured cap;
  REQUIRE(run_command("landmarks", c, cap.io) == kExitOk);
  const std::string first = read_file(dir / "lm" / "001.txt");
  CHECK(load_landmarks(dir / "lm" / "001.txt").size() == 10);
  CHECK(fs::exists(dir / "out" / "run_metadata_landmarks.json"));
  REQUIRE(run_command("landmarks", c, cap.io) == kExitOk);
  CHECK(read_file(dir / "lm" / "001.txt") == first);

  write_file(dir / "pairs.csv", "subject_a,sample_a,subject_b,sample_b\n001,001,002,002\n002,002,003,003\n001,001,003,004\n");
  c.protocol = dir / "pairs.csv";
  c.border_augmentation = true;
  Captured cap2;
  CHECK(run_command("morph", c, cap2.io) == kExitPartial);
  CHECK(cap2.err.str().find("pair 2") != std::string::npos);
  const std::string manifest = read_file(dir / "out" / "manifest.csv");
  CHECK(manifest.find("failed") != std::string::npos);

  // Detector fallback when no landmark directory is configured.
  c.landmark_root.clear();
  c.output_root = dir / "out2";
  Captured cap3;
  CHECK(run_command("morph", c, cap3.io) == kExitPartial);
  std::string second = read_file(dir / "out2" / "manifest.csv");
  for (std::size_t at; (at = second.find("/out2/")) != std::string::npos;) second.replace(at, 6, "/out/");
  CHECK(second == manifest);
}

TEST_CASE("latent morphs through the generator adapter") {
  TempDir dir;
  make_images(dir / "imgs", 2);
  write_file(dir / "pairs.csv", "subject_a,sample_a,subject_b,sample_b\n001,001,002,002\n");
  RunConfig c;
  c.image_root = dir / "imgs";
  c.protocol = dir / "pairs.csv";
  c.output_root = dir / "out";
  c.tool = MorphTool::Latent;
  c.generator_command = stub();
  c.projection_steps = 0;
  c.synthesis_size = 32;
  c.workers = 1;
  c.seed = 3;
  Captured cap;
  REQUIRE(run_command("morph", c, cap.io) == kExitOk);
  CHECK(fs::is_directory(dir / "out" / "latent_cache"));
  const auto meta = nlohmann::json::parse(read_file(dir / "out" / "run_metadata_morph.json"));
  CHECK(meta["seed"] == 3);
  CHECK(meta["exit_code"] == 0);

  c.synthesis_size = 48;
  c.output_root = dir / "out_bad";
  Captured cap2;
  CHECK(run_command("morph", c, cap2.io) == kExitPartial);

  c.generator_command.clear();
  Captured cap3;
  CHECK(run_command("morph", c, cap3.io) == kExitInvalid);
}

TEST_CASE("evaluate, report merge and replay") {
  TempDir dir;
  RunConfig c = load_run_config(kE2e / "config.json");
  c.output_root = dir / "eval";
  Captured cap;
  REQUIRE(run_command("evaluate", c, cap.io) == kExitOk);
  for (const char* name : {"report.txt", "report.csv", "scores_references.csv", "scores_probes.csv"}) {
    CAPTURE(name);
    CHECK(read_file(dir / "eval" / name) == read_file(kE2e / "expected" / name));
  }
  CHECK(cap.out.str() == read_file(kE2e / "expected" / "report.txt"));

  // One direction per run, merged back together.
  RunConfig r = c;
  r.directions = {Direction::MorphsAsReferences};
  r.output_root = dir / "r";
  RunConfig p = c;
  p.directions = {Direction::MorphsAsProbes};
  p.output_root = dir / "p";
  REQUIRE(run_command("evaluate", r, cap.io) == kExitOk);
  REQUIRE(run_command("evaluate", p, cap.io) == kExitOk);
  RunConfig rep;
  rep.target_fmr = c.target_fmr;
  rep.reports = {dir / "r" / "report.csv", dir / "p" / "report.csv"};
  Captured cap2;
  REQUIRE(run_command("report", rep, cap2.io, dir / "merged.txt") == kExitOk);
  CHECK(read_file(dir / "merged.txt") == read_file(kE2e / "expected" / "report.txt"));
  rep.reports.push_back(dir / "r" / "report.csv");
  CHECK(run_command("report", rep, cap2.io) == kExitInvalid);

  // Replay from metadata reproduces the config; tampering is detected.
  const fs::path meta = dir / "eval" / "run_metadata_evaluate.json";
  std::string command;
  const RunConfig replayed = config_from_metadata(meta, &command);
  CHECK(command == "evaluate");
  CHECK(config_to_json(replayed) == config_to_json(c));
  auto j = nlohmann::json::parse(read_file(meta));
  CHECK(j["config_sha256"] == sha256_hex(j["config"].dump()));
  j["config"]["target_fmr"] = 0.5;
  write_file(dir / "tampered.json", j.dump());
  CHECK_THROWS_AS(config_from_metadata(dir / "tampered.json"), Error);

  // A manifest whose morphs sit on the wrong side is rejected.
  RunConfig swapped = c;
  swapped.evaluation.manifests[Direction::MorphsAsReferences] = kE2e / "manifest_probes.csv";
  swapped.output_root = dir / "swapped";
  CHECK(run_command("evaluate", swapped, cap.io) == kExitInvalid);
}
