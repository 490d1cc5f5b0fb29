// morphkit command-line entry point: landmarks, morph, evaluate, report.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morphkit/error.hpp"
#include "morphkit/run.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::string replay;
  std::string output_root;
  std::string tool;
  std::optional<double> alpha;
  std::optional<double> target_fmr;
  std::string direction;
  std::optional<unsigned> workers;
  std::optional<long long> seed;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)");
  cmd->add_option("--replay", o.replay, "Re-run from a run_metadata_*.json file");
  cmd->add_option("--output-root", o.output_root, "Directory for outputs and run metadata");
  cmd->add_option("--tool", o.tool, "Morph tool: landmark or latent")
      ->check(CLI::IsMember({"landmark", "latent"}));
  cmd->add_option("--alpha", o.alpha, "Blend weight of the first face in [0,1]");
  cmd->add_option("--target-fmr", o.target_fmr, "Operating FMR for MMPMR, in (0,1)");
  cmd->add_option("--direction", o.direction, "references, probes or both")
      ->check(CLI::IsMember({"references", "probes", "both"}));
  cmd->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  cmd->add_option("--seed", o.seed, "Seed forwarded to adapters");
}

morphkit::RunConfig build_config(const Overrides& o, const std::string& command) {
  morphkit::RunConfig config;
  if (!o.replay.empty()) {
    std::string recorded;
    config = morphkit::config_from_metadata(o.replay, &recorded);
    if (!recorded.empty() && recorded != command) {
      throw morphkit::Error(morphkit::ErrorKind::Validation,
                            "metadata records command '" + recorded + "', not '" + command + "'");
    }
  } else if (!o.config.empty()) {
    config = morphkit::load_run_config(o.config);
  } else {
    config.output_root = fs::current_path();
  }
  if (!o.output_root.empty()) config.output_root = fs::absolute(o.output_root);
  if (!o.tool.empty()) {
    config.tool = o.tool == "latent" ? morphkit::MorphTool::Latent : morphkit::MorphTool::Landmark;
  }
  if (o.alpha) config.alpha = *o.alpha;
  if (o.target_fmr) config.target_fmr = *o.target_fmr;
  if (!o.direction.empty()) config.directions = morphkit::parse_directions(o.direction);
  if (o.workers) config.workers = *o.workers;
  if (o.seed) config.seed = *o.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Face morph generation and morphing-attack vulnerability evaluation"};
  app.require_subcommand(1);

  Overrides overrides;
  std::vector<std::string> report_inputs;
  std::string report_output;

  auto* landmarks = app.add_subcommand("landmarks", "Detect landmarks through the detector adapter");
  auto* morph = app.add_subcommand("morph", "Generate morphs for a pair protocol");
  auto* evaluate = app.add_subcommand("evaluate", "Score scenarios and compute MMPMR at a target FMR");
  auto* report = app.add_subcommand("report", "Render report CSVs as one MMPMR table");
  for (auto* cmd : {landmarks, morph, evaluate, report}) add_common(cmd, overrides);
  report->add_option("reports", report_inputs, "report.csv files from evaluate runs");
  report->add_option("-o,--output", report_output, "Also write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : morphkit::kExitInvalid;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  morphkit::CommandIo io{std::cout, std::cerr, std::vector<std::string>(argv, argv + argc)};
  morphkit::RunConfig config;
  try {
    config = build_config(overrides, name);
    for (const auto& r : report_inputs) config.reports.push_back(fs::absolute(r));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return morphkit::kExitInvalid;
  }
  std::optional<fs::path> output;
  if (!report_output.empty()) output = report_output;
  return morphkit::run_command(name, config, io, output);
}
