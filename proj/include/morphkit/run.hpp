#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphkit/landmarks.hpp"
#include "morphkit/protocols.hpp"
#include "morphkit/scoring.hpp"

namespace morphkit {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,
  kExitPartial = 2,
};

enum class MorphTool { Landmark, Latent };

struct EvaluationConfig {
  std::string dataset = "dataset";
  std::string frs = "frs";
  std::string tool = "opencv";
  std::map<Direction, std::filesystem::path> manifests;
  std::vector<std::filesystem::path> embeddings;
  SubjectAggregation aggregation = SubjectAggregation::Max;
};

/// Everything a run needs. Loaded from a JSON file whose relative paths are
/// resolved against the file's directory, then overridden by CLI flags.
struct RunConfig {
  std::filesystem::path image_root;
  std::filesystem::path landmark_root;
  std::filesystem::path protocol;
  std::filesystem::path output_root = ".";
  std::vector<std::string> images;

  MorphTool tool = MorphTool::Landmark;
  std::string tool_name;  // empty: "opencv" for landmark, "stylegan" for latent
  double alpha = 0.5;
  std::optional<double> geometry_alpha;
  bool border_augmentation = false;

  std::string detector_command;
  std::string generator_command;
  double adapter_timeout_seconds = 600.0;
  std::optional<std::size_t> landmark_count;
  int projection_steps = 1000;
  std::optional<int> synthesis_size;
  std::optional<std::filesystem::path> latent_cache;
  std::optional<AlignmentTemplate> alignment;

  EvaluationConfig evaluation;
  double target_fmr = 0.001;
  std::vector<Direction> directions{Direction::MorphsAsReferences, Direction::MorphsAsProbes};

  std::vector<std::filesystem::path> reports;

  unsigned workers = 0;
  std::optional<long long> seed;

  std::string effective_tool_name() const;
};

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses "references", "probes" or "both".
std::vector<Direction> parse_directions(std::string_view text);

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
  /// Command line recorded in the run metadata.
  std::vector<std::string> argv;
};

int cmd_landmarks(const RunConfig& config, CommandIo& io);
int cmd_morph(const RunConfig& config, CommandIo& io);
int cmd_evaluate(const RunConfig& config, CommandIo& io);
int cmd_report(const RunConfig& config, CommandIo& io, const std::optional<std::filesystem::path>& output);

/// Runs a subcommand by name, mapping library errors to exit codes.
int run_command(const std::string& name, const RunConfig& config, CommandIo& io,
                const std::optional<std::filesystem::path>& report_output = std::nullopt);

/// Loads the config stored in a run_metadata.json and checks its hash.
RunConfig config_from_metadata(const std::filesystem::path& metadata, std::string* command = nullptr);

}  // namespace morphkit
