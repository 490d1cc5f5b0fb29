#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace morphkit {

struct PairRow {
  std::string subject_a;
  std::string sample_a;
  std::string subject_b;
  std::string sample_b;

  friend auto operator<=>(const PairRow&, const PairRow&) = default;
};

/// Which bona fide pairs to morph. Rows are distinct and never pair a
/// subject with itself.
struct PairProtocol {
  std::vector<PairRow> rows;

  std::size_t size() const noexcept { return rows.size(); }
};

/// Parses CSV with header "subject_a,sample_a,subject_b,sample_b".
PairProtocol parse_pair_protocol(std::string_view csv);
PairProtocol load_pair_protocol(const std::filesystem::path& path);

enum class Direction { MorphsAsReferences, MorphsAsProbes };

const char* to_string(Direction direction);
/// Accepts "references" / "probes".
Direction parse_direction(std::string_view text);

enum class Role { Reference, Probe };
enum class SampleKind { BonaFide, Morph };

/// One CSV row of a scenario manifest.
struct ManifestRow {
  Role role = Role::Reference;
  SampleKind kind = SampleKind::BonaFide;
  std::string id;
  std::string subject;
  std::string contributor_a;
  std::string contributor_b;
  std::string path;
};

/// An enrolled model: a reference id with one or more samples. Bona fide
/// models have a subject; morph models have two contributors.
struct ReferenceModel {
  std::string id;
  SampleKind kind = SampleKind::BonaFide;
  std::string subject;
  std::array<std::string, 2> contributors;
  std::vector<std::string> samples;
};

struct Probe {
  std::string id;
  SampleKind kind = SampleKind::BonaFide;
  std::string subject;
  std::array<std::string, 2> contributors;
  std::string sample;
};

/// References and probes of one evaluation scenario. The direction is
/// implied by which side carries morphs; a manifest without morphs has no
/// direction.
struct ScenarioManifest {
  std::optional<Direction> direction;
  std::vector<ReferenceModel> references;  // sorted by id
  std::vector<Probe> probes;               // sorted by id

  const ReferenceModel* find_reference(std::string_view id) const;
  const Probe* find_probe(std::string_view id) const;
};

/// Parses CSV with header "role,kind,id,subject,contributor_a,contributor_b,path".
/// Reference rows sharing an id form one multi-sample model.
ScenarioManifest parse_scenario_manifest(std::string_view csv);
ScenarioManifest load_scenario_manifest(const std::filesystem::path& path);

enum class TrialKind { Genuine, ZeroEffort, MorphAttack };

const char* to_string(TrialKind kind);

struct Trial {
  TrialKind kind = TrialKind::Genuine;
  std::string model_id;
  std::string probe_id;
  /// Set for morph attacks only.
  std::string morph_id;
  std::string target_subject;

  friend bool operator==(const Trial&, const Trial&) = default;
};

/// All trials of a scenario, sorted by (model_id, probe_id):
/// bona fide model x bona fide probe is genuine when the subjects match and
/// a zero-effort impostor otherwise; every morph is paired with each bona
/// fide counterpart of its two contributors as a morph attack.
std::vector<Trial> enumerate_trials(const ScenarioManifest& manifest);

}  // namespace morphkit
