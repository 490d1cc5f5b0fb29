#include "morphkit/protocols.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "morphkit/error.hpp"

namespace morphkit {

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, std::string("cannot open ") + what + " " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr std::string_view kPairHeader = "subject_a,sample_a,subject_b,sample_b";
constexpr std::string_view kManifestHeader =
    "role,kind,id,subject,contributor_a,contributor_b,path";

Error row_error(std::size_t row, const std::string& message) {
  return Error(ErrorKind::Validation, "row " + std::to_string(row) + ": " + message);
}

}  // namespace

PairProtocol parse_pair_protocol(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::Format, "pair protocol: missing header");
  csv::require_header(rows[0], kPairHeader, "pair protocol");

  PairProtocol protocol;
  std::set<PairRow> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != 4) {
      throw Error(ErrorKind::Format, "pair protocol row " + std::to_string(r) + ": expected 4 fields, got " +
                                         std::to_string(f.size()));
    }
    for (const auto& field : f) {
      if (field.empty()) throw row_error(r, "empty field");
    }
    PairRow row{f[0], f[1], f[2], f[3]};
    if (row.subject_a == row.subject_b) {
      throw row_error(r, "subject " + row.subject_a + " is paired with itself");
    }
    if (!seen.insert(row).second) throw row_error(r, "duplicate pair");
    protocol.rows.push_back(std::move(row));
  }
  return protocol;
}

PairProtocol load_pair_protocol(const std::filesystem::path& path) {
  try {
    return parse_pair_protocol(read_file(path, "pair protocol"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

const char* to_string(Direction direction) {
  return direction == Direction::MorphsAsReferences ? "references" : "probes";
}

Direction parse_direction(std::string_view text) {
  if (text == "references") return Direction::MorphsAsReferences;
  if (text == "probes") return Direction::MorphsAsProbes;
  throw Error(ErrorKind::Precondition, "unknown direction '" + std::string(text) + "'");
}

const ReferenceModel* ScenarioManifest::find_reference(std::string_view id) const {
  const auto it = std::lower_bound(references.begin(), references.end(), id,
                                   [](const ReferenceModel& m, std::string_view k) { return m.id < k; });
  return it != references.end() && it->id == id ? &*it : nullptr;
}

const Probe* ScenarioManifest::find_probe(std::string_view id) const {
  const auto it = std::lower_bound(probes.begin(), probes.end(), id,
                                   [](const Probe& p, std::string_view k) { return p.id < k; });
  return it != probes.end() && it->id == id ? &*it : nullptr;
}

ScenarioManifest parse_scenario_manifest(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::Format, "scenario manifest: missing header");
  csv::require_header(rows[0], kManifestHeader, "scenario manifest");

  ScenarioManifest manifest;
  bool morph_references = false;
  bool morph_probes = false;
  std::set<std::string> probe_ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != 7) {
      throw Error(ErrorKind::Format, "scenario manifest row " + std::to_string(r) +
                                         ": expected 7 fields, got " + std::to_string(f.size()));
    }
    ManifestRow row;
    if (f[0] == "reference") {
      row.role = Role::Reference;
    } else if (f[0] == "probe") {
      row.role = Role::Probe;
    } else {
      throw row_error(r, "role must be 'reference' or 'probe', got '" + f[0] + "'");
    }
    if (f[1] == "bonafide") {
      row.kind = SampleKind::BonaFide;
    } else if (f[1] == "morph") {
      row.kind = SampleKind::Morph;
    } else {
      throw row_error(r, "kind must be 'bonafide' or 'morph', got '" + f[1] + "'");
    }
    row.id = f[2];
    row.subject = f[3];
    row.contributor_a = f[4];
    row.contributor_b = f[5];
    row.path = f[6];
    if (row.id.empty()) throw row_error(r, "empty id");
    if (row.path.empty()) throw row_error(r, "empty path");
    if (row.kind == SampleKind::BonaFide) {
      if (row.subject.empty()) throw row_error(r, "bona fide entry without a subject");
      if (!row.contributor_a.empty() || !row.contributor_b.empty()) {
        throw row_error(r, "bona fide entry must not name contributors");
      }
    } else {
      if (row.contributor_a.empty() || row.contributor_b.empty()) {
        throw row_error(r, "morph entry must name exactly 2 contributing subjects");
      }
      if (row.contributor_a == row.contributor_b) {
        throw row_error(r, "morph contributors must be distinct");
      }
      (row.role == Role::Reference ? morph_references : morph_probes) = true;
    }

    if (row.role == Role::Reference) {
      auto it = std::find_if(manifest.references.begin(), manifest.references.end(),
                             [&](const ReferenceModel& m) { return m.id == row.id; });
      if (it == manifest.references.end()) {
        ReferenceModel model;
        model.id = row.id;
        model.kind = row.kind;
        model.subject = row.subject;
        model.contributors = {row.contributor_a, row.contributor_b};
        manifest.references.push_back(std::move(model));
        it = std::prev(manifest.references.end());
      } else if (it->kind != row.kind || it->subject != row.subject ||
                 it->contributors[0] != row.contributor_a ||
                 it->contributors[1] != row.contributor_b) {
        throw row_error(r, "reference '" + row.id + "' has inconsistent identity across samples");
      }
      it->samples.push_back(row.path);
    } else {
      if (!probe_ids.insert(row.id).second) throw row_error(r, "duplicate probe id '" + row.id + "'");
      Probe probe;
      probe.id = row.id;
      probe.kind = row.kind;
      probe.subject = row.subject;
      probe.contributors = {row.contributor_a, row.contributor_b};
      probe.sample = row.path;
      manifest.probes.push_back(std::move(probe));
    }
  }
  if (morph_references && morph_probes) {
    throw Error(ErrorKind::Validation,
                "scenario manifest has morphs on both the reference and the probe side");
  }
  if (morph_references) manifest.direction = Direction::MorphsAsReferences;
  if (morph_probes) manifest.direction = Direction::MorphsAsProbes;

  std::sort(manifest.references.begin(), manifest.references.end(),
            [](const ReferenceModel& a, const ReferenceModel& b) { return a.id < b.id; });
  std::sort(manifest.probes.begin(), manifest.probes.end(),
            [](const Probe& a, const Probe& b) { return a.id < b.id; });
  return manifest;
}

ScenarioManifest load_scenario_manifest(const std::filesystem::path& path) {
  try {
    return parse_scenario_manifest(read_file(path, "scenario manifest"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

const char* to_string(TrialKind kind) {
  switch (kind) {
    case TrialKind::Genuine: return "genuine";
    case TrialKind::ZeroEffort: return "zero_effort";
    case TrialKind::MorphAttack: return "morph_attack";
  }
  return "?";
}

std::vector<Trial> enumerate_trials(const ScenarioManifest& manifest) {
  std::set<std::string> reference_subjects;
  std::set<std::string> probe_subjects;
  for (const ReferenceModel& m : manifest.references) {
    if (m.kind == SampleKind::BonaFide) reference_subjects.insert(m.subject);
  }
  for (const Probe& p : manifest.probes) {
    if (p.kind == SampleKind::BonaFide) probe_subjects.insert(p.subject);
  }
  auto require_counterparts = [](const std::string& id, const std::array<std::string, 2>& who,
                                 const std::set<std::string>& subjects, const char* side) {
    for (const std::string& s : who) {
      if (!subjects.contains(s)) {
        throw Error(ErrorKind::Validation, "morph '" + id + "' names contributor '" + s +
                                               "' with no bona fide " + side);
      }
    }
  };
  for (const ReferenceModel& m : manifest.references) {
    if (m.kind == SampleKind::Morph) require_counterparts(m.id, m.contributors, probe_subjects, "probe");
  }
  for (const Probe& p : manifest.probes) {
    if (p.kind == SampleKind::Morph) {
      require_counterparts(p.id, p.contributors, reference_subjects, "reference");
    }
  }

  std::vector<Trial> trials;
  for (const ReferenceModel& model : manifest.references) {
    for (const Probe& probe : manifest.probes) {
      const bool model_morph = model.kind == SampleKind::Morph;
      const bool probe_morph = probe.kind == SampleKind::Morph;
      if (!model_morph && !probe_morph) {
        trials.push_back({model.subject == probe.subject ? TrialKind::Genuine
                                                         : TrialKind::ZeroEffort,
                          model.id, probe.id, {}, {}});
      } else if (model_morph != probe_morph) {
        const auto& contributors = model_morph ? model.contributors : probe.contributors;
        const std::string& other = model_morph ? probe.subject : model.subject;
        if (other == contributors[0] || other == contributors[1]) {
          trials.push_back({TrialKind::MorphAttack, model.id, probe.id,
                            model_morph ? model.id : probe.id, other});
        }
      }
    }
  }
  // references and probes are already sorted by id, so trials are too.
  return trials;
}

}  // namespace morphkit
