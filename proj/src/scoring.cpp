#include "morphkit/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "format.hpp"
#include "morphkit/adapter.hpp"
#include "morphkit/error.hpp"

namespace morphkit {

namespace {

void validate_vector(const EmbeddingRecord& r) {
  double norm_sq = 0.0;
  for (double v : r.vector) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::Validation, "embedding '" + r.sample_id + "' has a non-finite value");
    }
    norm_sq += v * v;
  }
  if (r.vector.empty()) throw Error(ErrorKind::Validation, "embedding '" + r.sample_id + "' is empty");
  if (norm_sq == 0.0) {
    throw Error(ErrorKind::Validation, "embedding '" + r.sample_id + "' is the zero vector");
  }
}

double parse_value(const std::string& token, std::size_t row) {
  std::string_view s = token;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Format,
                "embeddings row " + std::to_string(row) + ": '" + token + "' is not a number");
  }
  return value;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::vector<EmbeddingRecord> records) {
  for (auto& r : records) add(std::move(r));
}

void EmbeddingSet::add(EmbeddingRecord record) {
  validate_vector(record);
  if (records_.empty()) {
    dimension_ = record.vector.size();
  } else if (record.vector.size() != dimension_) {
    throw Error(ErrorKind::Dimension, "embedding '" + record.sample_id + "' has dimension " +
                                          std::to_string(record.vector.size()) + ", expected " +
                                          std::to_string(dimension_));
  }
  if (index_.contains(record.sample_id)) {
    throw Error(ErrorKind::Validation, "duplicate embedding for sample '" + record.sample_id + "'");
  }
  index_.emplace(record.sample_id, records_.size());
  records_.push_back(std::move(record));
}

void EmbeddingSet::merge(const EmbeddingSet& other) {
  for (const auto& r : other.records()) add(r);
}

const EmbeddingRecord* EmbeddingSet::find(std::string_view sample_id) const {
  const auto it = index_.find(std::string(sample_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const EmbeddingRecord& EmbeddingSet::at(std::string_view sample_id) const {
  if (const auto* r = find(sample_id)) return *r;
  throw Error(ErrorKind::Validation, "no embedding for sample '" + std::string(sample_id) + "'");
}

EmbeddingSet parse_embeddings(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::Format, "embeddings: missing header");
  const auto& header = rows[0];
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "owner_id") {
    throw Error(ErrorKind::Format,
                "embeddings: header must be sample_id,owner_id,v0,...; got \"" + csv::join(header) + "\"");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k + 2] != "v" + std::to_string(k)) {
      throw Error(ErrorKind::Format, "embeddings: header column " + std::to_string(k + 2) +
                                         " should be v" + std::to_string(k));
    }
  }
  std::vector<EmbeddingRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != dim + 2) {
      throw Error(ErrorKind::Dimension, "embeddings row " + std::to_string(r) + " has " +
                                            std::to_string(f.size() - std::min<std::size_t>(f.size(), 2)) +
                                            " values, expected " + std::to_string(dim));
    }
    EmbeddingRecord rec{f[0], f[1], {}};
    if (rec.sample_id.empty()) {
      throw Error(ErrorKind::Format, "embeddings row " + std::to_string(r) + ": empty sample_id");
    }
    rec.vector.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) rec.vector.push_back(parse_value(f[k + 2], r));
    records.push_back(std::move(rec));
  }
  return EmbeddingSet(std::move(records));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open embeddings " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_embeddings(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_embeddings(const EmbeddingSet& embeddings) {
  std::string out = "sample_id,owner_id";
  for (std::size_t k = 0; k < embeddings.dimension(); ++k) out += ",v" + std::to_string(k);
  out += '\n';
  for (const auto& r : embeddings.records()) {
    out += csv::escape(r.sample_id);
    out += ',';
    out += csv::escape(r.owner_id);
    for (double v : r.vector) {
      out += ',';
      out += numfmt::exact(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<double> reference_model(std::span<const std::vector<double>> samples) {
  if (samples.empty()) throw Error(ErrorKind::Precondition, "reference model needs at least one sample");
  const std::size_t dim = samples[0].size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& s : samples) {
    if (s.size() != dim) throw Error(ErrorKind::Dimension, "enrollment vectors differ in dimension");
    for (std::size_t k = 0; k < dim; ++k) mean[k] += s[k];
  }
  const double n = static_cast<double>(samples.size());
  for (double& v : mean) v /= n;
  return mean;
}

double cosine_score(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::Dimension, "cosine of vectors with dimensions " + std::to_string(u.size()) +
                                          " and " + std::to_string(v.size()));
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorKind::Validation, "cosine of a zero vector");
  double dot = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) dot += (u[k] / nu) * (v[k] / nv);
  return std::clamp(dot, -1.0, 1.0);
}

EmbeddingSet extract_embeddings_external(AdapterProcess& adapter,
                                         std::span<const std::filesystem::path> images) {
  std::vector<EmbeddingRecord> records;
  records.reserve(images.size());
  for (const auto& image : images) {
    nlohmann::json response;
    try {
      response = adapter.request({{"op", "embed"}, {"image", image.string()}});
    } catch (const Error& e) {
      throw Error(e.kind(), "embedding " + image.string() + ": " + e.what());
    }
    const auto it = response.find("vector");
    if (it == response.end() || !it->is_array()) {
      throw Error(ErrorKind::Validation,
                  "extractor response for " + image.string() + " has no \"vector\" array");
    }
    EmbeddingRecord rec{image.string(), image.stem().string(), {}};
    for (const auto& x : *it) {
      if (!x.is_number()) {
        throw Error(ErrorKind::Validation, "extractor response for " + image.string() +
                                               " contains a non-numeric value");
      }
      rec.vector.push_back(x.get<double>());
    }
    records.push_back(std::move(rec));
  }
  if (records.size() != images.size()) {
    throw Error(ErrorKind::Validation, "extractor returned " + std::to_string(records.size()) +
                                           " vectors for " + std::to_string(images.size()) + " images");
  }
  return EmbeddingSet(std::move(records));
}

SubjectAggregation parse_aggregation(std::string_view text) {
  if (text == "max") return SubjectAggregation::Max;
  if (text == "mean") return SubjectAggregation::Mean;
  throw Error(ErrorKind::Precondition, "unknown aggregation '" + std::string(text) + "'");
}

const char* to_string(SubjectAggregation aggregation) {
  return aggregation == SubjectAggregation::Max ? "max" : "mean";
}

ScoreSet score_trials(const ScenarioManifest& manifest, std::span<const Trial> trials,
                      const EmbeddingSet& embeddings, SubjectAggregation aggregation) {
  std::unordered_map<std::string, std::vector<double>> model_means;
  for (const ReferenceModel& model : manifest.references) {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(model.samples.size());
    for (const std::string& sample : model.samples) {
      try {
        vectors.push_back(embeddings.at(sample).vector);
      } catch (const Error& e) {
        throw Error(e.kind(), "reference '" + model.id + "': " + e.what());
      }
    }
    model_means.emplace(model.id, reference_model(vectors));
  }

  ScoreSet out;
  out.trials.reserve(trials.size());
  std::map<std::string, std::map<std::string, std::vector<double>>> morph_scores;
  for (const Trial& trial : trials) {
    const auto model = model_means.find(trial.model_id);
    if (model == model_means.end()) {
      throw Error(ErrorKind::Validation, "trial references unknown model '" + trial.model_id + "'");
    }
    const Probe* probe = manifest.find_probe(trial.probe_id);
    if (!probe) {
      throw Error(ErrorKind::Validation, "trial references unknown probe '" + trial.probe_id + "'");
    }
    const EmbeddingRecord* probe_vec = embeddings.find(probe->sample);
    if (!probe_vec) {
      throw Error(ErrorKind::Validation,
                  "probe '" + probe->id + "': no embedding for sample '" + probe->sample + "'");
    }
    const double score = cosine_score(model->second, probe_vec->vector);
    switch (trial.kind) {
      case TrialKind::Genuine: out.genuine.push_back(score); break;
      case TrialKind::ZeroEffort: out.zero_effort.push_back(score); break;
      case TrialKind::MorphAttack:
        morph_scores[trial.morph_id][trial.target_subject].push_back(score);
        break;
    }
    out.trials.push_back({trial, score});
  }

  for (const auto& [morph_id, subjects] : morph_scores) {
    if (subjects.size() != 2) {
      throw Error(ErrorKind::Validation, "morph '" + morph_id + "' has trials for " +
                                             std::to_string(subjects.size()) +
                                             " contributing subjects, expected 2");
    }
    MorphGroup group;
    group.morph_id = morph_id;
    std::size_t k = 0;
    for (const auto& [subject, scores] : subjects) {
      double s = 0.0;
      if (aggregation == SubjectAggregation::Max) {
        s = *std::max_element(scores.begin(), scores.end());
      } else {
        for (double v : scores) s += v;
        s /= static_cast<double>(scores.size());
      }
      group.subjects[k++] = {subject, s};
    }
    out.morph_groups.push_back(std::move(group));
  }
  return out;
}

std::string format_score_dump(const ScoreSet& scores) {
  std::string out = "kind,model_id,probe_id,score\n";
  for (const ScoredTrial& t : scores.trials) {
    out += csv::join({to_string(t.trial.kind), t.trial.model_id, t.trial.probe_id,
                      numfmt::exact(t.score)});
    out += '\n';
  }
  return out;
}

}  // namespace morphkit
