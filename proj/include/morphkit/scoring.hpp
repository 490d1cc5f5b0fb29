#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morphkit/protocols.hpp"

namespace morphkit {

class AdapterProcess;

struct EmbeddingRecord {
  std::string sample_id;
  std::string owner_id;
  std::vector<double> vector;
};

/// Embeddings keyed by sample id. All vectors share one dimension, are
/// finite and have nonzero norm.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::vector<EmbeddingRecord> records);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::span<const EmbeddingRecord> records() const noexcept { return records_; }

  const EmbeddingRecord* find(std::string_view sample_id) const;
  const EmbeddingRecord& at(std::string_view sample_id) const;

  /// Adds every record of `other`; dimensions must agree and ids must not repeat.
  void merge(const EmbeddingSet& other);

 private:
  void add(EmbeddingRecord record);

  std::size_t dimension_ = 0;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// CSV with header "sample_id,owner_id,v0,v1,...,v{d-1}".
EmbeddingSet parse_embeddings(std::string_view csv);
EmbeddingSet load_embeddings(const std::filesystem::path& path);
std::string format_embeddings(const EmbeddingSet& embeddings);

/// Componentwise mean of the enrollment vectors.
std::vector<double> reference_model(std::span<const std::vector<double>> samples);

/// Cosine similarity in [-1, 1]; higher means more alike.
double cosine_score(std::span<const double> u, std::span<const double> v);

/// Asks an extractor adapter for one vector per image:
/// {"op":"embed","image":...} -> {"vector":[...]}. The sample id of each
/// record is the image path as given and the owner id is its file stem.
EmbeddingSet extract_embeddings_external(AdapterProcess& adapter,
                                         std::span<const std::filesystem::path> images);

/// How the scores of several samples of one contributing subject collapse
/// into that subject's score for a morph.
enum class SubjectAggregation { Max, Mean };

SubjectAggregation parse_aggregation(std::string_view text);
const char* to_string(SubjectAggregation aggregation);

struct ScoredTrial {
  Trial trial;
  double score = 0.0;
};

struct SubjectScore {
  std::string subject;
  double score = 0.0;
};

struct MorphGroup {
  std::string morph_id;
  std::array<SubjectScore, 2> subjects;
};

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> zero_effort;
  std::vector<MorphGroup> morph_groups;  // sorted by morph id
  std::vector<ScoredTrial> trials;       // in trial order
};

/// Scores every trial as cosine(mean of the model's enrollment vectors, probe
/// vector), looking samples up by their manifest path.
ScoreSet score_trials(const ScenarioManifest& manifest, std::span<const Trial> trials,
                      const EmbeddingSet& embeddings,
                      SubjectAggregation aggregation = SubjectAggregation::Max);

/// CSV "kind,model_id,probe_id,score" with scores printed to round-trip.
std::string format_score_dump(const ScoreSet& scores);

}  // namespace morphkit
