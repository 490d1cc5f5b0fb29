#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "morphkit/error.hpp"
#include "morphkit/protocols.hpp"
#include "morphkit/scoring.hpp"
#include "support/tempdir.hpp"

using namespace morphkit;
using namespace morphkit::testing;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

double cosine_oracle(const std::vector<double>& u, const std::vector<double>& v) {
  long double dot = 0, nu = 0, nv = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += static_cast<long double>(u[k]) * v[k];
    nu += static_cast<long double>(u[k]) * u[k];
    nv += static_cast<long double>(v[k]) * v[k];
  }
  return static_cast<double>(dot / std::sqrt(nu * nv));
}

}  // namespace

TEST_CASE("embedding CSV parsing") {
  const EmbeddingSet e = parse_embeddings(
      "sample_id,owner_id,v0,v1,v2,v3\na.png,s1,1,0,0,0\nb.png,s2,0.5,-0.5,1e-3,+2\n");
  CHECK(e.size() == 2);
  CHECK(e.dimension() == 4);
  CHECK(e.at("b.png").vector == std::vector<double>{0.5, -0.5, 1e-3, 2});
  CHECK(e.at("b.png").owner_id == "s2");
  CHECK(e.find("c.png") == nullptr);
  CHECK_THROWS_AS(e.at("c.png"), Error);

  CHECK_THROWS_AS(parse_embeddings("sample_id,owner_id,v0,v1\na,s,nan,1\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("sample_id,owner_id,v0,v1\na,s,inf,1\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("sample_id,owner_id,v0,v1\na,s,0,0\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("sample_id,owner_id,v0,v1\na,s,1,2\nb,s,1,2,3\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("sample_id,owner_id,v0,v1\na,s,1,x\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("sample_id,owner_id,v0,v1\na,s,1,1\na,s,1,2\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("id,owner,v0\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("sample_id,owner_id,v1\n"), Error);
  CHECK_THROWS_AS(parse_embeddings(""), Error);
}

TEST_CASE("mixed dimensions across records or files are rejected") {
  CHECK_THROWS_AS(EmbeddingSet({{"a", "s", {1, 2, 3, 4}}, {"b", "s", {1, 2, 3, 4, 5}}}), Error);
  EmbeddingSet a({{"a", "s", {1, 2}}});
  CHECK_THROWS_AS(a.merge(EmbeddingSet({{"b", "s", {1, 2, 3}}})), Error);
  CHECK_THROWS_AS(a.merge(EmbeddingSet({{"a", "s", {1, 2}}})), Error);
  a.merge(EmbeddingSet({{"b", "t", {3, 4}}}));
  CHECK(a.size() == 2);
}

TEST_CASE("embedding CSV round-trips exactly") {
  std::mt19937_64 rng(61);
  std::vector<EmbeddingRecord> recs;
  for (int i = 0; i < 20; ++i) recs.push_back({"img/" + std::to_string(i) + ",x.png", "s" + std::to_string(i % 4), random_vector(rng, 7)});
  const EmbeddingSet e(recs);
  const EmbeddingSet back = parse_embeddings(format_embeddings(e));
  REQUIRE(back.size() == 20);
  for (const auto& r : e.records()) CHECK(back.at(r.sample_id).vector == r.vector);
  TempDir dir;
  write_file(dir / "e.csv", format_embeddings(e));
  CHECK(load_embeddings(dir / "e.csv").size() == 20);
  CHECK_THROWS_AS(load_embeddings(dir / "none.csv"), Error);
}

TEST_CASE("reference_model averages") {
  CHECK(reference_model(std::vector<std::vector<double>>{{1, 2, 3}}) == std::vector<double>{1, 2, 3});
  CHECK(reference_model(std::vector<std::vector<double>>{{1, 0}, {0, 1}}) == std::vector<double>{0.5, 0.5});
  const std::vector<double> v{0.3, -1.7, 2.25};
  CHECK(reference_model(std::vector<std::vector<double>>(5, v)) == v);
  CHECK_THROWS_AS(reference_model(std::vector<std::vector<double>>{}), Error);
  CHECK_THROWS_AS(reference_model(std::vector<std::vector<double>>{{1, 2}, {1}}), Error);
}

TEST_CASE("cosine score") {
  CHECK(cosine_score(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine_score(std::vector<double>{1, 1}, std::vector<double>{1, 0}) == doctest::Approx(0.7071067811865475).epsilon(1e-12));
  CHECK_THROWS_AS(cosine_score(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
  CHECK_THROWS_AS(cosine_score(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}), Error);

  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 500; ++i) {
    const auto u = random_vector(rng, 1 + rng() % 64);
    auto v = random_vector(rng, u.size());
    const double s = cosine_score(u, v);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    CHECK(std::abs(s - cosine_oracle(u, v)) < 1e-12);
    CHECK(cosine_score(v, u) == doctest::Approx(s).epsilon(1e-15));
    std::vector<double> cu = u;
    const double c = scale(rng);
    for (double& x : cu) x *= c;
    CHECK(std::abs(cosine_score(cu, v) - s) <= 1e-12);
    CHECK(std::abs(cosine_score(u, u) - 1.0) <= 1e-12);
  }
}

TEST_CASE("aggregation names") {
  CHECK(parse_aggregation("max") == SubjectAggregation::Max);
  CHECK(parse_aggregation("mean") == SubjectAggregation::Mean);
  CHECK_THROWS_AS(parse_aggregation("median"), Error);
  CHECK(std::string(to_string(SubjectAggregation::Mean)) == "mean");
}

TEST_CASE("score_trials on a small scenario") {
  const ScenarioManifest m = parse_scenario_manifest(
      "role,kind,id,subject,contributor_a,contributor_b,path\n"
      "reference,bonafide,r1,s1,,,s1_a\n"
      "reference,bonafide,r2,s2,,,s2_a\n"
      "reference,bonafide,r2,s2,,,s2_c\n"
      "probe,bonafide,p1,s1,,,s1_b\n"
      "probe,bonafide,p1x,s1,,,s1_d\n"
      "probe,bonafide,p2,s2,,,s2_b\n"
      "reference,morph,m,,s1,s2,m\n");
  const EmbeddingSet e({{"s1_a", "s1", {1, 0, 0}},
                        {"s2_a", "s2", {0, 1, 0}},
                        {"s2_c", "s2", {0, 1, 0}},
                        {"s1_b", "s1", {1, 0, 0}},
                        {"s1_d", "s1", {1, 1, 0}},
                        {"s2_b", "s2", {0, 0, 1}},
                        {"m", "m", {1, 1, 0}}});
  const auto trials = enumerate_trials(m);
  const ScoreSet s = score_trials(m, trials, e);
  CHECK(s.trials.size() == trials.size());
  REQUIRE(s.genuine.size() == 3);
  CHECK(s.genuine[0] == 1.0);  // r1 x p1
  CHECK(s.zero_effort.size() == 3);
  REQUIRE(s.morph_groups.size() == 1);
  const MorphGroup& g = s.morph_groups[0];
  CHECK(g.morph_id == "m");
  CHECK(g.subjects[0].subject == "s1");
  CHECK(g.subjects[1].subject == "s2");
  // s1 probes score 1/sqrt2 and 1.0 against the morph; max keeps 1.0.
  CHECK(g.subjects[0].score == doctest::Approx(1.0));
  CHECK(g.subjects[1].score == doctest::Approx(0.0));

  const ScoreSet mean = score_trials(m, trials, e, SubjectAggregation::Mean);
  CHECK(mean.morph_groups[0].subjects[0].score == doctest::Approx((1.0 + std::sqrt(0.5)) / 2));

  // Orthogonal impostor pair scores zero.
  bool found = false;
  for (const ScoredTrial& t : s.trials) {
    if (t.trial.model_id == "r1" && t.trial.probe_id == "p2") {
      CHECK(t.score == 0.0);
      found = true;
    }
  }
  CHECK(found);

  CHECK(format_score_dump(s) == format_score_dump(score_trials(m, trials, e)));
  CHECK(format_score_dump(s).rfind("kind,model_id,probe_id,score\n", 0) == 0);

  const EmbeddingSet missing({{"s1_a", "s1", {1, 0, 0}}});
  CHECK_THROWS_AS(score_trials(m, trials, missing), Error);
}

TEST_CASE("score_trials matches a nested-loop oracle") {
  std::mt19937_64 rng(63);
  std::string csv = "role,kind,id,subject,contributor_a,contributor_b,path\n";
  std::vector<EmbeddingRecord> recs;
  for (int s = 0; s < 4; ++s) {
    const std::string id = std::to_string(s);
    csv += "reference,bonafide,r" + id + ",s" + id + ",,,ra" + id + "\n";
    csv += "reference,bonafide,r" + id + ",s" + id + ",,,rb" + id + "\n";
    csv += "probe,bonafide,p" + id + ",s" + id + ",,,p" + id + "\n";
    recs.push_back({"ra" + id, "s" + id, random_vector(rng, 8)});
    recs.push_back({"rb" + id, "s" + id, random_vector(rng, 8)});
    recs.push_back({"p" + id, "s" + id, random_vector(rng, 8)});
  }
  const EmbeddingSet e(recs);
  const ScenarioManifest m = parse_scenario_manifest(csv);
  const auto trials = enumerate_trials(m);
  CHECK(trials.size() == 16);
  const ScoreSet s = score_trials(m, trials, e);
  for (const ScoredTrial& t : s.trials) {
    const std::string a = t.trial.model_id.substr(1), p = t.trial.probe_id.substr(1);
    std::vector<double> mean(8);
    for (int k = 0; k < 8; ++k) mean[k] = (e.at("ra" + a).vector[k] + e.at("rb" + a).vector[k]) / 2;
    CHECK(std::abs(t.score - cosine_oracle(mean, e.at("p" + p).vector)) < 1e-12);
  }
}
