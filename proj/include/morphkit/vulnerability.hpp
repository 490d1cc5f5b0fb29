#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morphkit/protocols.hpp"
#include "morphkit/scoring.hpp"

namespace morphkit {

// A trial is accepted when score >= threshold, in every metric below.

/// Fraction of zero-effort impostor scores at or above t.
double fmr(std::span<const double> zero_effort, double t);

/// Fraction of genuine scores strictly below t.
double fnmr(std::span<const double> genuine, double t);

/// Smallest threshold among the observed scores and the value just above
/// the maximum such that fmr(t) <= target. Requires 0 < target < 1.
double threshold_at_fmr(std::span<const double> zero_effort, double target = 0.001);

/// Fraction of morphs whose weaker contributing subject still reaches t.
double mmpmr(std::span<const MorphGroup> morph_groups, double t);

/// A rate as count/total plus its percentage. Rates read back from a report
/// CSV carry only the percentage.
struct Rate {
  std::size_t count = 0;
  std::size_t total = 0;
  double percent = 0.0;

  static Rate of(std::size_t count, std::size_t total);
  double fraction() const noexcept { return percent / 100.0; }
};

struct DirectionResult {
  double threshold = 0.0;
  Rate mmpmr;
  Rate fmr;
  /// Counts rejected genuine trials.
  Rate fnmr;
  std::size_t genuine_trials = 0;
  std::size_t zero_effort_trials = 0;
  std::size_t morphs = 0;
};

/// Threshold from this direction's zero-effort scores at `target_fmr`, then
/// MMPMR, FMR and FNMR at that threshold.
DirectionResult evaluate_direction(const ScoreSet& scores, double target_fmr);

struct ReportKey {
  std::string dataset;
  std::string frs;
  std::string tool;

  friend auto operator<=>(const ReportKey&, const ReportKey&) = default;
};

struct ReportCell {
  std::optional<DirectionResult> references;
  std::optional<DirectionResult> probes;

  std::optional<DirectionResult>& operator[](Direction d) {
    return d == Direction::MorphsAsReferences ? references : probes;
  }
  const std::optional<DirectionResult>& operator[](Direction d) const {
    return d == Direction::MorphsAsReferences ? references : probes;
  }
};

struct VulnerabilityReport {
  double target_fmr = 0.001;
  std::map<ReportKey, ReportCell> cells;

  /// Folds another report in; a direction present in both is an error.
  void merge(const VulnerabilityReport& other);
};

/// Evaluates each supplied direction independently.
VulnerabilityReport evaluate(const ReportKey& key, const std::map<Direction, ScoreSet>& scoresets,
                             double target_fmr);

/// Table layout: one row per (dataset, FRS), one column per tool, cells
/// "R | P" in percent with one decimal rounded half away from zero and
/// "N/A" where nothing was evaluated. Columns are padded to align.
std::string render_report(const VulnerabilityReport& report);

/// Percentage with one decimal. Rounding works on the shortest decimal
/// form of the value, so 83.25 becomes 83.3 and 72.04 becomes 72.0.
std::string format_percent(double percent);

/// CSV "dataset,frs,tool,mmpmr_ref,mmpmr_probe,threshold_ref,threshold_probe,
/// fmr_ref,fmr_probe,fnmr_ref,fnmr_probe". Rates are percentages; a missing
/// direction leaves its fields empty.
std::string format_report_csv(const VulnerabilityReport& report);

/// Reads format_report_csv output back (counts are not recoverable and stay 0).
VulnerabilityReport parse_report_csv(std::string_view csv);

}  // namespace morphkit
