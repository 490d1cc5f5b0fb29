#include "morphkit/vulnerability.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "csv.hpp"
#include "format.hpp"
#include "morphkit/error.hpp"

namespace morphkit {

namespace {

void require_scores(std::span<const double> scores, const char* what) {
  if (scores.empty()) throw Error(ErrorKind::Precondition, std::string(what) + " score list is empty");
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorKind::Precondition, std::string(what) + " score is NaN");
  }
}

std::size_t count_accepted(std::span<const double> scores, double t) {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [t](double s) { return s >= t; }));
}

std::size_t count_morphs_accepted(std::span<const MorphGroup> groups, double t) {
  return static_cast<std::size_t>(std::count_if(groups.begin(), groups.end(), [t](const MorphGroup& g) {
    return std::min(g.subjects[0].score, g.subjects[1].score) >= t;
  }));
}

constexpr std::string_view kReportHeader =
    "dataset,frs,tool,mmpmr_ref,mmpmr_probe,threshold_ref,threshold_probe,fmr_ref,fmr_probe,"
    "fnmr_ref,fnmr_probe";

std::string shortest_fixed(double v) {
  char buf[400];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, ptr);
}

double parse_number(const std::string& field, std::size_t row) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::Format, "report row " + std::to_string(row) + ": '" + field + "' is not a number");
  }
  return v;
}

}  // namespace

Rate Rate::of(std::size_t count, std::size_t total) {
  Rate r{count, total, 0.0};
  if (total > 0) r.percent = static_cast<double>(count) * 100.0 / static_cast<double>(total);
  return r;
}

double fmr(std::span<const double> zero_effort, double t) {
  require_scores(zero_effort, "zero-effort");
  return static_cast<double>(count_accepted(zero_effort, t)) / static_cast<double>(zero_effort.size());
}

double fnmr(std::span<const double> genuine, double t) {
  require_scores(genuine, "genuine");
  const std::size_t rejected = genuine.size() - count_accepted(genuine, t);
  return static_cast<double>(rejected) / static_cast<double>(genuine.size());
}

double threshold_at_fmr(std::span<const double> zero_effort, double target) {
  require_scores(zero_effort, "zero-effort");
  if (!(target > 0.0 && target < 1.0)) {
    throw Error(ErrorKind::Precondition, "target FMR must lie strictly between 0 and 1");
  }
  std::vector<double> sorted(zero_effort.begin(), zero_effort.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double n = static_cast<double>(sorted.size());

  // Above the maximum nothing is accepted, so this candidate is always feasible.
  double best = std::nextafter(sorted.front(), std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double value = sorted[i];
    while (i < sorted.size() && sorted[i] == value) ++i;
    // i scores are >= value.
    if (static_cast<double>(i) / n <= target) {
      best = value;
    } else {
      break;
    }
  }
  return best;
}

double mmpmr(std::span<const MorphGroup> morph_groups, double t) {
  if (morph_groups.empty()) throw Error(ErrorKind::Precondition, "no morph groups");
  for (const MorphGroup& g : morph_groups) {
    if (std::isnan(g.subjects[0].score) || std::isnan(g.subjects[1].score) ||
        g.subjects[0].subject.empty() || g.subjects[1].subject.empty() ||
        g.subjects[0].subject == g.subjects[1].subject) {
      throw Error(ErrorKind::Validation, "malformed morph group '" + g.morph_id + "'");
    }
  }
  return static_cast<double>(count_morphs_accepted(morph_groups, t)) /
         static_cast<double>(morph_groups.size());
}

DirectionResult evaluate_direction(const ScoreSet& scores, double target_fmr) {
  require_scores(scores.genuine, "genuine");
  const double t = threshold_at_fmr(scores.zero_effort, target_fmr);
  mmpmr(scores.morph_groups, t);  // validates the groups

  DirectionResult r;
  r.threshold = t;
  r.genuine_trials = scores.genuine.size();
  r.zero_effort_trials = scores.zero_effort.size();
  r.morphs = scores.morph_groups.size();
  r.mmpmr = Rate::of(count_morphs_accepted(scores.morph_groups, t), r.morphs);
  r.fmr = Rate::of(count_accepted(scores.zero_effort, t), r.zero_effort_trials);
  r.fnmr = Rate::of(r.genuine_trials - count_accepted(scores.genuine, t), r.genuine_trials);
  return r;
}

void VulnerabilityReport::merge(const VulnerabilityReport& other) {
  for (const auto& [key, cell] : other.cells) {
    ReportCell& mine = cells[key];
    for (Direction d : {Direction::MorphsAsReferences, Direction::MorphsAsProbes}) {
      if (!cell[d]) continue;
      if (mine[d]) {
        throw Error(ErrorKind::Validation, "report already has " + std::string(to_string(d)) +
                                               " results for " + key.dataset + "/" + key.frs + "/" +
                                               key.tool);
      }
      mine[d] = cell[d];
    }
  }
}

VulnerabilityReport evaluate(const ReportKey& key, const std::map<Direction, ScoreSet>& scoresets,
                             double target_fmr) {
  VulnerabilityReport report;
  report.target_fmr = target_fmr;
  ReportCell& cell = report.cells[key];
  for (const auto& [direction, scores] : scoresets) {
    try {
      cell[direction] = evaluate_direction(scores, target_fmr);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("morphs as ") + to_string(direction) + ": " + e.what());
    }
  }
  return report;
}

std::string format_percent(double percent) {
  std::string s = shortest_fixed(percent);
  const bool negative = !s.empty() && s.front() == '-';
  if (negative) s.erase(0, 1);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += ".0";
    return (negative ? "-" : "") + s;
  }
  std::string digits = s.substr(0, dot) + (dot + 1 < s.size() ? s.substr(dot + 1, 1) : "0");
  const bool round_up = dot + 2 < s.size() && s[dot + 2] >= '5';
  if (round_up) {
    int k = static_cast<int>(digits.size()) - 1;
    while (k >= 0 && digits[k] == '9') digits[k--] = '0';
    if (k < 0) {
      digits.insert(digits.begin(), '1');
    } else {
      ++digits[k];
    }
  }
  std::string out = digits.substr(0, digits.size() - 1) + "." + digits.back();
  if (negative && out != "0.0") out.insert(out.begin(), '-');
  return out;
}

std::string render_report(const VulnerabilityReport& report) {
  std::set<std::string> tools;
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& [key, cell] : report.cells) {
    tools.insert(key.tool);
    if (rows.empty() || rows.back() != std::pair{key.dataset, key.frs}) {
      rows.emplace_back(key.dataset, key.frs);
    }
  }

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"Dataset", "FRS"};
  header.insert(header.end(), tools.begin(), tools.end());
  table.push_back(header);
  for (const auto& [dataset, frs] : rows) {
    std::vector<std::string> line{dataset, frs};
    for (const std::string& tool : tools) {
      const auto it = report.cells.find({dataset, frs, tool});
      if (it == report.cells.end() || (!it->second.references && !it->second.probes)) {
        line.emplace_back("N/A");
        continue;
      }
      const auto side = [](const std::optional<DirectionResult>& r) {
        return r ? format_percent(r->mmpmr.percent) : std::string("N/A");
      };
      line.push_back(side(it->second.references) + " | " + side(it->second.probes));
    }
    table.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::string out = "MMPMR @ FMR = " + format_percent(report.target_fmr * 100.0) +
                    "% (morphs as references | morphs as probes) [%]\n";
  for (const auto& line : table) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) text += "  ";
      text += line[c];
      if (c + 1 < line.size()) text.append(widths[c] - line[c].size(), ' ');
    }
    out += text + "\n";
  }
  return out;
}

std::string format_report_csv(const VulnerabilityReport& report) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& [key, cell] : report.cells) {
    const auto& r = cell.references;
    const auto& p = cell.probes;
    auto num = [](const std::optional<DirectionResult>& d, double DirectionResult::*field) {
      return d ? numfmt::exact((*d).*field) : std::string();
    };
    auto pct = [](const std::optional<DirectionResult>& d, Rate DirectionResult::*field) {
      return d ? numfmt::exact(((*d).*field).percent) : std::string();
    };
    out += csv::join({key.dataset, key.frs, key.tool, pct(r, &DirectionResult::mmpmr),
                      pct(p, &DirectionResult::mmpmr), num(r, &DirectionResult::threshold),
                      num(p, &DirectionResult::threshold), pct(r, &DirectionResult::fmr),
                      pct(p, &DirectionResult::fmr), pct(r, &DirectionResult::fnmr),
                      pct(p, &DirectionResult::fnmr)});
    out += '\n';
  }
  return out;
}

VulnerabilityReport parse_report_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::Format, "report: missing header");
  csv::require_header(rows[0], kReportHeader, "report");
  VulnerabilityReport report;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != 11) {
      throw Error(ErrorKind::Format, "report row " + std::to_string(r) + ": expected 11 fields");
    }
    ReportCell cell;
    for (int side = 0; side < 2; ++side) {
      const std::string& m = f[3 + side];
      const bool present = !m.empty();
      const bool complete = !f[5 + side].empty() && !f[7 + side].empty() && !f[9 + side].empty();
      if (!present && (f[5 + side].size() || f[7 + side].size() || f[9 + side].size())) {
        throw Error(ErrorKind::Format, "report row " + std::to_string(r) + ": partial direction");
      }
      if (!present) continue;
      if (!complete) {
        throw Error(ErrorKind::Format, "report row " + std::to_string(r) + ": partial direction");
      }
      DirectionResult d;
      d.mmpmr.percent = parse_number(m, r);
      d.threshold = parse_number(f[5 + side], r);
      d.fmr.percent = parse_number(f[7 + side], r);
      d.fnmr.percent = parse_number(f[9 + side], r);
      (side == 0 ? cell.references : cell.probes) = d;
    }
    VulnerabilityReport single;
    single.cells[{f[0], f[1], f[2]}] = cell;
    report.merge(single);
  }
  return report;
}

}  // namespace morphkit
