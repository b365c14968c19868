#include "salman/ranking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace salman {
namespace {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double staircase_raw(double t, int steps, double slope) {
  double sum = 0.0;
  for (int j = 0; j < steps; ++j) sum += logistic(slope * (t - (j + 0.5) / steps));
  return sum;
}

}  // namespace

Schedule parse_schedule(std::string_view name) {
  if (name == "linear") return Schedule::linear;
  if (name == "piecewise") return Schedule::piecewise;
  throw Error("unknown schedule '" + std::string(name) + "' (expected linear or piecewise)");
}

std::string_view schedule_name(Schedule s) { return s == Schedule::linear ? "linear" : "piecewise"; }

double logistic_staircase(double t, int steps, double sharpness) {
  if (steps < 1) throw Error("logistic_staircase: steps must be >= 1");
  const double slope = sharpness * steps;
  const double lo = staircase_raw(0.0, steps, slope), hi = staircase_raw(1.0, steps, slope);
  const double x = std::clamp(t, 0.0, 1.0);
  return 1.0 - (staircase_raw(x, steps, slope) - lo) / (hi - lo);
}

RankingTable rank_samples(std::span<const double> scores, std::span<const std::string> sample_ids, Schedule schedule,
                          const PiecewiseSchedule& piecewise) {
  if (scores.empty()) throw Error("rank_samples: no scores");
  if (scores.size() != sample_ids.size()) throw Error("rank_samples: one id per score required");
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (std::isnan(scores[i])) throw Error("rank_samples: NaN score for " + sample_ids[i]);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return sample_ids[a] < sample_ids[b];
  });

  const auto n = static_cast<Index>(scores.size());
  RankingTable table;
  table.rows.resize(order.size());
  for (Index i = 0; i < n; ++i) {
    auto& row = table.rows[static_cast<std::size_t>(i)];
    row.sample_id = sample_ids[order[static_cast<std::size_t>(i)]];
    row.salman_score = scores[order[static_cast<std::size_t>(i)]];
    row.rank = i + 1;
    row.percentile = static_cast<double>(row.rank) / static_cast<double>(n);
  }

  if (schedule == Schedule::linear) {
    for (auto& row : table.rows)
      row.weight = n == 1 ? 1.0 : 1.0 - static_cast<double>(row.rank - 1) / static_cast<double>(n - 1);
    return table;
  }

  std::vector<std::size_t> middle;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto& row = table.rows[i];
    if (row.percentile <= piecewise.top_fraction)
      row.weight = piecewise.top_weight;
    else if (row.percentile > 1.0 - piecewise.bottom_fraction)
      row.weight = 0.0;
    else
      middle.push_back(i);
  }
  for (std::size_t j = 0; j < middle.size(); ++j) {
    const double t = middle.size() == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(middle.size() - 1);
    table.rows[middle[j]].weight = logistic_staircase(t, piecewise.steps, piecewise.sharpness);
  }
  return table;
}

Index selection_count(Index n, double percent) {
  if (!(percent > 0.0 && percent <= 100.0)) throw Error("top percent must be in (0, 100]");
  // Small epsilon so that e.g. 100 * 7% is not floored to 6 by rounding.
  const auto count = static_cast<Index>(std::floor(static_cast<double>(n) * percent / 100.0 + 1e-9));
  return std::clamp<Index>(count, 1, n);
}

std::vector<std::string> non_robust_top(const RankingTable& table, double percent) {
  const Index count = selection_count(static_cast<Index>(table.rows.size()), percent);
  std::vector<std::string> ids;
  for (Index i = 0; i < count; ++i) ids.push_back(table.rows[static_cast<std::size_t>(i)].sample_id);
  return ids;
}

std::vector<std::string> robust_bottom(const RankingTable& table, double percent) {
  const Index count = selection_count(static_cast<Index>(table.rows.size()), percent);
  std::vector<std::string> ids;
  for (Index i = 0; i < count; ++i) ids.push_back(table.rows[table.rows.size() - 1 - static_cast<std::size_t>(i)].sample_id);
  return ids;
}

std::string RankingTable::to_csv() const {
  std::string out = "sample_id,salman_score,rank,percentile,weight\n";
  for (const auto& row : rows) {
    if (row.sample_id.find_first_of(",\"\n\r") != std::string::npos)
      throw Error("sample id '" + row.sample_id + "' cannot be written to CSV");
    out += row.sample_id + ',' + format_double(row.salman_score) + ',' + std::to_string(row.rank) + ',' +
           format_double(row.percentile) + ',' + format_double(row.weight) + '\n';
  }
  return out;
}

std::string RankingTable::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& row : rows)
    doc.push_back({{"sample_id", row.sample_id},
                   {"salman_score", row.salman_score},
                   {"rank", row.rank},
                   {"percentile", row.percentile},
                   {"weight", row.weight}});
  return doc.dump(2) + "\n";
}

RankingTable RankingTable::from_csv(std::string_view text) {
  RankingTable table;
  std::size_t pos = 0;
  Index line_no = 0;
  auto parse_double = [&](std::string_view field) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
      throw FormatError("bad number '" + std::string(field) + "'", line_no);
    return v;
  };
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != "sample_id,salman_score,rank,percentile,weight") throw FormatError("unexpected CSV header", 1);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t c = line.find(','); c != std::string_view::npos; c = line.find(',', start)) {
      fields.push_back(line.substr(start, c - start));
      start = c + 1;
    }
    fields.push_back(line.substr(start));
    if (fields.size() != 5) throw FormatError("expected 5 fields, got " + std::to_string(fields.size()), line_no);
    RankingRow row;
    row.sample_id = std::string(fields[0]);
    row.salman_score = parse_double(fields[1]);
    row.rank = static_cast<Index>(parse_double(fields[2]));
    row.percentile = parse_double(fields[3]);
    row.weight = parse_double(fields[4]);
    table.rows.push_back(std::move(row));
  }
  if (line_no == 0) throw FormatError("empty ranking CSV");
  return table;
}

}  // namespace salman
