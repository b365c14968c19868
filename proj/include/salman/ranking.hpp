#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salman/common.hpp"

namespace salman {

enum class Schedule { linear, piecewise };

Schedule parse_schedule(std::string_view name);
std::string_view schedule_name(Schedule s);

struct PiecewiseSchedule {
  double top_fraction = 0.25;
  double top_weight = 2.0;
  double bottom_fraction = 0.05;
  int steps = 4;
  double sharpness = 12.0;  // per step; the logistic slope is sharpness * steps
};

/// Staircase of `steps` logistic drops over t in [0, 1], normalized so that
/// f(0) = 1 and f(1) = 0.
double logistic_staircase(double t, int steps, double sharpness);

struct RankingRow {
  std::string sample_id;
  double salman_score = 0.0;
  Index rank = 0;  // 1 = most fragile
  double percentile = 0.0;
  double weight = 0.0;
};

struct RankingTable {
  std::vector<RankingRow> rows;  // rank order

  std::string to_csv() const;
  std::string to_json() const;
  static RankingTable from_csv(std::string_view text);
};

/// Sorts by descending score, ties by sample id. Linear weights run from 1 at
/// rank 1 to 0 at rank N. Piecewise weights give the top band `top_weight`, the
/// bottom band 0, and the rows between a logistic staircase from 1 down to 0.
RankingTable rank_samples(std::span<const double> scores, std::span<const std::string> sample_ids, Schedule schedule,
                          const PiecewiseSchedule& piecewise = {});

/// floor(n * percent / 100), at least 1 and at most n.
Index selection_count(Index n, double percent);

/// Ids of the most fragile rows, in rank order.
std::vector<std::string> non_robust_top(const RankingTable& table, double percent);
/// Ids of the most robust rows, starting from rank N.
std::vector<std::string> robust_bottom(const RankingTable& table, double percent);

}  // namespace salman
