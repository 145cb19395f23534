#pragma once

#include <iosfwd>
#include <vector>

#include "lle/trainer.hpp"

namespace lle {

struct AggregateRow {
  double step = 0.0;
  double score_mean = 0.0, score_ci_low = 0.0, score_ci_high = 0.0;
  double score_min = 0.0, score_max = 0.0;
  double exit_mean = 0.0, exit_ci_low = 0.0, exit_ci_high = 0.0;
  double exit_min = 0.0, exit_max = 0.0;
};

// Linearly interpolates each run's per-episode series onto a common step
// grid (the overlap of all runs, at most grid_points samples), then per grid
// step reports mean, a 95% normal-approximation confidence interval clamped
// into [min, max] across runs, and the min/max themselves. A single run
// yields zero-width intervals.
std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<MetricRow>>& runs,
                                         int grid_points = 200);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

}  // namespace lle
