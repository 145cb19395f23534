#include "lle/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "lle/error.hpp"

namespace lle {

namespace {

constexpr double kZ95 = 1.96;

double interpolate(const std::vector<MetricRow>& run, double step,
                   double MetricRow::* field, size_t& cursor) {
  while (cursor + 1 < run.size() && static_cast<double>(run[cursor + 1].step) <= step)
    ++cursor;
  const MetricRow& a = run[cursor];
  if (cursor + 1 == run.size() || static_cast<double>(a.step) >= step) return a.*field;
  const MetricRow& b = run[cursor + 1];
  const double x0 = static_cast<double>(a.step), x1 = static_cast<double>(b.step);
  const double w = (step - x0) / (x1 - x0);
  return a.*field + w * (b.*field - a.*field);
}

struct Stats {
  double mean, ci_low, ci_high, min, max;
};

Stats summarize(const std::vector<double>& vals) {
  const size_t k = vals.size();
  double mean = 0.0, mn = vals[0], mx = vals[0];
  for (double v : vals) {
    mean += v;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  mean /= static_cast<double>(k);
  double half = 0.0;
  if (k >= 2) {
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));
    half = kZ95 * sd / std::sqrt(static_cast<double>(k));
  }
  return {mean, std::max(mean - half, mn), std::min(mean + half, mx), mn, mx};
}

}  // namespace

std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<MetricRow>>& runs,
                                         int grid_points) {
  if (runs.empty()) throw InsufficientData("no runs to aggregate");
  for (const auto& run : runs)
    if (run.empty()) throw InsufficientData("a run has no metric rows");
  if (grid_points < 1) throw ValidationError("grid_points must be positive");

  double lo = 0.0, hi = 0.0;
  size_t longest = 0;
  for (size_t r = 0; r < runs.size(); ++r) {
    const double first = static_cast<double>(runs[r].front().step);
    const double last = static_cast<double>(runs[r].back().step);
    lo = (r == 0) ? first : std::max(lo, first);
    hi = (r == 0) ? last : std::min(hi, last);
    longest = std::max(longest, runs[r].size());
  }
  if (hi < lo) throw InsufficientData("runs have no overlapping step range");

  const int points =
      (hi == lo) ? 1 : std::max(2, std::min<int>(grid_points, static_cast<int>(longest)));

  std::vector<size_t> cursor(runs.size(), 0);
  std::vector<AggregateRow> out;
  out.reserve(static_cast<size_t>(points));
  std::vector<double> scores(runs.size()), exits(runs.size());
  for (int j = 0; j < points; ++j) {
    const double step =
        (points == 1) ? lo : lo + (hi - lo) * static_cast<double>(j) / (points - 1);
    for (size_t r = 0; r < runs.size(); ++r) {
      scores[r] = interpolate(runs[r], step, &MetricRow::score, cursor[r]);
      size_t c = cursor[r];
      exits[r] = interpolate(runs[r], step, &MetricRow::exit_rate, c);
    }
    const Stats s = summarize(scores);
    const Stats x = summarize(exits);
    out.push_back({step, s.mean, s.ci_low, s.ci_high, s.min, s.max, x.mean, x.ci_low,
                   x.ci_high, x.min, x.max});
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "step,score_mean,score_ci_low,score_ci_high,score_min,score_max,"
         "exit_rate_mean,exit_rate_ci_low,exit_rate_ci_high,exit_rate_min,exit_rate_max\n";
  for (const AggregateRow& r : rows) {
    char buf[384];
    std::snprintf(buf, sizeof(buf),
                  "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.step, r.score_mean, r.score_ci_low, r.score_ci_high, r.score_min,
                  r.score_max, r.exit_mean, r.exit_ci_low, r.exit_ci_high, r.exit_min,
                  r.exit_max);
    out << buf;
  }
}

}  // namespace lle
