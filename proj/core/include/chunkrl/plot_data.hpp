#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace chunkrl {

inline constexpr int kDefaultSmoothingWindow = 20;

// Trailing moving average: out[i] = mean(values[max(0, i-window+1) .. i]).
std::vector<double> moving_average(std::span<const double> values, int window);

struct EvalPoint {
  std::int64_t update_idx = 0;
  std::int64_t env_steps = 0;
  double acc = 0.0;
};

// Rows of a metrics CSV that carry an evaluation.
std::vector<EvalPoint> read_eval_points(std::istream& metrics_csv);

// CSV: update_idx,env_steps,eval_acc,eval_acc_smoothed
void write_plot_data(std::ostream& out, std::span<const EvalPoint> points, int window);

}  // namespace chunkrl
