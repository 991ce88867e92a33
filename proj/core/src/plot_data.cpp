#include "chunkrl/plot_data.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "chunkrl/errors.hpp"

namespace chunkrl {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<double> moving_average(std::span<const double> values, int window) {
  if (window < 1) throw ConfigError("smoothing window must be >= 1");
  std::vector<double> out(values.size());
  double running = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    running += values[i];
    if (i >= static_cast<std::size_t>(window)) running -= values[i - static_cast<std::size_t>(window)];
    const std::size_t count = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out[i] = running / static_cast<double>(count);
  }
  return out;
}

std::vector<EvalPoint> read_eval_points(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("metrics CSV is empty");
  const auto names = split_csv(header);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw IoError("metrics CSV lacks column " + name);
  };
  const std::size_t c_update = column("update_idx");
  const std::size_t c_steps = column("env_steps");
  const std::size_t c_acc = column("eval_acc");

  std::vector<EvalPoint> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != names.size()) throw IoError("ragged metrics CSV row: " + line);
    if (cells[c_acc].empty()) continue;
    EvalPoint p;
    try {
      p.update_idx = std::stoll(cells[c_update]);
      p.env_steps = std::stoll(cells[c_steps]);
      p.acc = std::stod(cells[c_acc]);
    } catch (const std::exception&) {
      throw IoError("unparsable metrics CSV row: " + line);
    }
    points.push_back(p);
  }
  return points;
}

void write_plot_data(std::ostream& out, std::span<const EvalPoint> points, int window) {
  std::vector<double> acc;
  acc.reserve(points.size());
  for (const auto& p : points) acc.push_back(p.acc);
  const std::vector<double> smooth = moving_average(acc, window);
  out << "update_idx,env_steps,eval_acc,eval_acc_smoothed\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << points[i].update_idx << ',' << points[i].env_steps << ',' << fmt(points[i].acc) << ','
        << fmt(smooth[i]) << '\n';
  }
}

}  // namespace chunkrl
