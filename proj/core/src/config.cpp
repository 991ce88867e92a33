#include "chunkrl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "chunkrl/errors.hpp"

namespace chunkrl {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_bool(const std::string& text, bool& out) {
  if (text == "true" || text == "1") {
    out = true;
    return true;
  }
  if (text == "false" || text == "0") {
    out = false;
    return true;
  }
  return false;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<bool(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field number_field(T TrainConfig::*member) {
  return {[member](TrainConfig& c, const std::string& v) { return parse_number(v, c.*member); },
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

Field optimizer_field(double AdamWConfig::*member) {
  return {[member](TrainConfig& c, const std::string& v) { return parse_number(v, c.optimizer.*member); },
          [member](const TrainConfig& c) { return format_double(c.optimizer.*member); }};
}

Field flag_field(bool Ablations::*member) {
  return {[member](TrainConfig& c, const std::string& v) { return parse_bool(v, c.ablations.*member); },
          [member](const TrainConfig& c) { return format_bool(c.ablations.*member); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["seed"] = number_field(&TrainConfig::seed);
    f["task"] = {[](TrainConfig& c, const std::string& v) {
                   auto t = parse_task(v);
                   if (t) c.task = *t;
                   return t.has_value();
                 },
                 [](const TrainConfig& c) { return std::string(task_name(c.task)); }};
    f["mode"] = {[](TrainConfig& c, const std::string& v) {
                   for (TrainMode m : {TrainMode::kFull, TrainMode::kBcOnly, TrainMode::kPpo}) {
                     if (v == mode_name(m)) {
                       c.mode = m;
                       return true;
                     }
                   }
                   return false;
                 },
                 [](const TrainConfig& c) { return std::string(mode_name(c.mode)); }};
    f["lr"] = optimizer_field(&AdamWConfig::lr);
    f["adam_beta1"] = optimizer_field(&AdamWConfig::beta1);
    f["adam_beta2"] = optimizer_field(&AdamWConfig::beta2);
    f["adam_eps"] = optimizer_field(&AdamWConfig::eps);
    f["weight_decay"] = optimizer_field(&AdamWConfig::weight_decay);
    f["gamma"] = number_field(&TrainConfig::gamma);
    f["lambda"] = number_field(&TrainConfig::lambda);
    f["epsilon"] = number_field(&TrainConfig::epsilon);
    f["value_clip"] = number_field(&TrainConfig::value_clip);
    f["value_weight"] = number_field(&TrainConfig::value_weight);
    f["entropy_weight"] = number_field(&TrainConfig::entropy_weight);
    f["horizon"] = number_field(&TrainConfig::horizon);
    f["warmup_steps"] = number_field(&TrainConfig::warmup_steps);
    f["batch_size"] = number_field(&TrainConfig::batch_size);
    f["total_steps"] = number_field(&TrainConfig::total_steps);
    f["epochs_per_update"] = number_field(&TrainConfig::epochs_per_update);
    f["rollout_macro_steps"] = number_field(&TrainConfig::rollout_macro_steps);
    f["init_log_std"] = number_field(&TrainConfig::init_log_std);
    f["n_demos"] = number_field(&TrainConfig::n_demos);
    f["demo_noise"] = number_field(&TrainConfig::demo_noise);
    f["buffer_capacity"] = number_field(&TrainConfig::buffer_capacity);
    f["eval_episodes"] = number_field(&TrainConfig::eval_episodes);
    f["eval_seed"] = number_field(&TrainConfig::eval_seed);
    f["eval_interval"] = number_field(&TrainConfig::eval_interval);
    f["demo_path"] = {[](TrainConfig& c, const std::string& v) {
                        c.demo_path = v;
                        return true;
                      },
                      [](const TrainConfig& c) { return c.demo_path; }};
    f["hidden"] = {[](TrainConfig& c, const std::string& v) {
                     std::vector<int> sizes;
                     std::stringstream ss(v);
                     std::string item;
                     while (std::getline(ss, item, ',')) {
                       int n = 0;
                       if (!parse_number(trim(item), n) || n <= 0) return false;
                       sizes.push_back(n);
                     }
                     if (sizes.empty()) return false;
                     c.hidden = std::move(sizes);
                     return true;
                   },
                   [](const TrainConfig& c) {
                     std::string out;
                     for (std::size_t i = 0; i < c.hidden.size(); ++i) {
                       if (i) out += ',';
                       out += std::to_string(c.hidden[i]);
                     }
                     return out;
                   }};
    f["adaptive_limit"] = {[](TrainConfig& c, const std::string& v) { return parse_bool(v, c.adaptive_limit); },
                           [](const TrainConfig& c) { return format_bool(c.adaptive_limit); }};
    f["chunking_off"] = flag_field(&Ablations::chunking_off);
    f["buffer_frozen"] = flag_field(&Ablations::buffer_frozen);
    f["buffer_unfiltered"] = flag_field(&Ablations::buffer_unfiltered);
    f["fixed_beta_1to1"] = flag_field(&Ablations::fixed_beta_1to1);
    return f;
  }();
  return table;
}

void apply_assignments(TrainConfig& config, const std::vector<std::pair<std::string, std::string>>& kv,
                       const std::vector<std::string>& syntax_errors) {
  std::vector<std::string> problems = syntax_errors;
  for (const auto& [key, value] : kv) {
    const auto it = fields().find(key);
    if (it == fields().end()) {
      problems.push_back("unknown key '" + key + "'");
    } else if (!it->second.set(config, value)) {
      problems.push_back("bad value for '" + key + "': '" + value + "'");
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

}  // namespace

std::string_view mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kFull:
      return "full";
    case TrainMode::kBcOnly:
      return "bc_only";
    case TrainMode::kPpo:
      return "ppo";
  }
  return "unknown";
}

TrainConfig TrainConfig::paper_preset() {
  TrainConfig c;
  c.optimizer.lr = 1e-5;
  c.gamma = 0.99;
  c.lambda = 0.95;
  c.epsilon = 0.2;
  c.value_clip = 0.2;
  c.value_weight = 0.5;
  c.entropy_weight = 0.0;
  c.horizon = 4;
  c.warmup_steps = 40000;
  c.batch_size = 16;
  c.total_steps = 500000;
  c.n_demos = 10;
  c.eval_episodes = 128;
  return c;
}

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const char* what) {
    if (!ok) problems.emplace_back(what);
  };
  need(optimizer.lr > 0.0, "lr must be > 0");
  need(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  need(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  need(optimizer.eps > 0.0, "adam_eps must be > 0");
  need(optimizer.weight_decay >= 0.0, "weight_decay must be >= 0");
  need(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  need(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  need(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  need(value_clip > 0.0, "value_clip must be > 0");
  need(value_weight >= 0.0, "value_weight must be >= 0");
  need(entropy_weight >= 0.0, "entropy_weight must be >= 0");
  need(horizon >= 1, "horizon must be >= 1");
  need(warmup_steps > 0, "warmup_steps must be > 0");
  need(batch_size > 0, "batch_size must be > 0");
  need(total_steps > 0, "total_steps must be > 0");
  need(epochs_per_update > 0, "epochs_per_update must be > 0");
  need(rollout_macro_steps > 0, "rollout_macro_steps must be > 0");
  need(n_demos >= 0, "n_demos must be >= 0");
  need(mode == TrainMode::kPpo || n_demos > 0 || !demo_path.empty(),
       "full and bc_only modes need demonstrations (n_demos > 0 or demo_path)");
  need(demo_noise >= 0.0, "demo_noise must be >= 0");
  need(buffer_capacity > 0, "buffer_capacity must be > 0");
  need(eval_episodes > 0, "eval_episodes must be > 0");
  need(eval_interval > 0, "eval_interval must be > 0");
  need(init_log_std >= ChunkPolicy::kMinLogStd && init_log_std <= ChunkPolicy::kMaxLogStd,
       "init_log_std must lie in [-5, 2]");
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

TrainConfig parse_config(std::string_view text, const TrainConfig& base) {
  TrainConfig config = base;
  std::vector<std::pair<std::string, std::string>> kv;
  std::vector<std::string> syntax_errors;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      syntax_errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    kv.emplace_back(trim(std::string_view(stripped).substr(0, eq)),
                    trim(std::string_view(stripped).substr(eq + 1)));
  }
  apply_assignments(config, kv, syntax_errors);
  return config;
}

TrainConfig load_config(const std::string& path, const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

void apply_overrides(TrainConfig& config, const std::vector<std::string>& assignments) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::vector<std::string> syntax_errors;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      syntax_errors.push_back("override '" + a + "' is not key=value");
      continue;
    }
    kv.emplace_back(trim(std::string_view(a).substr(0, eq)), trim(std::string_view(a).substr(eq + 1)));
  }
  apply_assignments(config, kv, syntax_errors);
}

void apply_ablation(TrainConfig& config, std::string_view name) {
  if (name == "chunking_off") {
    config.ablations.chunking_off = true;
  } else if (name == "buffer_frozen") {
    config.ablations.buffer_frozen = true;
  } else if (name == "buffer_unfiltered") {
    config.ablations.buffer_unfiltered = true;
  } else if (name == "fixed_beta_1to1") {
    config.ablations.fixed_beta_1to1 = true;
  } else {
    throw ConfigError("unknown ablation '" + std::string(name) + "'");
  }
}

std::string serialize_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, field] : fields()) keys.push_back(key);
  return keys;
}

}  // namespace chunkrl
