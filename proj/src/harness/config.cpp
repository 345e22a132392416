#include "alpinn/harness/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "alpinn/metrics.hpp"

namespace alpinn::harness {

ConfigError::ConfigError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view key, std::string_view v, int line) {
  double out = 0.0;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(line, std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

long long parse_int(std::string_view key, std::string_view v, int line) {
  long long out = 0;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(line, std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

int parse_int32(std::string_view key, std::string_view v, int line) {
  const long long x = parse_int(key, v, line);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(line, std::string(key) + ": value out of range");
  return static_cast<int>(x);
}

bool parse_bool(std::string_view key, std::string_view v, int line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(line, std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

std::vector<int> parse_widths(std::string_view key, std::string_view v, int line) {
  std::vector<int> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const std::string_view item = trim(v.substr(0, comma));
    if (item.empty()) throw ConfigError(line, std::string(key) + ": empty entry in width list");
    out.push_back(parse_int32(key, item, line));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string join_widths(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

struct Key {
  std::string section;
  std::string name;
  std::function<void(ExperimentConfig&, std::string_view, int)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define ALPINN_DOUBLE_KEY(sec, field)                                                                          \
  Key {                                                                                                        \
    sec, #field, [](ExperimentConfig& c, std::string_view v, int l) { c.field = parse_double(#field, v, l); }, \
        [](const ExperimentConfig& c) { return format_double(c.field); }                                      \
  }
#define ALPINN_INT_KEY(sec, field)                                                                            \
  Key {                                                                                                       \
    sec, #field, [](ExperimentConfig& c, std::string_view v, int l) { c.field = parse_int32(#field, v, l); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                                    \
  }
#define ALPINN_BOOL_KEY(sec, field)                                                                          \
  Key {                                                                                                      \
    sec, #field, [](ExperimentConfig& c, std::string_view v, int l) { c.field = parse_bool(#field, v, l); }, \
        [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }                   \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      Key{"experiment", "problem",
          [](ExperimentConfig& c, std::string_view v, int l) {
            if (v != "helmholtz" && v != "burgers" && v != "klein-gordon" && v != "navier-stokes") {
              throw ConfigError(l, "problem: unknown problem '" + std::string(v) +
                                       "' (expected helmholtz, burgers, klein-gordon or navier-stokes)");
            }
            c.problem = v;
          },
          [](const ExperimentConfig& c) { return c.problem; }},
      Key{"experiment", "model",
          [](ExperimentConfig& c, std::string_view v, int l) {
            if (v != "M1" && v != "M2" && v != "M3" && v != "M4" && v != "branched" && v != "mlp") {
              throw ConfigError(l, "model: unknown model '" + std::string(v) + "' (expected M1..M4, branched or mlp)");
            }
            c.model = v;
          },
          [](const ExperimentConfig& c) { return c.model; }},
      Key{"experiment", "hidden",
          [](ExperimentConfig& c, std::string_view v, int l) { c.hidden = parse_widths("hidden", v, l); },
          [](const ExperimentConfig& c) { return join_widths(c.hidden); }},
      ALPINN_BOOL_KEY("experiment", residual),
      Key{"experiment", "feature_map",
          [](ExperimentConfig& c, std::string_view v, int l) {
            if (v == "none") {
              c.feature_map = FeatureMap::none;
            } else if (v == "sinusoidal") {
              c.feature_map = FeatureMap::sinusoidal;
            } else {
              throw ConfigError(l, "feature_map: expected none or sinusoidal, got '" + std::string(v) + "'");
            }
          },
          [](const ExperimentConfig& c) {
            return std::string(c.feature_map == FeatureMap::none ? "none" : "sinusoidal");
          }},
      ALPINN_DOUBLE_KEY("experiment", feature_scale),
      Key{"experiment", "init",
          [](ExperimentConfig& c, std::string_view v, int l) {
            if (v == "kaiming") {
              c.init = InitScheme::kaiming_uniform;
            } else if (v == "xavier") {
              c.init = InitScheme::xavier_uniform;
            } else {
              throw ConfigError(l, "init: expected kaiming or xavier, got '" + std::string(v) + "'");
            }
          },
          [](const ExperimentConfig& c) {
            return std::string(c.init == InitScheme::kaiming_uniform ? "kaiming" : "xavier");
          }},
      ALPINN_DOUBLE_KEY("experiment", nu),
      Key{"balancer", "strategy",
          [](ExperimentConfig& c, std::string_view v, int l) {
            try {
              c.strategy = parse_strategy(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(l, std::string("strategy: ") + e.what());
            }
          },
          [](const ExperimentConfig& c) { return std::string(to_string(c.strategy)); }},
      ALPINN_DOUBLE_KEY("balancer", beta),
      ALPINN_DOUBLE_KEY("balancer", beta_slope),
      ALPINN_DOUBLE_KEY("balancer", eta_lambda),
      ALPINN_DOUBLE_KEY("balancer", lra_alpha),
      ALPINN_INT_KEY("balancer", lra_every),
      ALPINN_BOOL_KEY("balancer", measure_weights),
      ALPINN_INT_KEY("training", epochs),
      ALPINN_DOUBLE_KEY("training", eta_theta),
      ALPINN_INT_KEY("training", n_trials),
      Key{"training", "seed",
          [](ExperimentConfig& c, std::string_view v, int l) {
            const long long s = parse_int("seed", v, l);
            if (s < 0) throw ConfigError(l, "seed: must be non-negative");
            c.seed = static_cast<std::uint64_t>(s);
          },
          [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      ALPINN_INT_KEY("training", eval_every),
      ALPINN_INT_KEY("training", eval_n),
      ALPINN_BOOL_KEY("training", early_stop),
      ALPINN_INT_KEY("training", patience),
      ALPINN_BOOL_KEY("training", timing),
      Key{"training", "load_model",
          [](ExperimentConfig& c, std::string_view v, int) { c.load_model = v == "none" ? std::string() : std::string(v); },
          [](const ExperimentConfig& c) { return c.load_model.empty() ? std::string("none") : c.load_model; }},
      Key{"grid", "n_r", [](ExperimentConfig& c, std::string_view v, int l) { c.grid.n_r = parse_int32("n_r", v, l); },
          [](const ExperimentConfig& c) { return std::to_string(c.grid.n_r); }},
      Key{"grid", "n_b", [](ExperimentConfig& c, std::string_view v, int l) { c.grid.n_b = parse_int32("n_b", v, l); },
          [](const ExperimentConfig& c) { return std::to_string(c.grid.n_b); }},
      Key{"grid", "n_i", [](ExperimentConfig& c, std::string_view v, int l) { c.grid.n_i = parse_int32("n_i", v, l); },
          [](const ExperimentConfig& c) { return std::to_string(c.grid.n_i); }},
      Key{"output", "dir", [](ExperimentConfig& c, std::string_view v, int) { c.dir = v; },
          [](const ExperimentConfig& c) { return c.dir; }},
      ALPINN_BOOL_KEY("output", save_model),
  };
  return keys;
}

#undef ALPINN_DOUBLE_KEY
#undef ALPINN_INT_KEY
#undef ALPINN_BOOL_KEY

const Key& find_key(std::string_view key, int line, std::string_view section = {}) {
  std::string_view sec = section;
  std::string_view name = key;
  if (const auto dot = key.find('.'); dot != std::string_view::npos) {
    sec = key.substr(0, dot);
    name = key.substr(dot + 1);
  }
  for (const Key& k : key_table()) {
    if (k.name == name && (sec.empty() || k.section == sec)) return k;
  }
  throw ConfigError(line, "unknown key '" + std::string(key) + "'" +
                              (section.empty() ? std::string() : " in section [" + std::string(section) + "]"));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(0, what);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Key& k : key_table()) out.push_back(k.section + "." + k.name);
    return out;
  }();
  return names;
}

void set_key(ExperimentConfig& cfg, std::string_view key, std::string_view value, int line) {
  find_key(key, line).set(cfg, trim(value), line);
}

std::string get_key(const ExperimentConfig& cfg, std::string_view key) { return find_key(key, 0).get(cfg); }

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::vector<std::string> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header '" + std::string(line) + "'");
      section = trim(line.substr(1, line.size() - 2));
      const bool known = std::any_of(key_table().begin(), key_table().end(),
                                     [&](const Key& k) { return k.section == section; });
      if (!known) throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value', got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key before '='");
    if (value.empty()) throw ConfigError(line_no, std::string(key) + ": missing value");
    const Key& k = find_key(key, line_no, section);
    const std::string full = k.section + "." + k.name;
    if (std::find(seen.begin(), seen.end(), full) != seen.end()) {
      throw ConfigError(line_no, "duplicate key '" + std::string(key) + "'");
    }
    seen.push_back(full);
    k.set(cfg, value, line_no);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const Key& k : key_table()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.name + " = " + k.get(cfg) + "\n";
  }
  return out;
}

void validate(const ExperimentConfig& cfg) {
  require(cfg.beta >= 0.0, "beta: must be >= 0 (got " + format_double(cfg.beta) + ")");
  require(cfg.beta_slope >= 0.0, "beta_slope: must be >= 0");
  require(cfg.eta_lambda >= 0.0, "eta_lambda: must be >= 0");
  require(cfg.eta_theta >= 0.0, "eta_theta: must be >= 0");
  require(cfg.lra_alpha > 0.0 && cfg.lra_alpha <= 1.0, "lra_alpha: must lie in (0, 1]");
  require(cfg.lra_every >= 1, "lra_every: must be >= 1");
  require(cfg.feature_scale > 0.0, "feature_scale: must be > 0");
  require(cfg.nu > 0.0, "nu: must be > 0");
  require(cfg.epochs >= 1, "epochs: must be >= 1");
  require(cfg.n_trials >= 1, "n_trials: must be >= 1");
  require(cfg.eval_every >= 1, "eval_every: must be >= 1");
  require(cfg.eval_n == 0 || cfg.eval_n >= 2, "eval_n: must be 0 (default) or >= 2");
  require(cfg.patience >= 1, "patience: must be >= 1");
  require(cfg.grid.n_r >= 0 && cfg.grid.n_b >= 0 && cfg.grid.n_i >= 0, "grid: point counts must be >= 0");
  require(!cfg.dir.empty(), "dir: must not be empty");
  if (cfg.model == "mlp") {
    require(!cfg.hidden.empty(), "hidden: needs at least one layer for model = mlp");
    for (int w : cfg.hidden) require(w >= 1, "hidden: widths must be positive");
  }
  if (cfg.model == "branched") require(cfg.problem == "navier-stokes", "model: branched is only defined for navier-stokes");
}

void apply_paper_defaults(ExperimentConfig& cfg, std::string_view problem, std::string_view model) {
  struct Row {
    double beta, eta_lambda, eta_theta;
  };
  static const std::array<std::pair<std::string_view, std::array<Row, 4>>, 3> table = {{
      {"helmholtz", {{{1e3, 1.0, 1e-3}, {5e2, 1.0, 1e-4}, {1e3, 1.0, 1e-4}, {5e2, 1.0, 1e-3}}}},
      {"burgers", {{{1.0, 1e-4, 1e-4}, {1.0, 1e-3, 1e-4}, {1.0, 1e-3, 1e-4}, {1.0, 1e-3, 1e-3}}}},
      {"klein-gordon", {{{5e2, 1.0, 1e-3}, {5e2, 1.0, 1e-3}, {5e2, 1.0, 1e-3}, {5e2, 1.0, 1e-3}}}},
  }};
  set_key(cfg, "experiment.problem", problem);
  cfg.strategy = Strategy::augmented_lagrangian;
  cfg.grid = {};
  if (problem == "navier-stokes") {
    if (model != "branched") throw ConfigError(0, "tuned defaults for navier-stokes use model branched");
    cfg.model = "branched";
    cfg.init = InitScheme::xavier_uniform;
    cfg.beta = 1.0;
    cfg.eta_lambda = 1e-3;
    cfg.eta_theta = 1e-3;
    return;
  }
  set_key(cfg, "experiment.model", model);
  if (model.size() != 2 || model[0] != 'M' || model[1] < '1' || model[1] > '4') {
    throw ConfigError(0, "tuned defaults exist for models M1..M4, got '" + std::string(model) + "'");
  }
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == problem; });
  const Row& row = it->second[static_cast<std::size_t>(model[1] - '1')];
  cfg.beta = row.beta;
  cfg.eta_lambda = row.eta_lambda;
  cfg.eta_theta = row.eta_theta;
  cfg.init = InitScheme::kaiming_uniform;
}

std::string config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.seed = 0;
  c.n_trials = 1;
  c.dir = "-";
  c.save_model = false;
  return content_hash(serialize(c));
}

PdeProblem problem(const ExperimentConfig& cfg) {
  ProblemOptions opts;
  opts.nu = cfg.nu;
  return make_problem(cfg.problem, opts);
}

Architecture architecture(const ExperimentConfig& cfg, const PdeProblem& p) {
  Architecture a;
  if (cfg.model == "branched") {
    a = Architecture::branched_navier_stokes();
  } else if (cfg.model == "mlp") {
    a.input_dim = p.input_dim();
    a.hidden = cfg.hidden;
    a.residual = cfg.residual;
    a.heads = {Head{"u", {}, p.output_dim()}};
    a.feature_map = cfg.feature_map;
  } else {
    a = Architecture::model(cfg.model, p.input_dim(), p.output_dim());
    a.feature_map = cfg.feature_map;
  }
  a.feature_scale = cfg.feature_scale;
  if (a.input_dim != p.input_dim() || a.output_dim() != p.output_dim()) {
    throw ConfigError(0, "model: " + cfg.model + " does not fit problem " + cfg.problem);
  }
  a.validate();
  return a;
}

BalancerConfig balancer_config(const ExperimentConfig& cfg) {
  BalancerConfig b;
  b.strategy = cfg.strategy;
  b.beta = cfg.beta;
  b.beta_slope = cfg.beta_slope;
  b.eta_lambda = cfg.eta_lambda;
  b.lra_alpha = cfg.lra_alpha;
  b.lra_every = cfg.lra_every;
  b.measure_weights = cfg.measure_weights;
  return b;
}

TrainOptions train_options(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrainOptions o;
  o.epochs = cfg.epochs;
  o.eta_theta = cfg.eta_theta;
  o.seed = seed;
  o.init = cfg.init;
  o.eval_every = cfg.eval_every;
  o.eval_n = cfg.eval_n;
  o.early_stop = cfg.early_stop;
  o.patience = cfg.patience;
  o.timing = cfg.timing;
  if (!cfg.load_model.empty()) o.initial_params = load_params(cfg.load_model);
  return o;
}

}  // namespace alpinn::harness
