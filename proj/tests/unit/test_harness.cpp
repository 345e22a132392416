#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "alpinn/harness/config.hpp"
#include "alpinn/harness/csv.hpp"
#include "alpinn/harness/runner.hpp"
#include "alpinn/harness/svg.hpp"

using namespace alpinn;
using namespace alpinn::harness;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("alpinn_harness_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny(const std::string& name, int epochs = 20) {
  ExperimentConfig c;
  c.model = "mlp";
  c.hidden = {8, 8};
  c.grid = {100, 40, 0};
  c.epochs = epochs;
  c.eta_theta = 1e-3;
  c.beta = 1.0;
  c.eval_every = 10;
  c.eval_n = 20;
  c.dir = scratch(name).string();
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.problem = "burgers";
  c.hidden = {20, 30, 40};
  c.beta = 0.1 + 0.2;
  c.strategy = Strategy::soft_attention;
  c.grid = {2500, 100, 50};
  c.load_model = "weights.bin";
  const std::string text = serialize(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(serialize(back) == text);
  CHECK(back.beta == c.beta);
  CHECK(back.hidden == c.hidden);
  CHECK(back.load_model == "weights.bin");
  for (const auto& key : config_keys()) CHECK(get_key(back, key) == get_key(c, key));
}

TEST_CASE("config errors carry the line and the key") {
  try {
    parse_config("[balancer]\nbeta = -1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  try {
    parse_config("# comment\n[training]\nepochs = 10\nlearning_rate = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[training]\nepochs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[training]\nepochs = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[training]\nepochs = 5\nepochs = 6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nonsense]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[balancer]\nstrategy = adam\n"), ConfigError);
  CHECK(parse_config("[training]\nepochs = 7 # short\n").epochs == 7);
}

TEST_CASE("tuned hyperparameter defaults") {
  ExperimentConfig c;
  apply_paper_defaults(c, "helmholtz", "M2");
  CHECK(c.beta == 500.0);
  CHECK(c.eta_lambda == 1.0);
  CHECK(c.eta_theta == 1e-4);
  CHECK(c.strategy == Strategy::augmented_lagrangian);
  CHECK(c.model == "M2");
  CHECK_THROWS_AS(apply_paper_defaults(c, "helmholtz", "M7"), ConfigError);
}

TEST_CASE("config hash ignores seed and output") {
  ExperimentConfig a = tiny("hash_a");
  ExperimentConfig b = a;
  b.seed = 99;
  b.dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.beta = 2.0;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("csv numbers and tables") {
  CHECK(csv_number(0.1) == "0.1");
  CHECK(csv_number(std::nan("")) == "");
  CsvTable t = CsvTable::parse("a,b\n1,\"x,y\"\n2.5,z\n");
  CHECK(t.rows() == 2);
  CHECK(t.numbers("a") == std::vector<double>{1.0, 2.5});
  CHECK(t.strings("b") == std::vector<std::string>{"x,y", "z"});
  CHECK_THROWS_WITH(t.numbers("c"), doctest::Contains("missing column 'c'"));
}

TEST_CASE("svg heatmap has one cell per point") {
  const fs::path dir = scratch("heatmap");
  fs::create_directories(dir);
  CsvWriter w({"x", "y", "abs_err"});
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) w.row({csv_number(i / 49.0), csv_number(j / 49.0), csv_number(0.01 * (i + j))});
  }
  w.save(dir / "heatmap.csv");
  const fs::path svg = plot(dir, PlotKind::heatmap);
  CHECK(count(slurp(svg), "<rect class=\"cell\"") == 2500);
  fs::remove_all(dir);
}

TEST_CASE("empty trajectories are not plotted") {
  const fs::path dir = scratch("empty");
  fs::create_directories(dir);
  write_text(dir / "trajectory_seed0.csv", "epoch,total_loss,residual_loss,constraint_loss_g1,lambda_l2_g1,rel_l2_error,wall_ms\n");
  CHECK_THROWS(plot(dir, PlotKind::trajectory));
  CHECK_FALSE(fs::exists(dir / "trajectory.svg"));
  write_text(dir / "trajectory_seed0.csv", "epoch,residual_loss\n1,2\n");
  CHECK_THROWS_WITH(plot(dir, PlotKind::trajectory), doctest::Contains("total_loss"));
  fs::remove_all(dir);
}

TEST_CASE("one epoch produces every artifact") {
  ExperimentConfig c = tiny("one_epoch", 1);
  c.n_trials = 2;
  const RunArtifacts a = run(c, 1);
  for (const fs::path& p : {a.config, a.trials, a.aggregate, a.heatmap_csv, a.heatmap_svg, a.model, a.summary}) {
    CHECK(fs::exists(p));
  }
  REQUIRE(a.trajectories.size() == 2);
  for (const auto& p : a.trajectories) CHECK(CsvTable::load(p).rows() == 1);
  CHECK(CsvTable::load(a.aggregate).header() ==
        std::vector<std::string>{"problem", "model", "strategy", "n_trials", "mean_best_err", "std_best_err",
                                 "mean_final_err", "diverged_count"});
  CHECK(a.exit_code == 0);
  CHECK(parse_config(slurp(a.config)).epochs == 1);
  fs::remove_all(c.dir);
}

TEST_CASE("runs are byte reproducible across job counts") {
  ExperimentConfig c = tiny("repeat_a", 30);
  c.n_trials = 2;
  c.strategy = Strategy::augmented_lagrangian;
  const RunArtifacts a = run(c, 1);
  ExperimentConfig d = c;
  d.dir = scratch("repeat_b").string();
  const RunArtifacts b = run(d, 2);
  CHECK(slurp(a.aggregate) == slurp(b.aggregate));
  CHECK(slurp(a.trials) == slurp(b.trials));
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) CHECK(slurp(a.trajectories[i]) == slurp(b.trajectories[i]));
  CHECK(slurp(a.model) == slurp(b.model));
  fs::remove_all(c.dir);
  fs::remove_all(d.dir);
}

TEST_CASE("lagrange without a penalty fits poorly") {
  ExperimentConfig c = tiny("lagrange", 300);
  c.strategy = Strategy::lagrange;
  c.beta = 0.0;
  c.hidden = {16, 16};
  const RunArtifacts a = run(c, 1);
  CHECK(a.row.mean_best_err > 0.5);
  CHECK(a.poor_fit);
  CHECK(slurp(a.summary).find("\"poor_fit\": true") != std::string::npos);
  fs::remove_all(c.dir);
}

TEST_CASE("a beta sweep plots four lambda series") {
  ExperimentConfig c = tiny("sweep");
  const SweepResult s = sweep(c, "beta", {"1", "10", "100", "1000"}, 1);
  CHECK(s.runs.size() == 4);
  CHECK(CsvTable::load(s.table).rows() == 4);
  const std::string svg = slurp(plot(c.dir, PlotKind::lambda_norm));
  CHECK(count(svg, "class=\"series\"") == 4);
  for (const char* v : {"beta=1\"", "beta=10\"", "beta=100\"", "beta=1000\""}) CHECK(svg.find(v) != std::string::npos);
  CHECK(fs::exists(plot(c.dir, PlotKind::beta_sweep)));
  CHECK_THROWS_AS(sweep(c, "learning_rate", {"1"}, 1), ConfigError);
  fs::remove_all(c.dir);
}

TEST_CASE("bench writes one row per strategy") {
  ExperimentConfig c = tiny("bench");
  const auto rows = bench(c, {Strategy::vanilla, Strategy::augmented_lagrangian}, 12);
  CHECK(rows.size() == 2);
  CHECK(CsvTable::load(fs::path(c.dir) / "bench.csv").rows() == 2);
  for (const auto& r : rows) CHECK(r.ms_mean > 0.0);
  fs::remove_all(c.dir);
}
