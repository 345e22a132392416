#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "alpinn/harness/config.hpp"
#include "alpinn/harness/runner.hpp"
#include "alpinn/metrics.hpp"
#include "alpinn/problems.hpp"

namespace py = pybind11;
namespace h = alpinn::harness;
using namespace alpinn;

namespace {

h::ExperimentConfig make_config(const py::dict& overrides, const std::string& tuned_problem,
                                const std::string& tuned_model) {
  h::ExperimentConfig cfg;
  if (!tuned_problem.empty()) h::apply_paper_defaults(cfg, tuned_problem, tuned_model);
  for (const auto& [k, v] : overrides) h::set_key(cfg, py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
  h::validate(cfg);
  return cfg;
}

py::dict config_dict(const h::ExperimentConfig& cfg) {
  py::dict d;
  for (const auto& key : h::config_keys()) d[py::str(key)] = h::get_key(cfg, key);
  return d;
}

py::dict record_dict(const TrainRecord& rec) {
  std::vector<int> epoch;
  std::vector<double> total, residual, error;
  std::vector<std::vector<double>> lambda;
  for (const auto& row : rec.rows) {
    epoch.push_back(row.epoch);
    total.push_back(row.total_loss);
    residual.push_back(row.residual_loss);
    error.push_back(row.rel_l2);
    lambda.push_back(row.lambda_norm);
  }
  py::dict d;
  d["epoch"] = epoch;
  d["total_loss"] = total;
  d["residual_loss"] = residual;
  d["rel_l2_error"] = error;
  d["lambda_norm"] = lambda;
  d["best_error"] = rec.best_error;
  d["best_epoch"] = rec.best_epoch;
  d["final_error"] = rec.final_error;
  d["diverged"] = rec.diverged;
  d["message"] = rec.message;
  d["best_params"] = rec.best_params;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Augmented Lagrangian training of physics-informed networks";

  py::register_exception<h::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("problems", [] { return std::vector<std::string>{"helmholtz", "burgers", "klein-gordon", "navier-stokes"}; });
  m.def("burgers_exact", py::vectorize(static_cast<double (*)(double, double)>(&burgers_exact)), py::arg("t"),
        py::arg("x"));
  m.def(
      "exact",
      [](const std::string& problem, const Eigen::MatrixXd& points) {
        const PdeProblem p = make_problem(problem);
        if (points.rows() != p.input_dim()) throw py::value_error("points must have one row per input axis");
        Eigen::MatrixXd out(p.output_dim(), points.cols());
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
          const auto u = p.exact(std::span<const double>(points.col(j).data(), static_cast<std::size_t>(points.rows())));
          for (int k = 0; k < p.output_dim(); ++k) out(k, j) = u[static_cast<std::size_t>(k)];
        }
        return out;
      },
      py::arg("problem"), py::arg("points"), "Exact solution at a dim x N array of points.");

  m.def(
      "config",
      [](const py::dict& overrides, const std::string& tuned_problem, const std::string& tuned_model) {
        return config_dict(make_config(overrides, tuned_problem, tuned_model));
      },
      py::arg("overrides") = py::dict(), py::arg("tuned_problem") = "", py::arg("tuned_model") = "",
      "Resolved configuration as a dict of section.key -> text.");
  m.def("parse_config", [](const std::string& text) { return config_dict(h::parse_config(text)); }, py::arg("text"));

  m.def(
      "train",
      [](const py::dict& overrides, const std::string& tuned_problem, const std::string& tuned_model) {
        const h::ExperimentConfig cfg = make_config(overrides, tuned_problem, tuned_model);
        TrainRecord rec;
        {
          py::gil_scoped_release release;
          rec = train(h::problem(cfg), h::architecture(cfg, h::problem(cfg)), h::balancer_config(cfg), cfg.grid,
                      h::train_options(cfg, cfg.seed));
        }
        return record_dict(rec);
      },
      py::arg("overrides") = py::dict(), py::arg("tuned_problem") = "", py::arg("tuned_model") = "",
      "Trains one network in memory and returns its trajectory.");

  m.def(
      "run",
      [](const py::dict& overrides, const std::string& tuned_problem, const std::string& tuned_model, int jobs) {
        const h::ExperimentConfig cfg = make_config(overrides, tuned_problem, tuned_model);
        h::RunArtifacts a;
        {
          py::gil_scoped_release release;
          a = h::run(cfg, jobs);
        }
        py::dict d;
        d["dir"] = a.dir;
        d["aggregate"] = a.aggregate;
        d["trajectories"] = a.trajectories;
        d["mean_best_err"] = a.row.mean_best_err;
        d["std_best_err"] = a.row.std_best_err;
        d["diverged_count"] = a.row.diverged_count;
        d["poor_fit"] = a.poor_fit;
        d["exit_code"] = a.exit_code;
        return d;
      },
      py::arg("overrides") = py::dict(), py::arg("tuned_problem") = "", py::arg("tuned_model") = "",
      py::arg("jobs") = 0, "Runs every trial of a config and writes its artifacts.");

  m.def(
      "plot",
      [](const std::string& dir, const std::string& kind) { return h::plot(dir, h::parse_plot_kind(kind)); },
      py::arg("dir"), py::arg("kind") = "trajectory");

  m.def(
      "aggregate",
      [](const std::vector<double>& best_errors) {
        std::vector<TrialSummary> trials(best_errors.size());
        for (std::size_t i = 0; i < trials.size(); ++i) {
          trials[i].seed = i;
          trials[i].best_error = trials[i].final_error = best_errors[i];
        }
        const AggregateRow row = aggregate(trials);
        return py::make_tuple(row.mean_best_err, row.std_best_err);
      },
      py::arg("best_errors"), "Mean and sample standard deviation of best errors.");
}
