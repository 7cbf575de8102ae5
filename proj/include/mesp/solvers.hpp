#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mesp/instance.hpp"
#include "mesp/relaxations.hpp"

namespace mesp {

using Eigen::VectorXd;

enum class StepRule {
  // eta_t = D / (G sqrt(t)) with D = sqrt(2s) and G the subgradient norm bound.
  NormBound,
  // Projected steps with backtracking on the quadratic upper model.
  Adaptive,
};

struct SolverConfig {
  int max_iters = 1000;
  double theta = 0.9;
  double eta0 = 0.1;
  double backtrack_rho = 0.9;
  double tol_conv = 1e-6;
  std::uint64_t seed = 0;
  StepRule step_rule = StepRule::Adaptive;
  // Iteration cap for the frozen-scaling refinement after a saddle solve;
  // 0 disables it.
  int polish_iters = 1000;
  double scaling_warn = 50.0;

  void validate() const;
};

struct IterRecord {
  double value = 0.0;
  double metric = 0.0;
  double lower_bound = 0.0;
};

enum class MetricKind { Gap, Residual };

struct SolveResult {
  VectorXd x_final;
  std::optional<VectorXd> scaling_final;
  std::vector<IterRecord> trajectory;
  MetricKind metric_kind = MetricKind::Gap;
  double conv_metric_final = 0.0;
  int iterations = 0;
  double best_value = 0.0;
  // Largest certified bound seen, valid for min over the capped simplex of the
  // objective (for saddle runs: at the scaling where it was attained).
  double lower_bound = 0.0;
  bool line_search_stall = false;
  std::vector<std::string> warnings;
};

struct ValueGrad {
  double value = 0.0;
  VectorXd grad;
};

using ConvexOracle = std::function<ValueGrad(const VectorXd&)>;
using SaddleOracle = std::function<SaddleEval(const VectorXd& x, const VectorXd& y)>;

/// Euclidean projection onto {x in [0,1]^d : sum x = s}.
VectorXd project_capped_simplex(const VectorXd& y, int s);

/// Projected subgradient method on the capped simplex. `g_bound` is only read
/// by StepRule::NormBound.
SolveResult mirror_descent(const ConvexOracle& oracle, int d, int s, const SolverConfig& cfg,
                           double g_bound = 0.0,
                           const std::optional<VectorXd>& x0 = std::nullopt);

struct SaddleProblem {
  int d = 0;
  int s = 0;
  int dim_y = 0;
  bool y_box = false;  // clip y to [0, 1]
  SaddleOracle oracle;
};

/// Extragradient with backtracking for min_x max_y, x in the capped simplex.
SolveResult extragradient_sp(const SaddleProblem& problem, const SolverConfig& cfg,
                             const VectorXd& x0, const VectorXd& y0);

/// Best-so-far metric of a recorded run. Throws EmptyHistory.
double convergence_metric(const std::vector<IterRecord>& history);

struct BoundReport {
  Method method = Method::Gamma;
  int s = 0;
  double lower_bound = 0.0;
  double conv_metric = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::optional<double> gap;
  VectorXd x;
  VectorXd scaling;
  bool line_search_stall = false;
  std::vector<std::string> warnings;
};

/// Solves one relaxation of `inst` and returns its certified bound, shifted by
/// inst.bound_offset().
BoundReport solve_bound(const Instance& inst, Method method, const SolverConfig& cfg);

}  // namespace mesp
