#include "mesp/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "mesp/error.hpp"
#include "mesp/spectral.hpp"

namespace mesp {

void SolverConfig::validate() const {
  if (max_iters < 1) throw MespError(ErrorCode::BadArgument, "max_iters must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw MespError(ErrorCode::BadArgument, "theta in (0,1)");
  if (!(backtrack_rho > 0.0 && backtrack_rho < 1.0)) {
    throw MespError(ErrorCode::BadArgument, "backtrack_rho in (0,1)");
  }
  if (!(eta0 > 0.0)) throw MespError(ErrorCode::BadArgument, "eta0 must be positive");
  if (!(tol_conv >= 0.0)) throw MespError(ErrorCode::BadArgument, "tol_conv must be >= 0");
  if (polish_iters < 0) throw MespError(ErrorCode::BadArgument, "polish_iters must be >= 0");
}

VectorXd project_capped_simplex(const VectorXd& y, int s) {
  const auto d = static_cast<int>(y.size());
  if (s < 1 || s > d) throw MespError(ErrorCode::OutOfRange, "projection needs 1 <= s <= d");
  if (s == d) return VectorXd::Ones(d);

  const auto clipped = [&](double tau) {
    return (y.array() - tau).max(0.0).min(1.0).matrix().eval();
  };
  double lo = y.minCoeff() - 1.0;  // sum = d
  double hi = y.maxCoeff();        // sum = 0
  const double tol_sum = 1e-12 * d;
  VectorXd x = clipped(0.5 * (lo + hi));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    x = clipped(mid);
    const double total = x.sum();
    if (std::abs(total - s) <= tol_sum) break;
    if (total > s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // Solve exactly for tau on the active set identified by bisection.
  double tau = 0.5 * (lo + hi);
  {
    const VectorXd xt = clipped(tau);
    double free_sum = 0.0;
    int n_free = 0, n_one = 0;
    for (int i = 0; i < d; ++i) {
      if (xt(i) >= 1.0) {
        ++n_one;
      } else if (xt(i) > 0.0) {
        free_sum += y(i);
        ++n_free;
      }
    }
    if (n_free > 0) {
      const double exact = (free_sum + n_one - s) / n_free;
      const VectorXd xe = clipped(exact);
      if (std::abs(xe.sum() - s) <= std::abs(x.sum() - s)) x = xe;
    }
  }
  return x;
}

double convergence_metric(const std::vector<IterRecord>& history) {
  if (history.empty()) throw MespError(ErrorCode::EmptyHistory, "no iterations recorded");
  double best = std::numeric_limits<double>::infinity();
  for (const IterRecord& r : history) best = std::min(best, r.metric);
  return best;
}

namespace {

std::optional<ValueGrad> try_eval(const ConvexOracle& oracle, const VectorXd& x) {
  try {
    ValueGrad vg = oracle(x);
    if (!std::isfinite(vg.value) || !vg.grad.allFinite()) return std::nullopt;
    return vg;
  } catch (const MespError&) {
    return std::nullopt;
  }
}

std::optional<SaddleEval> try_eval(const SaddleOracle& oracle, const VectorXd& x,
                                   const VectorXd& y) {
  try {
    SaddleEval e = oracle(x, y);
    if (!std::isfinite(e.value) || !e.grad_x.allFinite() || !e.grad_y.allFinite()) {
      return std::nullopt;
    }
    return e;
  } catch (const MespError&) {
    return std::nullopt;
  }
}

// Averaged linear model sum_t w_t (f_t + <g_t, x - x_t>) / sum_t w_t, which
// lower-bounds a convex f everywhere; its minimum over the capped simplex is
// another certified bound.
struct AggregateModel {
  double weight = 0.0;
  double offset = 0.0;
  VectorXd slope;

  void add(double w, double f, const VectorXd& g, const VectorXd& x) {
    if (slope.size() == 0) slope = VectorXd::Zero(g.size());
    weight += w;
    offset += w * (f - g.dot(x));
    slope += w * g;
  }

  double bound(int s) const {
    const VectorXd g = slope / weight;
    return linearization_bound(offset / weight, g, VectorXd::Zero(g.size()), s);
  }
};

}  // namespace

SolveResult mirror_descent(const ConvexOracle& oracle, int d, int s, const SolverConfig& cfg,
                           double g_bound, const std::optional<VectorXd>& x0) {
  cfg.validate();
  if (cfg.step_rule == StepRule::NormBound && !(g_bound > 0.0)) {
    throw MespError(ErrorCode::BadArgument, "norm-bound step rule needs a positive bound");
  }
  VectorXd x = x0 ? project_capped_simplex(*x0, s) : VectorXd::Constant(d, double(s) / d);
  ValueGrad cur = oracle(x);

  SolveResult res;
  res.metric_kind = MetricKind::Gap;
  res.best_value = cur.value;
  res.x_final = x;
  res.lower_bound = linearization_bound(cur.value, cur.grad, x, s);
  AggregateModel model;
  model.add(1.0, cur.value, cur.grad, x);

  const double diameter = std::sqrt(2.0 * s);
  double eta = cfg.eta0;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    VectorXd xn;
    std::optional<ValueGrad> next;
    double step = eta;
    if (cfg.step_rule == StepRule::NormBound) {
      step = diameter / (g_bound * std::sqrt(double(t)));
      xn = project_capped_simplex(x - step * cur.grad, s);
      next = oracle(xn);
    } else {
      for (;;) {
        xn = project_capped_simplex(x - eta * cur.grad, s);
        next = try_eval(oracle, xn);
        const VectorXd dx = xn - x;
        if (next && next->value <= cur.value + cur.grad.dot(dx) + dx.squaredNorm() / (2.0 * eta) +
                                       1e-14 * std::abs(cur.value)) {
          break;
        }
        eta *= 0.5;
        if (eta < 1e-16) {
          res.line_search_stall = true;
          break;
        }
      }
      step = eta;
      if (res.line_search_stall) break;
    }

    x = xn;
    cur = std::move(*next);
    if (cur.value < res.best_value) {
      res.best_value = cur.value;
      res.x_final = x;
    }
    res.lower_bound = std::max(res.lower_bound, linearization_bound(cur.value, cur.grad, x, s));
    model.add(step, cur.value, cur.grad, x);
    res.lower_bound = std::max(res.lower_bound, model.bound(s));

    const double metric = std::max(0.0, res.best_value - res.lower_bound);
    res.trajectory.push_back({cur.value, metric, res.lower_bound});
    res.iterations = t;
    if (metric <= cfg.tol_conv) break;
    if (cfg.step_rule == StepRule::Adaptive) eta *= 2.0;
  }
  if (res.trajectory.empty()) {
    res.trajectory.push_back({cur.value, std::max(0.0, res.best_value - res.lower_bound),
                              res.lower_bound});
  }
  res.conv_metric_final = convergence_metric(res.trajectory);
  return res;
}

SolveResult extragradient_sp(const SaddleProblem& problem, const SolverConfig& cfg,
                             const VectorXd& x0, const VectorXd& y0) {
  cfg.validate();
  const int s = problem.s;
  const auto proj_y = [&](const VectorXd& y) -> VectorXd {
    return problem.y_box ? y.cwiseMax(0.0).cwiseMin(1.0).eval() : y;
  };

  VectorXd x = project_capped_simplex(x0, s);
  VectorXd y = proj_y(y0);
  SaddleEval cur = problem.oracle(x, y);

  SolveResult res;
  res.metric_kind = MetricKind::Residual;
  res.best_value = cur.value;
  res.x_final = x;
  res.scaling_final = y;
  res.lower_bound = linearization_bound(cur.value, cur.grad_x, x, s);
  bool warned = false;

  double eta = cfg.eta0;
  for (int t = 0; t < cfg.max_iters; ++t) {
    VectorXd xn, yn;
    std::optional<SaddleEval> full;
    for (;;) {
      const VectorXd xh = project_capped_simplex(x - eta * cur.grad_x, s);
      const VectorXd yh = proj_y(y + eta * cur.grad_y);
      const std::optional<SaddleEval> half = try_eval(problem.oracle, xh, yh);
      bool ok = false;
      if (half) {
        const double dz = std::sqrt((xh - x).squaredNorm() + (yh - y).squaredNorm());
        const double df = std::sqrt((half->grad_x - cur.grad_x).squaredNorm() +
                                    (half->grad_y - cur.grad_y).squaredNorm());
        if (eta * df <= cfg.theta * dz) {
          xn = project_capped_simplex(x - eta * half->grad_x, s);
          yn = proj_y(y + eta * half->grad_y);
          full = try_eval(problem.oracle, xn, yn);
          ok = full.has_value();
        }
      }
      if (ok) break;
      eta *= cfg.backtrack_rho;
      if (eta < 1e-16) {
        res.line_search_stall = true;
        break;
      }
    }
    if (res.line_search_stall) {
      res.warnings.push_back("LineSearchStall: step size fell below 1e-16");
      break;
    }

    const double residual = std::sqrt((xn - x).squaredNorm() + (yn - y).squaredNorm()) / eta;
    x = std::move(xn);
    y = std::move(yn);
    cur = std::move(*full);
    res.x_final = x;
    res.scaling_final = y;
    res.best_value = cur.value;
    res.lower_bound = std::max(res.lower_bound, linearization_bound(cur.value, cur.grad_x, x, s));
    res.trajectory.push_back({cur.value, residual, res.lower_bound});
    res.iterations = t + 1;

    if (!warned && y.size() > 0 && y.cwiseAbs().maxCoeff() > cfg.scaling_warn) {
      res.warnings.push_back("scaling exceeds " + std::to_string(cfg.scaling_warn) +
                             " in magnitude");
      warned = true;
    }
    if (residual <= cfg.tol_conv) break;
    eta *= 1.0 + 1.0 / std::log(t + 2.0);
  }
  if (res.trajectory.empty()) {
    res.trajectory.push_back({cur.value, std::numeric_limits<double>::infinity(),
                              res.lower_bound});
  }
  res.conv_metric_final = convergence_metric(res.trajectory);
  return res;
}

namespace {

double linx_gradient_bound(const Instance& inst) {
  const SortedSpectrum sp = sorted_eigenvalues(inst.C());
  const double lmax = sp.values(0);
  const double lmin = sp.values(sp.values.size() - 1);
  if (!(lmin > tol::kRank * lmax)) {
    throw MespError(ErrorCode::Singular, "linx gradient bound needs a nonsingular C");
  }
  return 0.5 * std::sqrt(double(inst.d())) * (lmax * lmax + 1.0) / (lmin * lmin);
}

double gradient_bound(const Instance& inst, Method method) {
  switch (method) {
    case Method::Gamma: return subgradient_norm_bound(inst.V(), inst.s(), PhiKind::NegLog);
    case Method::GammaC: return subgradient_norm_bound(inst.W(), inst.d() - inst.s(), PhiKind::NegLog);
    case Method::Linx: return linx_gradient_bound(inst);
    default: return 0.0;
  }
}

}  // namespace

BoundReport solve_bound(const Instance& inst, Method method, const SolverConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const int d = inst.d();
  const int s = inst.s();
  const int dim_y = scaling_dim(method, d);

  BoundReport rep;
  rep.method = method;
  rep.s = s;

  if (!is_saddle(method)) {
    const ConvexOracle oracle = [&](const VectorXd& x) {
      SaddleEval e = evaluate(inst, method, x, VectorXd(0));
      return ValueGrad{e.value, std::move(e.grad_x)};
    };
    const double g = cfg.step_rule == StepRule::NormBound ? gradient_bound(inst, method) : 0.0;
    const SolveResult r = mirror_descent(oracle, d, s, cfg, g);
    rep.lower_bound = r.lower_bound;
    rep.conv_metric = r.conv_metric_final;
    rep.iterations = r.iterations;
    rep.x = r.x_final;
    rep.line_search_stall = r.line_search_stall;
    rep.warnings = r.warnings;
  } else {
    SaddleProblem sp;
    sp.d = d;
    sp.s = s;
    sp.dim_y = dim_y;
    sp.y_box = scaling_is_box(method);
    sp.oracle = [&](const VectorXd& x, const VectorXd& y) { return evaluate(inst, method, x, y); };
    VectorXd y0 = VectorXd::Zero(dim_y);
    if (method == Method::GammaStar) y0(0) = 0.5;
    const SolveResult r = extragradient_sp(sp, cfg, VectorXd::Constant(d, double(s) / d), y0);
    rep.lower_bound = r.lower_bound;
    rep.conv_metric = r.conv_metric_final;
    rep.iterations = r.iterations;
    rep.x = r.x_final;
    rep.scaling = *r.scaling_final;
    rep.line_search_stall = r.line_search_stall;
    rep.warnings = r.warnings;

    if (cfg.polish_iters > 0) {
      // Freeze the scaling and certify min_x f(x, y) more tightly.
      const VectorXd y = rep.scaling;
      const ConvexOracle frozen = [&](const VectorXd& x) {
        SaddleEval e = evaluate(inst, method, x, y);
        return ValueGrad{e.value, std::move(e.grad_x)};
      };
      SolverConfig pc = cfg;
      pc.step_rule = StepRule::Adaptive;
      pc.max_iters = cfg.polish_iters;
      const SolveResult p = mirror_descent(frozen, d, s, pc, 0.0, rep.x);
      rep.lower_bound = std::max(rep.lower_bound, p.lower_bound);
      rep.iterations += p.iterations;
    }
  }

  rep.lower_bound += inst.bound_offset();
  if (inst.known_opt()) rep.gap = *inst.known_opt() + inst.bound_offset() - rep.lower_bound;
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace mesp
