#include "mesp/relaxations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mesp/error.hpp"
#include "mesp/spectral.hpp"

namespace mesp {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Gamma: return "gamma";
    case Method::GammaC: return "gamma-c";
    case Method::GammaStar: return "gamma-star";
    case Method::Linx: return "linx";
    case Method::LinxO: return "linx-o";
    case Method::LinxG: return "linx-g";
    case Method::LinxD: return "linx-d";
    case Method::GammaG: return "gamma-g";
    case Method::GammaCG: return "gamma-c-g";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

int scaling_dim(Method m, int d) {
  switch (m) {
    case Method::Gamma:
    case Method::GammaC:
    case Method::Linx: return 0;
    case Method::GammaStar:
    case Method::LinxO: return 1;
    case Method::LinxG:
    case Method::GammaG:
    case Method::GammaCG: return d;
    case Method::LinxD: return 2 * d;
  }
  return 0;
}

bool is_saddle(Method m) { return scaling_dim(m, 1) > 0; }

bool scaling_is_box(Method m) { return m == Method::GammaStar; }

namespace {

void require_len(const VectorXd& v, int d, const char* what) {
  if (v.size() != d) {
    throw MespError(ErrorCode::LengthMismatch, std::string(what) + " has length " +
                                                   std::to_string(v.size()) + ", expected " +
                                                   std::to_string(d));
  }
}

// Value G_size(F diag(a) F^T) and t_i = (F^T Y F)_ii for the canonical
// subgradient Y of G_size at that matrix.
struct SpectralPiece {
  double value;
  VectorXd t;
};

SpectralPiece spectral_piece(const MatrixXd& f, const VectorXd& a, int size) {
  const MatrixXd m = f * a.asDiagonal() * f.transpose();
  const SortedSpectrum sp = sorted_eigenvalues(0.5 * (m + m.transpose()));
  const VectorXd mu = g_subgradient(sp.values, size, PhiKind::NegLog);
  const double value = g_value(sp.values, size, PhiKind::NegLog);
  const MatrixXd b = f.transpose() * sp.vectors;
  const VectorXd t = b.array().square().matrix() * mu;
  return {value, t};
}

// Shared linear algebra for every linx variant: L = C diag(a) C + diag(b).
struct LinxKernel {
  double logdet;
  VectorXd diag_linv;
  VectorXd diag_clc;
};

LinxKernel linx_kernel(const MatrixXd& c, const VectorXd& a, const VectorXd& b) {
  MatrixXd l = c * a.asDiagonal() * c;
  l.diagonal() += b;
  l = 0.5 * (l + l.transpose()).eval();
  Eigen::LLT<MatrixXd> llt(l);
  if (llt.info() != Eigen::Success) {
    throw MespError(ErrorCode::SingularL, "linx matrix is not positive definite");
  }
  const MatrixXd lf = llt.matrixL();
  const VectorXd ld = lf.diagonal();
  if (!(ld.minCoeff() > 0.0) || !ld.allFinite()) {
    throw MespError(ErrorCode::SingularL, "linx Cholesky factor has a zero pivot");
  }
  const Eigen::Index d = c.rows();
  const MatrixXd linv = llt.solve(MatrixXd::Identity(d, d));
  const MatrixXd z = llt.solve(c);
  LinxKernel k;
  k.logdet = 2.0 * ld.array().log().sum();
  k.diag_linv = linv.diagonal();
  k.diag_clc = (c.array() * z.array()).colwise().sum().transpose();
  return k;
}

OracleOutput psi_d(const Instance& inst, const VectorXd& x, const VectorXd& rho,
                   const VectorXd& omega) {
  const VectorXd one = VectorXd::Ones(x.size());
  const VectorXd er = rho.array().exp();
  const VectorXd eo = omega.array().exp();
  const VectorXd xc = one - x;
  const LinxKernel k = linx_kernel(inst.C(), er.cwiseProduct(x), eo.cwiseProduct(xc));

  OracleOutput out;
  out.value = -0.5 * k.logdet + 0.5 * x.dot(rho) + 0.5 * xc.dot(omega);
  out.grad_x = -0.5 * er.cwiseProduct(k.diag_clc) + 0.5 * eo.cwiseProduct(k.diag_linv) +
               0.5 * rho - 0.5 * omega;
  out.grad_rho = (-0.5 * er.cwiseProduct(x).cwiseProduct(k.diag_clc) + 0.5 * x).eval();
  out.grad_omega = (-0.5 * eo.cwiseProduct(xc).cwiseProduct(k.diag_linv) + 0.5 * xc).eval();
  return out;
}

void require_complement(const Instance& inst) {
  if (inst.s() >= inst.d()) {
    throw MespError(ErrorCode::OutOfRange, "complementary size d - s must be positive");
  }
}

}  // namespace

double mesp_objective(const Instance& inst, const VectorXd& x) {
  require_len(x, inst.d(), "x");
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i) - 1.0) <= 1e-9) {
      support.push_back(i);
    } else if (std::abs(x(i)) > 1e-9) {
      throw MespError(ErrorCode::InfeasibleBinary, "x is not binary");
    }
  }
  if (static_cast<int>(support.size()) != inst.s()) {
    throw MespError(ErrorCode::InfeasibleBinary,
                    "x selects " + std::to_string(support.size()) + " entries, expected " +
                        std::to_string(inst.s()));
  }
  const auto n = static_cast<Eigen::Index>(support.size());
  MatrixXd sub(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = inst.C()(support[a], support[b]);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw MespError(ErrorCode::EigFailure, "mesp_objective");
  const VectorXd& ev = es.eigenvalues();
  const double scale = std::max(ev(n - 1), inst.C().diagonal().maxCoeff());
  if (!(ev(0) > tol::kRank * scale)) {
    throw MespError(ErrorCode::SingularSubmatrix, "C_{S,S} is singular");
  }
  return -ev.array().log().sum();
}

OracleOutput gamma_oracle(const Instance& inst, const VectorXd& x, const VectorXd& rho) {
  require_len(x, inst.d(), "x");
  require_len(rho, inst.d(), "rho");
  const VectorXd er = rho.array().exp();
  const SpectralPiece p = spectral_piece(inst.V(), er.cwiseProduct(x), inst.s());

  OracleOutput out;
  out.value = p.value + x.dot(rho);
  out.grad_x = er.cwiseProduct(p.t) + rho;
  out.grad_rho = (er.cwiseProduct(x).cwiseProduct(p.t) + x).eval();
  return out;
}

OracleOutput gamma_c_oracle(const Instance& inst, const VectorXd& x, const VectorXd& omega) {
  require_len(x, inst.d(), "x");
  require_len(omega, inst.d(), "omega");
  require_complement(inst);
  const VectorXd xc = VectorXd::Ones(x.size()) - x;
  const VectorXd eo = omega.array().exp();
  const SpectralPiece p = spectral_piece(inst.W(), eo.cwiseProduct(xc), inst.d() - inst.s());

  OracleOutput out;
  out.value = p.value - inst.logdet_c() + xc.dot(omega);
  out.grad_x = -(eo.cwiseProduct(p.t) + omega);
  out.grad_omega = (eo.cwiseProduct(xc).cwiseProduct(p.t) + xc).eval();
  return out;
}

OracleOutput gamma_star_oracle(const Instance& inst, const VectorXd& x, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw MespError(ErrorCode::OutOfRange, "alpha must lie in [0, 1]");
  }
  const VectorXd zero = VectorXd::Zero(inst.d());
  const OracleOutput g = gamma_oracle(inst, x, zero);
  const OracleOutput gc = gamma_c_oracle(inst, x, zero);
  OracleOutput out;
  out.value = alpha * g.value + (1.0 - alpha) * gc.value;
  out.grad_x = alpha * g.grad_x + (1.0 - alpha) * gc.grad_x;
  out.grad_alpha = g.value - gc.value;
  return out;
}

OracleOutput linx_o_oracle(const Instance& inst, const VectorXd& x, double rho0) {
  require_len(x, inst.d(), "x");
  const double e = std::exp(rho0);
  const VectorXd xc = VectorXd::Ones(x.size()) - x;
  const LinxKernel k = linx_kernel(inst.C(), e * x, xc);

  OracleOutput out;
  out.value = -0.5 * k.logdet + 0.5 * inst.s() * rho0;
  out.grad_x = -0.5 * e * k.diag_clc + 0.5 * k.diag_linv;
  VectorXd gr(1);
  gr(0) = -0.5 * e * x.dot(k.diag_clc) + 0.5 * inst.s();
  out.grad_rho = gr;
  return out;
}

OracleOutput linx_oracle(const Instance& inst, const VectorXd& x) {
  OracleOutput out = linx_o_oracle(inst, x, 0.0);
  out.grad_rho.reset();
  return out;
}

OracleOutput linx_g_oracle(const Instance& inst, const VectorXd& x, const VectorXd& rho) {
  require_len(x, inst.d(), "x");
  require_len(rho, inst.d(), "rho");
  // psi_g(x, rho) = psi_d(x, 0, -2 rho).
  OracleOutput d = psi_d(inst, x, VectorXd::Zero(inst.d()), -2.0 * rho);
  OracleOutput out;
  out.value = d.value;
  out.grad_x = std::move(d.grad_x);
  out.grad_rho = (-2.0 * *d.grad_omega).eval();
  return out;
}

OracleOutput linx_d_oracle(const Instance& inst, const ScalingPoint& p) {
  require_len(p.x, inst.d(), "x");
  require_len(p.rho, inst.d(), "rho");
  require_len(p.omega, inst.d(), "omega");
  return psi_d(inst, p.x, p.rho, p.omega);
}

Instance complementary_instance(const Instance& inst) {
  require_complement(inst);
  const MatrixXd& w = inst.W();
  MatrixXd cinv = w.transpose() * w;
  cinv = 0.5 * (cinv + cinv.transpose()).eval();
  std::optional<double> opt;
  if (inst.known_opt()) opt = *inst.known_opt() + inst.logdet_c();
  return Instance::from_factor(cinv, w, inst.d() - inst.s(), opt)
      .with_bound_offset(inst.bound_offset() - inst.logdet_c());
}

KappaResult connection_kappa(const Instance& inst, const VectorXd& x, const VectorXd& rho,
                             const VectorXd& omega) {
  require_len(x, inst.d(), "x");
  require_len(rho, inst.d(), "rho");
  require_len(omega, inst.d(), "omega");
  require_complement(inst);
  const VectorXd xc = VectorXd::Ones(x.size()) - x;
  const VectorXd a = rho.array().exp().matrix().cwiseProduct(x);
  const VectorXd b = omega.array().exp().matrix().cwiseProduct(xc);
  const MatrixXd m = inst.V() * a.asDiagonal() * inst.V().transpose();
  const MatrixXd p = inst.W() * b.asDiagonal() * inst.W().transpose();
  const double tau_m = critical_index(sorted_eigenvalues(m).values, inst.s()).tail_mean;
  const double tau_p =
      critical_index(sorted_eigenvalues(p).values, inst.d() - inst.s()).tail_mean;

  KappaResult r;
  r.kappa = std::log(tau_p / tau_m);
  const VectorXd shifted = rho.array() + r.kappa;
  r.lhs = psi_d(inst, x, shifted, omega).value;
  r.rhs = 0.5 * (gamma_oracle(inst, x, rho).value + gamma_c_oracle(inst, x, omega).value);
  return r;
}

double linearization_bound(double f, const VectorXd& g, const VectorXd& x_hat, int s) {
  std::vector<double> sorted(g.data(), g.data() + g.size());
  std::nth_element(sorted.begin(), sorted.begin() + s, sorted.end());
  std::sort(sorted.begin(), sorted.begin() + s);
  double lin_min = 0.0;
  for (int i = 0; i < s; ++i) lin_min += sorted[static_cast<std::size_t>(i)];
  return f - g.dot(x_hat) + lin_min;
}

double valid_lower_bound(const Instance& inst, Method method, const VectorXd& x_hat,
                         const VectorXd& y) {
  require_len(x_hat, inst.d(), "x_hat");
  const double sum_err = std::abs(x_hat.sum() - inst.s());
  if (x_hat.minCoeff() < -tol::kFeas || x_hat.maxCoeff() > 1.0 + tol::kFeas ||
      sum_err > tol::kFeas * std::max(1, inst.d())) {
    throw MespError(ErrorCode::InfeasibleXHat, "x_hat is outside the capped simplex");
  }
  const SaddleEval e = evaluate(inst, method, x_hat, y);
  return linearization_bound(e.value, e.grad_x, x_hat, inst.s());
}

double integrality_gap_constant(int d, int s) {
  if (s < 1 || s > d - 1) {
    throw MespError(ErrorCode::OutOfRange, "integrality gap needs 1 <= s <= d - 1");
  }
  const auto xlogx = [](double t) { return t * std::log(t); };
  return 0.5 * (xlogx(s) + xlogx(d - s) - xlogx(d)) + log_binomial(d, s);
}

SaddleEval evaluate(const Instance& inst, Method method, const VectorXd& x, const VectorXd& y) {
  const int d = inst.d();
  require_len(y, scaling_dim(method, d), "scaling");
  OracleOutput o;
  SaddleEval e;
  switch (method) {
    case Method::Gamma:
      o = gamma_oracle(inst, x, VectorXd::Zero(d));
      break;
    case Method::GammaC:
      o = gamma_c_oracle(inst, x, VectorXd::Zero(d));
      break;
    case Method::Linx:
      o = linx_oracle(inst, x);
      break;
    case Method::GammaStar:
      o = gamma_star_oracle(inst, x, y(0));
      e.grad_y = VectorXd::Constant(1, *o.grad_alpha);
      break;
    case Method::LinxO:
      o = linx_o_oracle(inst, x, y(0));
      e.grad_y = *o.grad_rho;
      break;
    case Method::LinxG:
      o = linx_g_oracle(inst, x, y);
      e.grad_y = *o.grad_rho;
      break;
    case Method::GammaG:
      o = gamma_oracle(inst, x, y);
      e.grad_y = *o.grad_rho;
      break;
    case Method::GammaCG:
      o = gamma_c_oracle(inst, x, y);
      e.grad_y = *o.grad_omega;
      break;
    case Method::LinxD: {
      o = linx_d_oracle(inst, {x, y.head(d), y.tail(d)});
      e.grad_y.resize(2 * d);
      e.grad_y << *o.grad_rho, *o.grad_omega;
      break;
    }
  }
  e.value = o.value;
  e.grad_x = std::move(o.grad_x);
  return e;
}

}  // namespace mesp
