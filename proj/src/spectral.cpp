#include "mesp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mesp/error.hpp"

namespace mesp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NonPSD: return "NonPSD";
    case ErrorCode::EigFailure: return "EigFailure";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::SingularC: return "SingularC";
    case ErrorCode::SingularL: return "SingularL";
    case ErrorCode::SingularSubmatrix: return "SingularSubmatrix";
    case ErrorCode::InfeasibleBinary: return "InfeasibleBinary";
    case ErrorCode::InfeasibleXHat: return "InfeasibleXHat";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadArgument: return "BadArgument";
  }
  return "Unknown";
}

double phi(PhiKind kind, double t) {
  return kind == PhiKind::NegLog ? -std::log(t) : 1.0 / t;
}

double phi_prime(PhiKind kind, double t) {
  return kind == PhiKind::NegLog ? -1.0 / t : -1.0 / (t * t);
}

SortedSpectrum sorted_eigenvalues(const MatrixXd& x) {
  if (x.rows() != x.cols()) {
    throw MespError(ErrorCode::DimensionMismatch, "matrix is not square");
  }
  const Eigen::Index d = x.rows();
  if (d == 0) return {VectorXd(0), MatrixXd(0, 0)};

  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  const double asym = (x - x.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= tol::kSymmetry * scale)) {
    throw MespError(ErrorCode::NonSymmetric,
                    "asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }

  const MatrixXd sym = 0.5 * (x + x.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw MespError(ErrorCode::EigFailure, "symmetric eigensolver did not converge");
  }

  // Eigen returns ascending order; reorder to nonincreasing with a stable sort.
  const VectorXd& asc = solver.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::reverse(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return asc(a) > asc(b); });

  SortedSpectrum out{VectorXd(d), MatrixXd(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    out.values(i) = asc(order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }

  const double norm2 = std::max(std::abs(out.values(0)), std::abs(out.values(d - 1)));
  const double clamp = tol::kEigClamp * norm2;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (out.values(i) < 0.0) {
      if (out.values(i) < -clamp) {
        throw MespError(ErrorCode::NonPSD,
                        "eigenvalue " + std::to_string(out.values(i)) + " below zero");
      }
      out.values(i) = 0.0;
    }
  }
  return out;
}

bool majorizes(const VectorXd& u, const VectorXd& w) {
  if (u.size() != w.size()) {
    throw MespError(ErrorCode::LengthMismatch, "majorizes: vectors differ in length");
  }
  std::vector<double> a(u.data(), u.data() + u.size());
  std::vector<double> b(w.data(), w.data() + w.size());
  std::sort(a.begin(), a.end(), std::greater<>());
  std::sort(b.begin(), b.end(), std::greater<>());

  double scale = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) scale += std::abs(a[i]) + std::abs(b[i]);
  const double slack = tol::kMajorization * scale;

  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    if (sa < sb - slack) return false;
  }
  return std::abs(sa - sb) <= slack;
}

int numerical_rank(const VectorXd& lambda) {
  if (lambda.size() == 0 || lambda(0) <= 0.0) return 0;
  const double cut = tol::kRank * lambda(0);
  int r = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > cut) ++r;
  }
  return r;
}

CriticalIndexResult critical_index(const VectorXd& lambda, int s) {
  const auto d = static_cast<int>(lambda.size());
  if (s < 1 || s > d) {
    throw MespError(ErrorCode::OutOfRange, "critical_index: s must lie in [1, d]");
  }
  if (numerical_rank(lambda) < s) {
    throw MespError(ErrorCode::RankDeficient,
                    "fewer than s = " + std::to_string(s) + " positive eigenvalues");
  }

  // suffix(k) = sum_{i >= k} lambda_i with 0-based indices.
  std::vector<double> suffix(static_cast<std::size_t>(d) + 1, 0.0);
  for (int i = d - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + lambda(i);

  // First k with tail_mean(k) >= lambda_{k+1}; k = s-1 always qualifies since
  // the tail sum contains lambda_s. Equality ties resolve to the smaller k.
  for (int k = 0; k < s; ++k) {
    const double tail = suffix[k] / static_cast<double>(s - k);
    if (tail >= lambda(k)) return {k, tail};
  }
  return {s - 1, suffix[s - 1]};
}

VectorXd waterfill(const VectorXd& lambda, int s) {
  const auto [k, tail] = critical_index(lambda, s);
  VectorXd out = VectorXd::Zero(lambda.size());
  out.head(k) = lambda.head(k);
  out.segment(k, s - k).setConstant(tail);
  return out;
}

double g_value(const VectorXd& lambda, int s, PhiKind kind) {
  const auto [k, tail] = critical_index(lambda, s);
  double v = 0.0;
  for (int i = 0; i < k; ++i) v += phi(kind, lambda(i));
  return v + static_cast<double>(s - k) * phi(kind, tail);
}

VectorXd beta_map(const VectorXd& lambda, int s) {
  const auto [k, tail] = critical_index(lambda, s);
  VectorXd beta(lambda.size());
  beta.head(k) = lambda.head(k);
  beta.tail(lambda.size() - k).setConstant(tail);
  return beta;
}

VectorXd g_subgradient(const VectorXd& lambda, int s, PhiKind kind) {
  // For i > r the admissible set is (-inf, phi'(tail)]; beta already equals the
  // tail mean there, so phi'(beta) selects the boundary element.
  const VectorXd beta = beta_map(lambda, s);
  return beta.unaryExpr([kind](double b) { return phi_prime(kind, b); });
}

double spectral_value(const MatrixXd& x, int s, PhiKind kind) {
  return g_value(sorted_eigenvalues(x).values, s, kind);
}

MatrixXd spectral_subgradient(const MatrixXd& x, int s, PhiKind kind) {
  const SortedSpectrum sp = sorted_eigenvalues(x);
  const VectorXd mu = g_subgradient(sp.values, s, kind);
  return sp.vectors * mu.asDiagonal() * sp.vectors.transpose();
}

double subgradient_norm_bound(const MatrixXd& m, int /*s*/, PhiKind kind) {
  const MatrixXd gram = m.transpose() * m;
  const SortedSpectrum sp = sorted_eigenvalues(gram);
  const double lmax = sp.values(0);
  const double lmin = sp.values(sp.values.size() - 1);
  if (!(lmin > tol::kRank * std::max(lmax, 1e-300))) {
    throw MespError(ErrorCode::Singular, "subgradient_norm_bound: M is rank deficient");
  }
  const double d = static_cast<double>(m.cols());
  return std::sqrt(d) * lmax * std::abs(phi_prime(kind, lmin));
}

}  // namespace mesp
