#pragma once

#include <Eigen/Dense>

namespace mesp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Convex, nonincreasing scalar functions supported by the spectral envelope.
/// NegLog is the entropy case phi(t) = -log t; Inv is phi(t) = 1/t.
enum class PhiKind { NegLog, Inv };

double phi(PhiKind kind, double t);
double phi_prime(PhiKind kind, double t);

/// Eigen-pairs of a symmetric PSD matrix, eigenvalues nonincreasing and
/// nonnegative, `vectors.col(i)` paired with `values(i)`.
struct SortedSpectrum {
  VectorXd values;
  MatrixXd vectors;
};

struct CriticalIndexResult {
  int k = 0;                 // number of leading eigenvalues kept as-is
  double tail_mean = 0.0;    // (1/(s-k)) * sum_{i>k} lambda_i
};

namespace tol {
// Relative asymmetry accepted by sorted_eigenvalues (scaled by max |X_ij|).
inline constexpr double kSymmetry = 1e-10;
// Negative eigenvalues above -kEigClamp * ||X||_2 are clamped to zero.
inline constexpr double kEigClamp = 1e-10;
// Eigenvalues below kRank * lambda_1 count as zero.
inline constexpr double kRank = 1e-9;
// Slack for partial-sum comparisons in majorizes(), relative to the totals.
inline constexpr double kMajorization = 1e-10;
}  // namespace tol

/// Symmetric eigendecomposition sorted in nonincreasing order. Ties keep the
/// order produced by the solver (stable sort). Throws NonSymmetric, NonPSD,
/// EigFailure.
SortedSpectrum sorted_eigenvalues(const MatrixXd& x);

/// u majorizes w: equal totals and every partial sum of sorted(u) dominates
/// the corresponding partial sum of sorted(w).
bool majorizes(const VectorXd& u, const VectorXd& w);

/// Number of entries of a nonincreasing vector above kRank * lambda_1.
int numerical_rank(const VectorXd& lambda);

/// The unique k in [0, s) with lambda_k > tail_mean >= lambda_{k+1}
/// (lambda_0 = +inf). Requires lambda nonincreasing with at least s positive
/// entries; throws RankDeficient otherwise.
CriticalIndexResult critical_index(const VectorXd& lambda, int s);

/// Minimizer of f_s over the vectors majorizing lambda: keeps lambda_1..k,
/// flattens positions k+1..s to the tail mean and zeroes the rest.
VectorXd waterfill(const VectorXd& lambda, int s);

/// Closed-form envelope g_s(lambda) = f_s(waterfill(lambda, s)).
double g_value(const VectorXd& lambda, int s, PhiKind kind);

/// beta_l = lambda_l for l <= k, tail mean afterwards.
VectorXd beta_map(const VectorXd& lambda, int s);

/// Canonical subgradient of g_s at lambda: phi'(beta). For zero eigenvalues
/// this is the largest admissible element of the subdifferential.
VectorXd g_subgradient(const VectorXd& lambda, int s, PhiKind kind);

/// G_s(X) = g_s(lambda(X)).
double spectral_value(const MatrixXd& x, int s, PhiKind kind);

/// Y = Q diag(g_subgradient(lambda, s)) Q^T, a subgradient of G_s at X.
MatrixXd spectral_subgradient(const MatrixXd& x, int s, PhiKind kind);

/// sqrt(d) * ||M^T M||_2 * |phi'(lambda_min(M^T M))|, an upper bound on the
/// norm of every x-subgradient of G_s(M diag(x) M^T) over the capped simplex.
double subgradient_norm_bound(const MatrixXd& m, int s, PhiKind kind);

}  // namespace mesp
