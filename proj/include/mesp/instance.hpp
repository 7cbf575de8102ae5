#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mesp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace tol {
// ||V^T V - C||_max must stay below kFactor * ||C||_max.
inline constexpr double kFactor = 1e-10;
// Loader PSD gate: reject lambda_min < -kPsdGate * ||C||_2.
inline constexpr double kPsdGate = 1e-8;
// Loader symmetrizes when asymmetry is below kLoadSymmetry * ||C||_max.
inline constexpr double kLoadSymmetry = 1e-8;
}  // namespace tol

/// An MESP instance: covariance C, a factor V with C = V^T V, and the subset
/// size s. Immutable once constructed.
class Instance {
 public:
  /// Factors C (Cholesky when positive definite, eigen-factor otherwise).
  static Instance from_matrix(const MatrixXd& c, int s,
                              std::optional<double> known_opt = std::nullopt);
  /// Uses the supplied factor verbatim after checking C = V^T V.
  static Instance from_factor(const MatrixXd& c, const MatrixXd& v, int s,
                              std::optional<double> known_opt = std::nullopt);

  const MatrixXd& C() const { return c_; }
  const MatrixXd& V() const { return v_; }
  int d() const { return static_cast<int>(c_.rows()); }
  int s() const { return s_; }
  int rank() const { return rank_; }
  bool full_rank() const { return rank_ == d(); }
  /// log det C; -inf when C is singular.
  double logdet_c() const { return logdet_c_; }
  std::optional<double> known_opt() const { return known_opt_; }
  /// Constant added to bounds of this instance to obtain bounds on the
  /// instance it was derived from (nonzero only after complementation).
  double bound_offset() const { return bound_offset_; }
  /// V^{-T}, so that C^{-1} = W^T W. Throws SingularC when C is singular.
  const MatrixXd& W() const;

  Instance with_s(int s) const;
  Instance with_known_opt(std::optional<double> opt) const;
  Instance with_bound_offset(double offset) const;

 private:
  Instance() = default;
  void finalize();

  MatrixXd c_;
  MatrixXd v_;
  MatrixXd w_;
  int s_ = 0;
  int rank_ = 0;
  double logdet_c_ = 0.0;
  double bound_offset_ = 0.0;
  std::optional<double> known_opt_;
};

enum class MatrixFormat { Auto, DenseText, Csv, LowerTriangleText };

struct MatrixFile {
  std::filesystem::path path;
  MatrixFormat format = MatrixFormat::Auto;
};

/// Parses a symmetric matrix; nearly-symmetric input is averaged with its
/// transpose. Throws ParseError, NonSymmetric, IoError.
MatrixXd read_matrix(const MatrixFile& file);
void write_matrix(const std::filesystem::path& path, const MatrixXd& c,
                  MatrixFormat format = MatrixFormat::DenseText);

Instance load_instance(const MatrixFile& file, int s,
                       std::optional<double> known_opt = std::nullopt);

/// Sidecar optima: CSV with header `s,opt`.
std::map<int, double> load_optima(const std::filesystem::path& path);

struct SyntheticSpec {
  int d = 0;
  /// Explicit eigenvalues; when empty, a geometric ladder from 1 down to
  /// 1/condition is used.
  std::vector<double> spectrum;
  double condition = 10.0;
  std::uint64_t seed = 0;
};

/// C = Q diag(spectrum) Q^T with Q from the QR factorization of a seeded
/// Gaussian matrix.
Instance synthetic_instance(const SyntheticSpec& spec, int s);

/// d = 4, s = 2 instance with V = [[1,1,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]].
Instance example_4x4();

struct BruteForceResult {
  double opt_value = 0.0;
  VectorXd argmin;
  int singular_subsets = 0;
};

inline constexpr double kMaxEnumeration = 1e6;

/// Exhaustive minimum of -log det C_{S,S} over |S| = s. Ties keep the
/// lexicographically first subset. Throws TooLarge above kMaxEnumeration.
BruteForceResult brute_force_opt(const Instance& inst);

double log_binomial(int n, int k);

}  // namespace mesp
