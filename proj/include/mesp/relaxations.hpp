#pragma once

#include <array>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "mesp/instance.hpp"

namespace mesp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace tol {
// Capped-simplex membership for points handed to the bound certificate.
inline constexpr double kFeas = 1e-8;
}  // namespace tol

enum class Method {
  Gamma,
  GammaC,
  GammaStar,
  Linx,
  LinxO,
  LinxG,
  LinxD,
  GammaG,
  GammaCG,
};

/// The seven relaxations offered on the command line, in canonical order.
inline constexpr std::array<Method, 7> kStandardMethods = {
    Method::Gamma, Method::GammaC, Method::GammaStar, Method::Linx,
    Method::LinxO, Method::LinxG,  Method::LinxD};

inline constexpr std::array<Method, 9> kAllMethods = {
    Method::Gamma, Method::GammaC, Method::GammaStar, Method::Linx,   Method::LinxO,
    Method::LinxG, Method::LinxD,  Method::GammaG,    Method::GammaCG};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Number of scaling coordinates: 0 for the plain convex relaxations, 1 for
/// linx-o (rho0) and gamma-star (alpha), d for the g-scalings, 2d for linx-d
/// (rho stacked over omega).
int scaling_dim(Method m, int d);
bool is_saddle(Method m);
/// gamma-star keeps alpha in [0, 1]; every other scaling block is free.
bool scaling_is_box(Method m);

struct ScalingPoint {
  VectorXd x;
  VectorXd rho;
  VectorXd omega;
};

struct OracleOutput {
  double value = 0.0;
  VectorXd grad_x;
  std::optional<VectorXd> grad_rho;  // length 1 for linx-o
  std::optional<VectorXd> grad_omega;
  std::optional<double> grad_alpha;
};

/// -log det C_{S,S} for a binary x with exactly s ones.
double mesp_objective(const Instance& inst, const VectorXd& x);

OracleOutput gamma_oracle(const Instance& inst, const VectorXd& x, const VectorXd& rho);
OracleOutput gamma_c_oracle(const Instance& inst, const VectorXd& x, const VectorXd& omega);
OracleOutput gamma_star_oracle(const Instance& inst, const VectorXd& x, double alpha);
OracleOutput linx_oracle(const Instance& inst, const VectorXd& x);
OracleOutput linx_o_oracle(const Instance& inst, const VectorXd& x, double rho0);
OracleOutput linx_g_oracle(const Instance& inst, const VectorXd& x, const VectorXd& rho);
OracleOutput linx_d_oracle(const Instance& inst, const ScalingPoint& p);

/// Instance (C^{-1}, W = V^{-T}, d - s) whose bounds map back to this one by
/// adding bound_offset().
Instance complementary_instance(const Instance& inst);

struct KappaResult {
  double kappa = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Shift kappa = log(tau(P) / tau(M)) together with both sides of
/// psi_d(x, rho + kappa, omega) >= (f_gamma_g(x, rho) + f_gammac_g(x, omega)) / 2.
KappaResult connection_kappa(const Instance& inst, const VectorXd& x, const VectorXd& rho,
                             const VectorXd& omega);

/// f + min_{x in capped simplex} <g, x - x_hat>, closed form.
double linearization_bound(double f, const VectorXd& g, const VectorXd& x_hat, int s);

/// Linearization certificate of `method` at x_hat with the scaling frozen at y.
double valid_lower_bound(const Instance& inst, Method method, const VectorXd& x_hat,
                         const VectorXd& y);

double integrality_gap_constant(int d, int s);

/// Uniform view used by the solvers: value, gradient in x, gradient in the
/// stacked scaling y (empty for the convex methods).
struct SaddleEval {
  double value = 0.0;
  VectorXd grad_x;
  VectorXd grad_y;
};

SaddleEval evaluate(const Instance& inst, Method method, const VectorXd& x, const VectorXd& y);

}  // namespace mesp
