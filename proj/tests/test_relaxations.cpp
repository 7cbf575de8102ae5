#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mesp/error.hpp"
#include "mesp/instance.hpp"
#include "mesp/relaxations.hpp"
#include "mesp/spectral.hpp"
#include "oracles.hpp"

using namespace mesp;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Instance random_instance(int d, int s, std::mt19937_64& rng) {
  return Instance::from_matrix(oracle::random_pd(d, rng, 0.2, 3.0), s);
}

VectorXd random_vec(int d, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

TEST_CASE("mesp_objective on the worked example") {
  const Instance ex = example_4x4();
  const double l2 = std::log(2.0);
  CHECK(std::abs(mesp_objective(ex, vec({1, 1, 0, 0}))) < 1e-12);
  CHECK(std::abs(mesp_objective(ex, vec({1, 0, 1, 0}))) < 1e-12);
  CHECK(std::abs(mesp_objective(ex, vec({1, 0, 0, 1}))) < 1e-12);
  CHECK(std::abs(mesp_objective(ex, vec({0, 1, 1, 0})) + l2) < 1e-12);
  CHECK(std::abs(mesp_objective(ex, vec({0, 1, 0, 1})) + l2) < 1e-12);
  CHECK(std::abs(mesp_objective(ex, vec({0, 0, 1, 1}))) < 1e-12);

  CHECK_THROWS_AS(mesp_objective(ex, vec({1, 1, 1, 0})), MespError);
  CHECK_THROWS_AS(mesp_objective(ex, vec({0.5, 0.5, 1, 0})), MespError);

  MatrixXd sing = MatrixXd::Identity(3, 3);
  sing(0, 1) = sing(1, 0) = 1.0;
  const Instance si = Instance::from_matrix(sing, 2);
  try {
    mesp_objective(si, vec({1, 1, 0}));
    FAIL("expected SingularSubmatrix");
  } catch (const MespError& e) {
    CHECK(e.code() == ErrorCode::SingularSubmatrix);
  }
}

TEST_CASE("identity covariance") {
  const Instance id = Instance::from_matrix(MatrixXd::Identity(5, 5), 2);
  CHECK(std::abs(mesp_objective(id, vec({0, 1, 0, 1, 0}))) < 1e-15);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const VectorXd x = oracle::random_feasible(5, 2, rng);
    CHECK(std::abs(linx_oracle(id, x).value) < 1e-14);
  }
}

TEST_CASE("gamma at the worked example point") {
  const Instance ex = example_4x4();
  const OracleOutput o = gamma_oracle(ex, vec({1, 0.5, 0.25, 0.25}), VectorXd::Zero(4));
  CHECK(std::abs(o.value + std::log((4 + std::sqrt(2.0)) / 4)) < 1e-12);
}

TEST_CASE("gamma at rho = 0 is the envelope of the spectrum") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Instance inst = random_instance(6, 3, rng);
    const VectorXd x = oracle::random_feasible(6, 3, rng);
    const MatrixXd m = inst.V() * x.asDiagonal() * inst.V().transpose();
    CHECK(gamma_oracle(inst, x, VectorXd::Zero(6)).value ==
          doctest::Approx(spectral_value(m, 3, PhiKind::NegLog)).epsilon(1e-13));
  }
}

TEST_CASE("exactness at binary points") {
  std::mt19937_64 rng(3);
  for (int d : {4, 6, 8}) {
    for (int s = 1; s < d; s += 2) {
      const Instance inst = random_instance(d, s, rng);
      for (const VectorXd& x : oracle::binaries(d, s)) {
        const double opt = oracle::neglogdet_sub(inst.C(), x);
        CHECK(std::abs(mesp_objective(inst, x) - opt) < 1e-9);
        CHECK(std::abs(gamma_oracle(inst, x, VectorXd::Zero(d)).value - opt) < 1e-9);
        CHECK(std::abs(gamma_c_oracle(inst, x, VectorXd::Zero(d)).value - opt) < 1e-9);
        CHECK(std::abs(linx_oracle(inst, x).value - opt) < 1e-9);
        const VectorXd rho = random_vec(d, rng, 1.0);
        const VectorXd omega = random_vec(d, rng, 1.0);
        CHECK(std::abs(gamma_oracle(inst, x, rho).value - opt) < 1e-9);
        CHECK(std::abs(gamma_c_oracle(inst, x, omega).value - opt) < 1e-9);
        CHECK(std::abs(linx_o_oracle(inst, x, rho(0)).value - opt) < 1e-9);
        CHECK(std::abs(linx_g_oracle(inst, x, rho).value - opt) < 1e-9);
        CHECK(std::abs(linx_d_oracle(inst, {x, rho, omega}).value - opt) < 1e-9);
      }
    }
  }
}

TEST_CASE("gamma-c on a diagonal matrix is exact at binaries") {
  MatrixXd c = MatrixXd::Zero(4, 4);
  c.diagonal() << 0.5, 2, 3, 1.5;
  const Instance inst = Instance::from_matrix(c, 2);
  for (const VectorXd& x : oracle::binaries(4, 2)) {
    CHECK(gamma_c_oracle(inst, x, VectorXd::Zero(4)).value ==
          doctest::Approx(mesp_objective(inst, x)).epsilon(1e-14));
  }
}

TEST_CASE("gamma-c needs a nonsingular C") {
  MatrixXd c = MatrixXd::Identity(3, 3);
  c(0, 1) = c(1, 0) = 1.0;
  const Instance inst = Instance::from_matrix(c, 1);
  try {
    gamma_c_oracle(inst, vec({1.0 / 3, 1.0 / 3, 1.0 / 3}), VectorXd::Zero(3));
    FAIL("expected SingularC");
  } catch (const MespError& e) {
    CHECK(e.code() == ErrorCode::SingularC);
  }
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const int d = 4 + t % 5;
    const int s = 1 + t % (d - 1);
    const Instance inst = random_instance(d, s, rng);
    const VectorXd x = oracle::random_feasible(d, s, rng, 0.1);
    const VectorXd rho = random_vec(d, rng, 0.5);
    const VectorXd omega = random_vec(d, rng, 0.5);

    {
      const OracleOutput o = gamma_oracle(inst, x, rho);
      const auto fx = [&](const VectorXd& z) { return gamma_oracle(inst, z, rho).value; };
      const auto fr = [&](const VectorXd& z) { return gamma_oracle(inst, x, z).value; };
      CHECK(oracle::rel_err(o.grad_x, oracle::gradient_fd(fx, x)) <= 1e-5);
      CHECK(oracle::rel_err(*o.grad_rho, oracle::gradient_fd(fr, rho)) <= 1e-5);
    }
    {
      const OracleOutput o = gamma_c_oracle(inst, x, omega);
      const auto fx = [&](const VectorXd& z) { return gamma_c_oracle(inst, z, omega).value; };
      const auto fw = [&](const VectorXd& z) { return gamma_c_oracle(inst, x, z).value; };
      CHECK(oracle::rel_err(o.grad_x, oracle::gradient_fd(fx, x)) <= 1e-5);
      CHECK(oracle::rel_err(*o.grad_omega, oracle::gradient_fd(fw, omega)) <= 1e-5);
    }
    {
      const OracleOutput o = linx_d_oracle(inst, {x, rho, omega});
      const auto fx = [&](const VectorXd& z) { return linx_d_oracle(inst, {z, rho, omega}).value; };
      const auto fr = [&](const VectorXd& z) { return linx_d_oracle(inst, {x, z, omega}).value; };
      const auto fw = [&](const VectorXd& z) { return linx_d_oracle(inst, {x, rho, z}).value; };
      CHECK(oracle::rel_err(o.grad_x, oracle::gradient_fd(fx, x)) <= 1e-5);
      CHECK(oracle::rel_err(*o.grad_rho, oracle::gradient_fd(fr, rho)) <= 1e-5);
      CHECK(oracle::rel_err(*o.grad_omega, oracle::gradient_fd(fw, omega)) <= 1e-5);
    }
    {
      const OracleOutput o = linx_g_oracle(inst, x, rho);
      const auto fx = [&](const VectorXd& z) { return linx_g_oracle(inst, z, rho).value; };
      const auto fr = [&](const VectorXd& z) { return linx_g_oracle(inst, x, z).value; };
      CHECK(oracle::rel_err(o.grad_x, oracle::gradient_fd(fx, x)) <= 1e-5);
      CHECK(oracle::rel_err(*o.grad_rho, oracle::gradient_fd(fr, rho)) <= 1e-5);
    }
    {
      const double r0 = rho(0);
      const OracleOutput o = linx_o_oracle(inst, x, r0);
      const auto fx = [&](const VectorXd& z) { return linx_o_oracle(inst, z, r0).value; };
      const auto fr = [&](const VectorXd& z) { return linx_o_oracle(inst, x, z(0)).value; };
      CHECK(oracle::rel_err(o.grad_x, oracle::gradient_fd(fx, x)) <= 1e-5);
      CHECK(oracle::rel_err(*o.grad_rho, oracle::gradient_fd(fr, VectorXd::Constant(1, r0))) <=
            1e-5);
      const OracleOutput l = linx_oracle(inst, x);
      const auto fl = [&](const VectorXd& z) { return linx_oracle(inst, z).value; };
      CHECK(oracle::rel_err(l.grad_x, oracle::gradient_fd(fl, x)) <= 1e-5);
    }
    {
      const double alpha = 0.3;
      const OracleOutput o = gamma_star_oracle(inst, x, alpha);
      const auto fx = [&](const VectorXd& z) { return gamma_star_oracle(inst, z, alpha).value; };
      CHECK(oracle::rel_err(o.grad_x, oracle::gradient_fd(fx, x)) <= 1e-5);
      const double fa = (gamma_star_oracle(inst, x, alpha + 1e-6).value -
                         gamma_star_oracle(inst, x, alpha - 1e-6).value) /
                        2e-6;
      CHECK(std::abs(fa - *o.grad_alpha) <= 1e-5 * std::max(1.0, std::abs(fa)));
    }
  }
}

TEST_CASE("scaled linx identities") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const int d = 3 + t % 6;
    const int s = 1 + t % (d - 1);
    const Instance inst = random_instance(d, s, rng);
    const VectorXd x = oracle::random_feasible(d, s, rng);
    const VectorXd rho = random_vec(d, rng, 1.0);
    const double r0 = rho(0);

    const double psi_o = linx_o_oracle(inst, x, r0).value;
    const double via_d =
        linx_d_oracle(inst, {x, VectorXd::Constant(d, r0), VectorXd::Zero(d)}).value;
    CHECK(std::abs(psi_o - via_d) <= 1e-12 * std::max(1.0, std::abs(psi_o)));

    // Direct evaluation of the g-scaled determinant.
    const VectorXd er = rho.array().exp();
    MatrixXd l = er.asDiagonal() * inst.C() * x.asDiagonal() * inst.C() * er.asDiagonal();
    l.diagonal() += VectorXd::Ones(d) - x;
    const double direct = -0.5 * std::log(l.determinant()) + x.dot(rho);
    const double psi_g = linx_g_oracle(inst, x, rho).value;
    CHECK(std::abs(psi_g - direct) <= 1e-12 * std::max(1.0, std::abs(direct)) * 10);
    const double via_w = linx_d_oracle(inst, {x, VectorXd::Zero(d), -2.0 * rho}).value;
    CHECK(std::abs(psi_g - via_w) <= 1e-12 * std::max(1.0, std::abs(psi_g)));

    CHECK(linx_o_oracle(inst, x, 0.0).value == doctest::Approx(linx_oracle(inst, x).value));
    CHECK(linx_g_oracle(inst, x, VectorXd::Zero(d)).value ==
          doctest::Approx(linx_oracle(inst, x).value));
    CHECK(linx_d_oracle(inst, {x, VectorXd::Zero(d), VectorXd::Zero(d)}).value ==
          doctest::Approx(linx_oracle(inst, x).value));
  }
}

TEST_CASE("linx value against a direct determinant") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const Instance inst = random_instance(6, 2, rng);
    const VectorXd x = oracle::random_feasible(6, 2, rng);
    MatrixXd l = inst.C() * x.asDiagonal() * inst.C();
    l.diagonal() += VectorXd::Ones(6) - x;
    CHECK(linx_oracle(inst, x).value ==
          doctest::Approx(-0.5 * std::log(l.determinant())).epsilon(1e-12));
  }
}

TEST_CASE("gamma-star mixes the two inner values") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 30; ++t) {
    const Instance inst = random_instance(6, 3, rng);
    const VectorXd x = oracle::random_feasible(6, 3, rng);
    const double g = gamma_oracle(inst, x, VectorXd::Zero(6)).value;
    const double gc = gamma_c_oracle(inst, x, VectorXd::Zero(6)).value;
    CHECK(gamma_star_oracle(inst, x, 1.0).value == doctest::Approx(g));
    CHECK(gamma_star_oracle(inst, x, 0.0).value == doctest::Approx(gc));
    const double hi = std::max(gamma_star_oracle(inst, x, 0.0).value,
                               gamma_star_oracle(inst, x, 1.0).value);
    CHECK(hi == doctest::Approx(std::max(g, gc)));
    for (double a : {0.1, 0.5, 0.9}) {
      const double v = gamma_star_oracle(inst, x, a).value;
      CHECK(v >= std::min(g, gc) - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
  const Instance inst = random_instance(4, 2, rng);
  CHECK_THROWS_AS(gamma_star_oracle(inst, VectorXd::Constant(4, 0.5), 1.5), MespError);
}

TEST_CASE("complementary instance") {
  MatrixXd c = MatrixXd::Zero(2, 2);
  c.diagonal() << 2, 0.5;
  const Instance inst = Instance::from_matrix(c, 1);
  const Instance comp = complementary_instance(inst);
  CHECK(comp.s() == 1);
  CHECK(comp.C()(0, 0) == doctest::Approx(0.5));
  CHECK(comp.C()(1, 1) == doctest::Approx(2.0));
  CHECK(std::abs(comp.bound_offset()) < 1e-15);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const Instance a = random_instance(6, 2, rng);
    const Instance b = complementary_instance(a);
    CHECK(b.bound_offset() == doctest::Approx(-a.logdet_c()));
    const Instance a2 = complementary_instance(b);
    CHECK(a2.s() == a.s());
    CHECK((a2.C() - a.C()).cwiseAbs().maxCoeff() <= 1e-10 * a.C().cwiseAbs().maxCoeff());
    CHECK(std::abs(a2.bound_offset()) < 1e-12);
  }

  const Instance full = random_instance(3, 3, rng);
  CHECK_THROWS_AS(complementary_instance(full), MespError);
}

TEST_CASE("double-scaled linx is invariant under complementation") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const int d = 4 + t % 4;
    const int s = 1 + t % (d - 1);
    const Instance inst = random_instance(d, s, rng);
    const Instance comp = complementary_instance(inst);
    const VectorXd x = oracle::random_feasible(d, s, rng);
    const VectorXd rho = random_vec(d, rng, 1.0);
    const VectorXd omega = random_vec(d, rng, 1.0);
    const double direct = linx_d_oracle(inst, {x, rho, omega}).value;
    const double flipped =
        linx_d_oracle(comp, {VectorXd::Ones(d) - x, omega, rho}).value + comp.bound_offset();
    CHECK(std::abs(direct - flipped) < 1e-10);
  }
}

TEST_CASE("connection inequality holds pointwise") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 200; ++t) {
    const int d = 4 + t % 7;
    const int s = 1 + t % (d - 1);
    const Instance inst = random_instance(d, s, rng);
    const VectorXd x = oracle::random_feasible(d, s, rng);
    const VectorXd rho = random_vec(d, rng, 1.0);
    const VectorXd omega = random_vec(d, rng, 1.0);
    const KappaResult k = connection_kappa(inst, x, rho, omega);
    CHECK(k.lhs >= k.rhs - 1e-8);
  }
  const Instance id = Instance::from_matrix(MatrixXd::Identity(5, 5), 2);
  const KappaResult k = connection_kappa(id, VectorXd::Constant(5, 0.4), VectorXd::Zero(5),
                                         VectorXd::Zero(5));
  MESSAGE("identity: kappa=" << k.kappa << " lhs=" << k.lhs << " rhs=" << k.rhs);
  CHECK(k.lhs >= k.rhs - 1e-8);
}

TEST_CASE("linearization bound") {
  std::mt19937_64 rng(11);
  const VectorXd xh = vec({0.5, 0.5, 1.0, 0.0});
  CHECK(linearization_bound(2.0, VectorXd::Zero(4), xh, 2) == 2.0);
  // min over the capped simplex puts mass on the two smallest entries.
  CHECK(linearization_bound(0.0, vec({3, 1, 2, 0}), xh, 2) ==
        doctest::Approx(1.0 - (1.5 + 0.5 + 2.0)));

  for (const Method m : kAllMethods) {
    const Instance inst = random_instance(5, 2, rng);
    const VectorXd x_hat = oracle::random_feasible(5, 2, rng);
    VectorXd y = random_vec(scaling_dim(m, 5), rng, 0.5);
    if (m == Method::GammaStar) y(0) = 0.4;
    const double lb = valid_lower_bound(inst, m, x_hat, y);
    for (int t = 0; t < 100; ++t) {
      const VectorXd x = oracle::random_feasible(5, 2, rng, 0.0);
      CHECK(lb <= evaluate(inst, m, x, y).value + 1e-10);
    }
    for (const VectorXd& b : oracle::binaries(5, 2)) {
      CHECK(lb <= mesp_objective(inst, b) + 1e-10);
    }
  }

  const Instance inst = random_instance(4, 2, rng);
  CHECK_THROWS_AS(valid_lower_bound(inst, Method::Linx, vec({1, 1, 1, 0}), VectorXd(0)),
                  MespError);
}

TEST_CASE("linearization bound is tight at the minimizer") {
  // d = 3, s = 1: gamma reduces to -log sum_i x_i C_ii, minimized at the vertex
  // with the largest diagonal entry.
  MatrixXd c(3, 3);
  c << 2, 0.3, 0.1, 0.3, 1, 0.2, 0.1, 0.2, 1.5;
  const Instance inst = Instance::from_matrix(c, 1);
  double best = INFINITY;
  VectorXd arg;
  const int n = 200;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n - i; ++j) {
      VectorXd x = vec({double(i) / n, double(j) / n, double(n - i - j) / n});
      const double v = gamma_oracle(inst, x, VectorXd::Zero(3)).value;
      if (v < best) {
        best = v;
        arg = x;
      }
    }
  }
  CHECK(best == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(valid_lower_bound(inst, Method::Gamma, arg, VectorXd(0)) - best) < 1e-8);
}

TEST_CASE("integrality gap constant") {
  CHECK(std::abs(integrality_gap_constant(2, 1)) < 1e-14);
  CHECK(integrality_gap_constant(4, 2) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
  for (int d = 2; d < 15; ++d) {
    for (int s = 1; s < d; ++s) {
      CHECK(integrality_gap_constant(d, s) ==
            doctest::Approx(integrality_gap_constant(d, d - s)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(integrality_gap_constant(4, 4), MespError);
  CHECK_THROWS_AS(integrality_gap_constant(4, 0), MespError);
}

TEST_CASE("convexity in x and concavity in the scaling") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 500; ++t) {
    const int d = 4 + t % 5;
    const int s = 1 + t % (d - 1);
    const Instance inst = random_instance(d, s, rng);
    const VectorXd x1 = oracle::random_feasible(d, s, rng);
    const VectorXd x2 = oracle::random_feasible(d, s, rng);
    const VectorXd xm = 0.5 * (x1 + x2);
    const VectorXd r1 = random_vec(d, rng, 1.0), r2 = random_vec(d, rng, 1.0);
    const VectorXd w1 = random_vec(d, rng, 1.0), w2 = random_vec(d, rng, 1.0);
    const VectorXd rm = 0.5 * (r1 + r2), wm = 0.5 * (w1 + w2);

    const auto psi = [&](const VectorXd& x, const VectorXd& r, const VectorXd& w) {
      return linx_d_oracle(inst, {x, r, w}).value;
    };
    CHECK(psi(xm, r1, w1) <= 0.5 * (psi(x1, r1, w1) + psi(x2, r1, w1)) + 1e-8);
    CHECK(psi(x1, rm, wm) >= 0.5 * (psi(x1, r1, w1) + psi(x1, r2, w2)) - 1e-8);

    const auto fg = [&](const VectorXd& x, const VectorXd& r) {
      return gamma_oracle(inst, x, r).value;
    };
    CHECK(fg(xm, r1) <= 0.5 * (fg(x1, r1) + fg(x2, r1)) + 1e-8);
    CHECK(fg(x1, rm) >= 0.5 * (fg(x1, r1) + fg(x1, r2)) - 1e-8);

    for (const Method m : kAllMethods) {
      VectorXd y = random_vec(scaling_dim(m, d), rng, 0.5);
      if (m == Method::GammaStar) y(0) = 0.7;
      const double mid = evaluate(inst, m, xm, y).value;
      CHECK(mid <= 0.5 * (evaluate(inst, m, x1, y).value + evaluate(inst, m, x2, y).value) + 1e-8);
    }
  }
}

TEST_CASE("gamma gradient stays within the norm bound") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 1000; ++t) {
    const int d = 4 + t % 5;
    const int s = 1 + t % d;
    const Instance inst = random_instance(d, s, rng);
    const VectorXd x = oracle::random_feasible(d, s, rng, 0.0);
    const double bound = subgradient_norm_bound(inst.V(), s, PhiKind::NegLog);
    CHECK(gamma_oracle(inst, x, VectorXd::Zero(d)).grad_x.norm() <= bound * (1 + 1e-12));
  }
}

TEST_CASE("method names round-trip") {
  for (const Method m : kAllMethods) CHECK(parse_method(method_name(m)) == m);
  CHECK_FALSE(parse_method("bqp").has_value());
}
