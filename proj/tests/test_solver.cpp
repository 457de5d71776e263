#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfgp/analytic.hpp"
#include "mfgp/solver.hpp"
#include "mfgp/supply.hpp"
#include "oracles.hpp"

using namespace mfgp;

namespace {

// Exact discrete equilibrium for V = 0, g = (r2/2)(z-y2)^2: agent-optimal
// controls that clear the market, derived from the first-order conditions of
// the transcribed problem.
struct EquilibriumPair {
  PriceVector omega;
  ControlMatrix alpha;
};

EquilibriumPair terminal_cost_equilibrium(double c0, double r2, double y2,
                                          const std::vector<double>& x,
                                          const SupplyVector& supply, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  const std::size_t m_count = x.size();
  const double dt = grid.dt();
  const double t_end = grid.horizon();

  double q_sum = 0.0;
  for (double q : supply) q_sum += q;
  double x_mean = 0.0;
  for (double v : x) x_mean += v;
  x_mean /= static_cast<double>(m_count);
  const double z_mean_end = x_mean + dt * q_sum;

  EquilibriumPair pair;
  pair.omega.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    pair.omega[l] = -c0 * supply[l] - r2 * (z_mean_end - y2);
  }
  double omega_sum = 0.0;
  for (double w : pair.omega) omega_sum += w;

  pair.alpha = ControlMatrix(m_count, n);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double z_end = (c0 * x[m] + r2 * t_end * y2 - dt * omega_sum) / (c0 + r2 * t_end);
    for (std::size_t l = 0; l < n; ++l) {
      pair.alpha(m, l) = -(pair.omega[l] + r2 * (z_end - y2)) / c0;
    }
  }
  return pair;
}

}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.tau_alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SolverConfig{};
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SolverConfig{};
  cfg.init = SolverConfig::Init::Explicit;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("clearing residual") {
  SupplyVector q{2.0, 2.0};
  ControlMatrix alpha(2, 2);
  alpha(0, 0) = 1.0;
  alpha(0, 1) = 1.0;
  alpha(1, 0) = 3.0;
  alpha(1, 1) = 3.0;
  const ClearingResidual r = clearing_residual(alpha, q);
  CHECK(r.per_step == std::vector<double>{0.0, 0.0});
  CHECK(r.sup == 0.0);

  ControlMatrix one(1, 2);
  one(0, 0) = 1.0;
  one(0, 1) = 0.0;
  const ClearingResidual r2 = clearing_residual(one, SupplyVector{0.0, 1.0});
  CHECK(r2.per_step == std::vector<double>{1.0, -1.0});
  CHECK(r2.sup == 1.0);

  CHECK_THROWS_AS(clearing_residual(one, SupplyVector{0.0}), Error);
}

TEST_CASE("symmetric terminal cost pins the price at zero") {
  // g centered at the population mean with zero supply: equilibrium price is
  // identically zero.
  TimeGrid g(1.0, 32);
  const InitialStates x = InitialStates::evenly_spaced(0.0, 1.0, 8);
  const CostModel cm(1.0, Potential::zero(), Potential::quadratic(7.0, 0.5));
  const SupplyVector supply(32, 0.0);

  SolverConfig cfg;
  cfg.iterations = 3000;
  cfg.seed = 3;
  cfg.trace_stride = 0;
  const SolveReport report = pdhg_solve(cm, x, supply, g, cfg);
  for (double w : report.omega) CHECK(std::abs(w) <= 1e-8);
  CHECK(report.clearing_residual_sup <= 1e-8);
}

TEST_CASE("dual step zeroes the proximal objective gradient") {
  // The closed-form omega update must be the stationary point of
  //   L(omega, alpha_bar) + (T/(2 N tau)) ||omega - omega_prev||_2^2.
  // That objective is quadratic in each omega[l], so a central difference
  // with a large step is exact up to rounding.
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracles::random_instance(rng);
    const InitialStates x = InitialStates::explicit_samples(inst.x);
    const std::size_t n = inst.grid.steps();
    const double tau = 0.3 + 0.2 * static_cast<double>(trial % 4);

    const PriceVector omega_prev = inst.omega;
    ControlMatrix alpha_bar = inst.alpha;

    // closed form
    PriceVector omega_new(n);
    for (std::size_t l = 0; l < n; ++l) {
      double mean = 0.0;
      for (std::size_t m = 0; m < alpha_bar.rows(); ++m) mean += alpha_bar(m, l);
      mean /= static_cast<double>(alpha_bar.rows());
      omega_new[l] = omega_prev[l] + tau * (mean - inst.supply[l]);
    }

    const double weight = inst.grid.horizon() /
                          (2.0 * static_cast<double>(n) * tau);
    auto proximal = [&](const PriceVector& w) {
      double penalty = 0.0;
      for (std::size_t l = 0; l < n; ++l) {
        penalty += (w[l] - omega_prev[l]) * (w[l] - omega_prev[l]);
      }
      return lagrangian(w, alpha_bar, inst.supply, inst.cost, x, inst.grid).total +
             weight * penalty;
    };

    PriceVector probe = omega_new;
    for (std::size_t l = 0; l < n; ++l) {
      const double h = 0.5;
      probe[l] = omega_new[l] + h;
      const double up = proximal(probe);
      probe[l] = omega_new[l] - h;
      const double down = proximal(probe);
      probe[l] = omega_new[l];
      CHECK(std::abs((up - down) / (2.0 * h)) <= 1e-12);
    }
  }
}

TEST_CASE("damped dual step matches its closed form") {
  TimeGrid g(1.0, 4);
  const InitialStates x = InitialStates::explicit_samples({0.0});
  const CostModel cm(1.0, Potential::zero(), Potential::zero());
  const SupplyVector supply{0.5, -0.5, 0.25, 0.0};

  SolverConfig cfg;
  cfg.iterations = 1;
  cfg.sigma = 2.0;
  cfg.tau_omega = 0.4;
  cfg.tau_alpha = 0.1;
  cfg.init = SolverConfig::Init::Explicit;
  cfg.initial_alpha = ControlMatrix(1, 4, 0.0);
  cfg.initial_omega = PriceVector{1.0, 1.0, 1.0, 1.0};
  const SolveReport report = pdhg_solve(cm, x, supply, g, cfg);

  // alpha step: a = 0 + tau_alpha * (M N / T) * (-(dt/M)(c0*0 + 1)) = -tau_alpha
  // bar = 2a; omega = (1 + tau*(2a - Q)) / (1 + tau*sigma)
  for (std::size_t l = 0; l < 4; ++l) {
    const double a = -cfg.tau_alpha;
    const double expected = (1.0 + cfg.tau_omega * (2.0 * a - supply[l])) /
                            (1.0 + cfg.tau_omega * cfg.sigma);
    CHECK(report.omega[l] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(report.alpha(0, l) == doctest::Approx(a).epsilon(1e-15));
  }
}

TEST_CASE("an exact equilibrium is a fixed point of one iteration") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  TimeGrid g(1.0, 12);
  const std::vector<double> x{0.1, 0.4, 0.85};
  const double c0 = 1.3, r2 = 6.0, y2 = 0.2;
  SupplyVector supply(12);
  for (double& q : supply) q = unit(rng);

  const EquilibriumPair eq = terminal_cost_equilibrium(c0, r2, y2, x, supply, g);

  SolverConfig cfg;
  cfg.iterations = 1;
  cfg.init = SolverConfig::Init::Explicit;
  cfg.initial_alpha = eq.alpha;
  cfg.initial_omega = eq.omega;
  cfg.trace_stride = 0;

  const CostModel cm(c0, Potential::zero(), Potential::quadratic(r2, y2));
  const InitialStates agents = InitialStates::explicit_samples(x);
  const SolveReport report = pdhg_solve(cm, agents, supply, g, cfg);

  for (std::size_t l = 0; l < 12; ++l) {
    CHECK(std::abs(report.omega[l] - eq.omega[l]) <= 1e-12);
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(std::abs(report.alpha(m, l) - eq.alpha(m, l)) <= 1e-12);
    }
  }
}

TEST_CASE("solve is deterministic and the report is self-consistent") {
  TimeGrid g(1.0, 16);
  const InitialStates x = InitialStates::evenly_spaced(0.0, 1.0, 5);
  const CostModel cm(1.0, Potential::quadratic(3.0, 0.1), Potential::quadratic(2.0, 0.7));
  const SupplyVector supply = generate_supply(SupplySpec::sinusoid(0.5, 6.0), g);

  SolverConfig cfg;
  cfg.iterations = 400;
  cfg.seed = 2024;
  const SolveReport a = pdhg_solve(cm, x, supply, g, cfg);
  const SolveReport b = pdhg_solve(cm, x, supply, g, cfg);

  CHECK(a.omega == b.omega);                  // bitwise
  CHECK(a.alpha.data() == b.alpha.data());    // bitwise
  CHECK(a.states.data() == b.states.data());  // bitwise
  CHECK(a.objective_trace == b.objective_trace);
  CHECK(a.seed_echo == 2024);
  CHECK(a.iterations_run == 400);
  CHECK(a.objective_trace.size() == 400);

  // stored diagnostics match recomputation from the stored matrices
  CHECK(a.clearing_residual_sup == clearing_residual(a.alpha, supply).sup);
  const StateMatrix z = rollout(a.alpha, x, g);
  CHECK(z.data() == a.states.data());
}

TEST_CASE("backends give interchangeable solves") {
  TimeGrid g(1.0, 20);
  const InitialStates x = InitialStates::evenly_spaced(0.0, 1.0, 4);
  const CostModel cm(1.0, Potential::quadratic(2.0, 0.0), Potential::quadratic(5.0, 0.3));
  const SupplyVector supply = generate_supply(SupplySpec::sinusoid(1.0, 10.0), g);

  SolverConfig cfg;
  cfg.iterations = 600;
  cfg.seed = 9;
  cfg.trace_stride = 0;
  cfg.backend = GradientBackend::tape();
  const SolveReport tape = pdhg_solve(cm, x, supply, g, cfg);
  cfg.backend = GradientBackend::adjoint();
  const SolveReport adj = pdhg_solve(cm, x, supply, g, cfg);

  for (std::size_t l = 0; l < 20; ++l) {
    CHECK(std::abs(tape.omega[l] - adj.omega[l]) <= 1e-10);
  }
}

TEST_CASE("early stop on the clearing residual") {
  TimeGrid g(1.0, 8);
  const InitialStates x = InitialStates::evenly_spaced(0.0, 1.0, 3);
  const CostModel cm(1.0, Potential::zero(), Potential::quadratic(4.0, 0.5));
  const SupplyVector supply(8, 0.0);

  SolverConfig cfg;
  cfg.iterations = 100000;
  cfg.clearing_tol = 1e-7;
  cfg.seed = 5;
  cfg.trace_stride = 0;
  const SolveReport report = pdhg_solve(cm, x, supply, g, cfg);
  CHECK(report.iterations_run < 100000);
  CHECK(report.clearing_residual_sup <= 1e-7);
}

TEST_CASE("divergence reports the iteration index") {
  TimeGrid g(1.0, 4);
  const InitialStates x = InitialStates::explicit_samples({0.0});
  // Huge steps on a stiff double-well blow up quickly.
  const CostModel cm(1.0, Potential::double_well(500.0, -1.0, 1.0), Potential::zero());
  const SupplyVector supply(4, 0.0);
  SolverConfig cfg;
  cfg.iterations = 500;
  cfg.tau_alpha = 50.0;
  cfg.tau_omega = 50.0;
  cfg.seed = 1;
  try {
    pdhg_solve(cm, x, supply, g, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Diverged);
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("price functional: zero problem") {
  TimeGrid g(1.0, 8);
  const InitialStates x = InitialStates::explicit_samples({0.3});
  const CostModel cm(1.0, Potential::zero(), Potential::zero());
  const PriceVector omega(8, 0.0);
  const SupplyVector supply(8, 0.0);
  const double value = evaluate_price_functional(omega, cm, x, supply, g, InnerSolveConfig{});
  CHECK(value == 0.0);
}

TEST_CASE("price functional matches the analytic agent cost") {
  // omega = 0, Q = 0, V = 0, g = 10/2 z^2, one agent at x = 1: the optimal
  // control is constant and the discrete optimum equals the continuous one,
  // phi = r2 c0 x^2 / (2 (c0 + r2 T)) = 5/11. I = -phi.
  TimeGrid g(1.0, 64);
  const InitialStates x = InitialStates::explicit_samples({1.0});
  const CostModel cm(1.0, Potential::zero(), Potential::quadratic(10.0, 0.0));
  const PriceVector omega(64, 0.0);
  const SupplyVector supply(64, 0.0);
  InnerSolveConfig inner;
  inner.tolerance = 1e-10;
  const double value = evaluate_price_functional(omega, cm, x, supply, g, inner);
  CHECK(value == doctest::Approx(-5.0 / 11.0).epsilon(1e-7));

  // cross-check by pricing the analytic trajectory's controls through the
  // objective evaluator
  LQParams p;
  p.c0 = 1.0;
  p.r2 = 10.0;
  const LQConstants consts = lq_constants(p, x, omega, g);
  const std::vector<double> z = analytic_trajectory(p, consts, omega, 1.0, g);
  ControlMatrix alpha(1, 64);
  for (std::size_t l = 0; l < 64; ++l) alpha(0, l) = (z[l + 1] - z[l]) / g.dt();
  const double cost = agent_cost(alpha.row(0), 1.0, omega, cm, g);
  CHECK(cost == doctest::Approx(5.0 / 11.0).epsilon(1e-9));
}

TEST_CASE("price functional is midpoint convex") {
  // 20 random price pairs on M=4, N=16 quadratic instances; the inner solve
  // reaches sup-norm 1e-8, the 1e-6 slack absorbs that inexactness.
  std::mt19937_64 rng(899);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  TimeGrid g(1.0, 16);
  const InitialStates x = InitialStates::evenly_spaced(0.0, 1.0, 4);
  InnerSolveConfig inner;
  inner.tolerance = 1e-8;

  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> weight(0.1, 12.0);
    const CostModel cm(1.0, Potential::quadratic(weight(rng), unit(rng)),
                       Potential::quadratic(weight(rng), unit(rng)));
    SupplyVector supply(16);
    for (double& q : supply) q = unit(rng);
    PriceVector w1(16), w2(16), mid(16);
    for (std::size_t l = 0; l < 16; ++l) {
      w1[l] = unit(rng);
      w2[l] = unit(rng);
      mid[l] = 0.5 * (w1[l] + w2[l]);
    }
    const double i1 = evaluate_price_functional(w1, cm, x, supply, g, inner);
    const double i2 = evaluate_price_functional(w2, cm, x, supply, g, inner);
    const double im = evaluate_price_functional(mid, cm, x, supply, g, inner);
    CHECK(im <= 0.5 * (i1 + i2) + 1e-6);
  }
}

TEST_CASE("price functional reports an exhausted inner budget") {
  TimeGrid g(1.0, 16);
  const InitialStates x = InitialStates::explicit_samples({1.0});
  const CostModel cm(1.0, Potential::zero(), Potential::quadratic(10.0, 0.0));
  const PriceVector omega(16, 0.5);
  const SupplyVector supply(16, 0.0);
  InnerSolveConfig inner;
  inner.max_iterations = 3;
  inner.tolerance = 1e-12;
  try {
    evaluate_price_functional(omega, cm, x, supply, g, inner);
    FAIL("expected budget exhaustion");
  } catch (const InnerSolveError& e) {
    CHECK(std::isfinite(e.best_value()));
    CHECK(e.achieved_grad_norm() > 1e-12);
  }
}
