#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfgp/grad.hpp"
#include "oracles.hpp"

using namespace mfgp;

namespace {

struct Instance {
  oracles::RandomInstance data;
  InitialStates x;
  Instance(std::mt19937_64& rng, bool quadratic_only = false)
      : data(oracles::random_instance(rng, 5, 32, quadratic_only)),
        x(InitialStates::explicit_samples(data.x)) {}
};

}  // namespace

TEST_CASE("tape operations differentiate correctly") {
  Tape t;
  const Tape::Ref a = t.leaf(2.0);
  const Tape::Ref b = t.leaf(3.0);
  const Tape::Ref s = t.add(a, b);
  const Tape::Ref d = t.sub(s, a);           // = b
  const Tape::Ref p = t.mul(d, s);           // b*(a+b)
  const Tape::Ref q = t.square(p);           // (b(a+b))^2
  const Tape::Ref f = t.affine(q, 0.5, 1.0); // 0.5 q + 1
  CHECK(t.value(f) == doctest::Approx(0.5 * 225.0 + 1.0));
  t.backward(f);
  // d f / d a = q'(p) * dp/da * 0.5 = 0.5 * 2p * b = 45
  CHECK(t.adjoint(a) == doctest::Approx(45.0));
  // d f / d b = 0.5 * 2p * (a + 2b) = 15 * 8 = 120
  CHECK(t.adjoint(b) == doctest::Approx(120.0));
}

TEST_CASE("tape reductions and potential nodes") {
  Tape t;
  const Tape::Ref x0 = t.leaf(1.0);
  t.leaf(2.0);
  t.leaf(3.0);
  const Tape::Ref s = t.sum(x0, 1, 3);
  CHECK(t.value(s) == 6.0);
  const Tape::Ref m = t.mean(x0, 1, 3);
  CHECK(t.value(m) == 2.0);
  const Tape::Ref pot = t.potential(m, Potential::quadratic(4.0, 1.0));
  CHECK(t.value(pot) == doctest::Approx(2.0));
  const Tape::Ref out = t.add(s, pot);
  t.backward(out);
  // d out/d x0 = 1 (sum) + V'(mean)*1/3 = 1 + 4*(2-1)/3
  CHECK(t.adjoint(x0) == doctest::Approx(1.0 + 4.0 / 3.0));

  const Tape::Ref az = t.add_scaled(x0, m, 0.25);
  CHECK(t.value(az) == doctest::Approx(1.5));
}

TEST_CASE("gradient collapses to the closed form on a one-step problem") {
  // V=0, g=0, M=N=T=1, c0=1, alpha=2, omega=3 -> gradient -5
  TimeGrid g(1.0, 1);
  const InitialStates x = InitialStates::explicit_samples({0.0});
  const CostModel cm(1.0, Potential::zero(), Potential::zero());
  ControlMatrix alpha(1, 1, 2.0);
  const PriceVector omega{3.0};
  const SupplyVector supply{0.0};

  for (auto backend : {GradientBackend::tape(), GradientBackend::adjoint(),
                       GradientBackend::finite_difference(1e-6)}) {
    const ControlMatrix grad = grad_alpha(backend, omega, alpha, supply, cm, x, g);
    CHECK(grad(0, 0) == doctest::Approx(-5.0).epsilon(1e-9));
  }
}

TEST_CASE("zero problem has zero gradient") {
  TimeGrid g(1.0, 6);
  const InitialStates x = InitialStates::explicit_samples({0.2, 0.8});
  const CostModel cm(1.0, Potential::zero(), Potential::zero());
  ControlMatrix alpha(2, 6, 0.0);
  const PriceVector omega(6, 0.0);
  const SupplyVector supply(6, 0.0);
  for (auto backend : {GradientBackend::tape(), GradientBackend::adjoint()}) {
    const ControlMatrix grad = grad_alpha(backend, omega, alpha, supply, cm, x, g);
    for (double v : grad.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("affine case: gradient is exactly -(T/(MN)) (c0 alpha + omega)") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  TimeGrid g(1.3, 7);
  const std::size_t m_count = 3;
  const InitialStates x = InitialStates::explicit_samples({-0.5, 0.1, 0.9});
  const CostModel cm(1.7, Potential::zero(), Potential::zero());
  ControlMatrix alpha(m_count, 7);
  PriceVector omega(7);
  for (double& v : alpha.data()) v = unit(rng);
  for (double& v : omega) v = unit(rng);
  const SupplyVector supply(7, 0.0);

  const ControlMatrix adj = grad_alpha(GradientBackend::adjoint(), omega, alpha, supply, cm, x, g);
  const ControlMatrix tape = grad_alpha(GradientBackend::tape(), omega, alpha, supply, cm, x, g);
  const ControlMatrix adj2 = grad_alpha(GradientBackend::adjoint(), omega, alpha, supply, cm, x, g);
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t l = 0; l < 7; ++l) {
      const double expected =
          -(g.dt() * (cm.c0 * alpha(m, l) + omega[l])) / static_cast<double>(m_count);
      CHECK(adj(m, l) == expected);           // bitwise, same association
      CHECK(adj2(m, l) == adj(m, l));         // reproducible
      CHECK(tape(m, l) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("backends agree on random instances") {
  std::mt19937_64 rng(424242);
  for (int i = 0; i < 100; ++i) {
    const Instance inst(rng);
    const ControlMatrix tape = grad_alpha(GradientBackend::tape(), inst.data.omega,
                                          inst.data.alpha, inst.data.supply, inst.data.cost,
                                          inst.x, inst.data.grid);
    const ControlMatrix adj = grad_alpha(GradientBackend::adjoint(), inst.data.omega,
                                         inst.data.alpha, inst.data.supply, inst.data.cost,
                                         inst.x, inst.data.grid);
    for (std::size_t j = 0; j < tape.data().size(); ++j) {
      const double a = tape.data()[j];
      const double b = adj.data()[j];
      CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)));
    }
  }
}

TEST_CASE("tape agrees with the independent finite-difference oracle") {
  std::mt19937_64 rng(777);
  for (int i = 0; i < 25; ++i) {
    const Instance inst(rng);
    const ControlMatrix tape = grad_alpha(GradientBackend::tape(), inst.data.omega,
                                          inst.data.alpha, inst.data.supply, inst.data.cost,
                                          inst.x, inst.data.grid);
    const Matrix fd =
        oracles::fd_gradient(inst.data.omega, inst.data.alpha, inst.data.supply, inst.data.cost,
                             inst.data.x, inst.data.grid.horizon());
    for (std::size_t j = 0; j < tape.data().size(); ++j) {
      const double a = tape.data()[j];
      const double b = fd.data()[j];
      CHECK(std::abs(a - b) <= 1e-5 * std::max(std::abs(a), std::abs(b)) + 1e-12);
    }
  }
}

TEST_CASE("one small ascent step does not decrease the objective") {
  std::mt19937_64 rng(1618);
  for (int i = 0; i < 20; ++i) {
    const Instance inst(rng, /*quadratic_only=*/true);
    const ControlMatrix grad = grad_alpha(GradientBackend::adjoint(), inst.data.omega,
                                          inst.data.alpha, inst.data.supply, inst.data.cost,
                                          inst.x, inst.data.grid);
    ControlMatrix stepped = inst.data.alpha;
    for (std::size_t j = 0; j < stepped.data().size(); ++j) {
      stepped.data()[j] += 1e-4 * grad.data()[j];
    }
    const double before = lagrangian(inst.data.omega, inst.data.alpha, inst.data.supply,
                                     inst.data.cost, inst.x, inst.data.grid)
                              .total;
    const double after = lagrangian(inst.data.omega, stepped, inst.data.supply, inst.data.cost,
                                    inst.x, inst.data.grid)
                             .total;
    CHECK(after >= before - 1e-10);
  }
}

TEST_CASE("finite-difference backend rejects a vanishing step") {
  CHECK_THROWS_AS(GradientBackend::finite_difference(0.0), Error);
  CHECK_THROWS_AS(GradientBackend::finite_difference(-1.0), Error);

  TimeGrid g(1.0, 2);
  const InitialStates x = InitialStates::explicit_samples({0.0});
  const CostModel cm(1.0, Potential::zero(), Potential::zero());
  ControlMatrix alpha(1, 2, 1.0);
  const PriceVector omega(2, 0.0);
  const SupplyVector supply(2, 0.0);
  const GradientBackend underflow{GradientBackend::Kind::FiniteDifference, 1e-320};
  CHECK_THROWS_AS(grad_alpha(underflow, omega, alpha, supply, cm, x, g), Error);
}

TEST_CASE("non-finite inputs are rejected") {
  TimeGrid g(1.0, 2);
  const InitialStates x = InitialStates::explicit_samples({0.0});
  const CostModel cm(1.0, Potential::zero(), Potential::zero());
  ControlMatrix alpha(1, 2, 0.0);
  alpha(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const PriceVector omega(2, 0.0);
  const SupplyVector supply(2, 0.0);
  CHECK_THROWS_AS(grad_alpha(GradientBackend::adjoint(), omega, alpha, supply, cm, x, g), Error);
}

TEST_CASE("per-agent cost gradients match between tape and adjoint") {
  std::mt19937_64 rng(808);
  for (int i = 0; i < 20; ++i) {
    const Instance inst(rng);
    const std::size_t n = inst.data.grid.steps();
    std::vector<double> ga(n), gt(n);
    Tape scratch;
    for (std::size_t m = 0; m < inst.data.alpha.rows(); ++m) {
      const double ca = adjoint_agent_cost_grad(inst.data.alpha.row(m), inst.data.x[m],
                                                inst.data.omega, inst.data.cost, inst.data.grid,
                                                ga.data());
      const double ct = tape_agent_cost_grad(scratch, inst.data.alpha.row(m), inst.data.x[m],
                                             inst.data.omega, inst.data.cost, inst.data.grid,
                                             gt.data());
      CHECK(ca == doctest::Approx(ct).epsilon(1e-13));
      for (std::size_t l = 0; l < n; ++l) {
        CHECK(std::abs(ga[l] - gt[l]) <= 1e-12 * (1.0 + std::abs(ga[l])));
      }
    }
  }
}
