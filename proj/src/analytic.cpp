#include "mfgp/analytic.hpp"

#include <cmath>

namespace mfgp {

namespace {

constexpr double kMaxKT = 20.0;

void check_kt(double k, const TimeGrid& grid) {
  if (k * grid.horizon() > kMaxKT) {
    throw Error(ErrorCode::Unsupported,
                "k*T = " + std::to_string(k * grid.horizon()) +
                    " exceeds the supported range (20); cosh/sinh terms would overflow");
  }
}

}  // namespace

LQParams LQParams::from_cost_model(const CostModel& cm) {
  if (!cm.is_linear_quadratic()) {
    throw Error(ErrorCode::Unsupported, "cost model is not linear-quadratic");
  }
  LQParams p;
  p.c0 = cm.c0;
  if (cm.running.kind() == Potential::Kind::Quadratic) {
    p.r1 = cm.running.weight();
    p.y1 = cm.running.center();
  }
  if (cm.terminal.kind() == Potential::Kind::Quadratic) {
    p.r2 = cm.terminal.weight();
    p.y2 = cm.terminal.center();
  }
  p.validate();
  return p;
}

CostModel LQParams::to_cost_model() const {
  validate();
  const Potential running = r1 > 0.0 ? Potential::quadratic(r1, y1) : Potential::zero();
  const Potential terminal = r2 > 0.0 ? Potential::quadratic(r2, y2) : Potential::zero();
  return CostModel(c0, running, terminal);
}

void LQParams::validate() const {
  if (!(c0 > 0.0) || !(r1 >= 0.0) || !(r2 >= 0.0) || !std::isfinite(y1) || !std::isfinite(y2)) {
    throw Error(ErrorCode::InvalidArgument, "LQ parameters need c0 > 0 and r1, r2 >= 0");
  }
}

PriceVector analytic_price(const LQParams& p, const InitialStates& x, const SupplyVector& supply,
                           const TimeGrid& grid) {
  p.validate();
  const std::size_t n = grid.steps();
  if (supply.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "supply has " + std::to_string(supply.size()) + " entries, grid expects " +
                    std::to_string(n));
  }
  const double t_end = grid.horizon();
  const double dt = grid.dt();
  const double xbar = x.mean();

  // max(s, t_l) splits the quadrature into prefix and suffix sums.
  std::vector<double> prefix_q(n), suffix_tq(n + 1, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += supply[i];
    prefix_q[i] = acc;
  }
  for (std::size_t i = n; i-- > 0;) {
    suffix_tq[i] = suffix_tq[i + 1] + grid.node(i) * supply[i];
  }
  const double q_total = prefix_q[n - 1];

  PriceVector omega(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double t = grid.node(l);
    const double quad =
        dt * (-(p.r2 + p.r1 * t_end) * q_total + p.r1 * (t * prefix_q[l] + suffix_tq[l + 1]));
    omega[l] = p.r2 * (p.y2 - xbar) + p.r1 * (t_end - t) * (p.y1 - xbar) - p.c0 * supply[l] + quad;
  }
  return omega;
}

LQConstants lq_constants(const LQParams& p, const InitialStates& x, const PriceVector& omega,
                         const TimeGrid& grid) {
  p.validate();
  const std::size_t n = grid.steps();
  if (omega.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "price has " + std::to_string(omega.size()) + " entries, grid expects " +
                    std::to_string(n));
  }
  LQConstants c;
  c.x_bar0 = x.mean();
  c.k = std::sqrt(p.r1 / p.c0);
  check_kt(c.k, grid);

  const double t_end = grid.horizon();
  const double dt = grid.dt();
  double integral = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tail = t_end - grid.node(i);
    integral += omega[i] * (p.r2 / p.c0 * std::cosh(c.k * tail) + c.k * std::sinh(c.k * tail));
  }
  c.B = p.r2 * (p.y2 - p.y1) + dt * integral;
  return c;
}

std::vector<double> analytic_trajectory(const LQParams& p, const LQConstants& consts,
                                        const PriceVector& omega, double x0,
                                        const TimeGrid& grid) {
  p.validate();
  const std::size_t n = grid.steps();
  if (omega.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "price has " + std::to_string(omega.size()) + " entries, grid expects " +
                    std::to_string(n));
  }
  const double t_end = grid.horizon();
  const double dt = grid.dt();
  const double k = consts.k;
  check_kt(k, grid);

  std::vector<double> z(n + 1);
  if (p.r1 == 0.0) {
    const double slope = (consts.B - p.r2 * (x0 - p.y1)) / (p.c0 + p.r2 * t_end);
    double price_integral = 0.0;  // left partial sums of omega
    z[0] = x0;
    for (std::size_t l = 1; l <= n; ++l) {
      price_integral += dt * omega[l - 1];
      z[l] = x0 + grid.node(l) * slope - price_integral / p.c0;
    }
  } else {
    const double kt_sinh = std::sinh(k * t_end);
    const double kt_cosh = std::cosh(k * t_end);
    const double denom = p.c0 * k * kt_cosh + p.r2 * kt_sinh;
    const double coef =
        (consts.B - (x0 - p.y1) * (p.c0 * k * kt_sinh + p.r2 * kt_cosh)) / denom;
    for (std::size_t l = 0; l <= n; ++l) {
      const double t = grid.node(l);
      // Direct convolution; the cosh addition formula would cancel
      // catastrophically for larger k*t.
      double conv = 0.0;
      for (std::size_t i = 0; i < l; ++i) {
        conv += omega[i] * std::cosh(k * (t - grid.node(i)));
      }
      z[l] = p.y1 + (x0 - p.y1) * std::cosh(k * t) + coef * std::sinh(k * t) -
             dt * conv / p.c0;
    }
  }
  return z;
}

}  // namespace mfgp
