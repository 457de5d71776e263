#include "mfgp/objective.hpp"

#include <cmath>

namespace mfgp {

namespace {

void check_dims(const ControlMatrix& alpha, const InitialStates& x, const TimeGrid& grid) {
  if (alpha.rows() != x.count() || alpha.cols() != grid.steps()) {
    throw Error(ErrorCode::DimensionMismatch,
                "control matrix is " + std::to_string(alpha.rows()) + "x" +
                    std::to_string(alpha.cols()) + ", expected " + std::to_string(x.count()) +
                    "x" + std::to_string(grid.steps()));
  }
}

}  // namespace

StateMatrix rollout(const ControlMatrix& alpha, const InitialStates& x, const TimeGrid& grid) {
  check_dims(alpha, x, grid);
  const std::size_t m_count = alpha.rows();
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  StateMatrix z(m_count, n + 1);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double* a = alpha.row(m);
    double* zr = z.row(m);
    zr[0] = x.sample(m);
    for (std::size_t l = 0; l < n; ++l) {
      zr[l + 1] = zr[l] + dt * a[l];
    }
  }
  return z;
}

double agent_cost(const double* alpha_row, double x0, const PriceVector& omega,
                  const CostModel& cm, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  double z = x0;
  double running = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    const double a = alpha_row[l];
    running += 0.5 * cm.c0 * a * a + cm.running.eval(z) + a * omega[l];
    z += dt * a;
  }
  return dt * running + cm.terminal.eval(z);
}

ObjectiveValue lagrangian(const PriceVector& omega, const ControlMatrix& alpha,
                          const SupplyVector& supply, const CostModel& cm,
                          const InitialStates& x, const TimeGrid& grid) {
  check_dims(alpha, x, grid);
  const std::size_t n = grid.steps();
  if (omega.size() != n || supply.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "price/supply vectors must have " + std::to_string(n) + " entries");
  }

  ObjectiveValue out;
  const double dt = grid.dt();
  double supply_sum = 0.0;
  for (std::size_t l = 0; l < n; ++l) supply_sum += omega[l] * supply[l];
  out.supply_term = dt * supply_sum;

  const std::size_t m_count = alpha.rows();
  out.per_agent_cost.resize(m_count);
  double cost_sum = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double cost = agent_cost(alpha.row(m), x.sample(m), omega, cm, grid);
    if (!std::isfinite(cost)) {
      throw Error(ErrorCode::NonFiniteValue,
                  "non-finite cost for agent " + std::to_string(m));
    }
    out.per_agent_cost[m] = cost;
    cost_sum += cost;
  }
  out.total = out.supply_term - cost_sum / static_cast<double>(m_count);
  if (!std::isfinite(out.total)) {
    throw Error(ErrorCode::NonFiniteValue, "non-finite objective value");
  }
  return out;
}

}  // namespace mfgp
