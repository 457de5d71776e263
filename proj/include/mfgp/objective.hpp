#pragma once

#include "mfgp/core.hpp"

namespace mfgp {

/// Value of the discretized saddle objective together with its pieces.
/// total = supply_term - mean(per_agent_cost).
struct ObjectiveValue {
  double total = 0.0;
  double supply_term = 0.0;
  std::vector<double> per_agent_cost;
};

/// Forward Euler: z[m][0] = x_m, z[m][l+1] = z[m][l] + dt * alpha[m][l].
StateMatrix rollout(const ControlMatrix& alpha, const InitialStates& x, const TimeGrid& grid);

/// Cost of one agent's control row:
///   (T/N) * sum_{l<N} [ c0*a^2/2 + V(z_l) + a*omega_l ] + g(z_N),
/// with V evaluated at the left endpoints only; z_N enters through g alone.
double agent_cost(const double* alpha_row, double x0, const PriceVector& omega,
                  const CostModel& cm, const TimeGrid& grid);

ObjectiveValue lagrangian(const PriceVector& omega, const ControlMatrix& alpha,
                          const SupplyVector& supply, const CostModel& cm,
                          const InitialStates& x, const TimeGrid& grid);

}  // namespace mfgp
