#pragma once

#include "mfgp/core.hpp"

namespace mfgp {

/// Linear-quadratic cost parameters: running V = (r1/2)(z-y1)^2 and terminal
/// g = (r2/2)(z-y2)^2, with the weight-zero cases standing in for Zero.
struct LQParams {
  double c0 = 1.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;

  static LQParams from_cost_model(const CostModel& cm);
  CostModel to_cost_model() const;
  void validate() const;
};

struct LQConstants {
  double x_bar0 = 0.0;  // empirical mean of the initial samples
  double k = 0.0;       // sqrt(r1/c0)
  double B = 0.0;
};

/// Closed-form equilibrium price on the grid:
///   omega*[l] = r2(y2-x0bar) + r1(T-t_l)(y1-x0bar) - c0 Q[l] + QUAD_l,
/// QUAD_l = integral over [0,T] of [-(r2+r1 T)+r1 max(s,t_l)] Q(s) ds.
/// All appendix integrals use the left-endpoint rectangle rule on the grid so
/// the oracle shares the transcription's own quadrature; against the exact
/// integrals this is first-order in dt.
PriceVector analytic_price(const LQParams& p, const InitialStates& x, const SupplyVector& supply,
                           const TimeGrid& grid);

LQConstants lq_constants(const LQParams& p, const InitialStates& x, const PriceVector& omega,
                         const TimeGrid& grid);

/// Optimal trajectory for one agent, evaluated at all N+1 nodes. Rejects
/// k*T > 20 to keep the cosh/sinh terms far from overflow.
std::vector<double> analytic_trajectory(const LQParams& p, const LQConstants& consts,
                                        const PriceVector& omega, double x0,
                                        const TimeGrid& grid);

}  // namespace mfgp
