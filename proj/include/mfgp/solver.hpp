#pragma once

#include <cstdint>
#include <optional>

#include "mfgp/core.hpp"
#include "mfgp/grad.hpp"
#include "mfgp/objective.hpp"

namespace mfgp {

struct SolverConfig {
  enum class Init { SeededNormal, Zeros, Explicit };

  double tau_alpha = 0.05;
  double tau_omega = 0.5;
  std::size_t iterations = 10000;
  double sigma = 0.0;         // optional Tikhonov damping of the dual step
  double clearing_tol = 0.0;  // > 0 enables residual-based early stop
  Init init = Init::SeededNormal;
  std::uint64_t seed = 0;
  std::size_t trace_stride = 1;  // 0 disables the objective trace
  GradientBackend backend = GradientBackend::adjoint();

  // Used when init == Init::Explicit.
  std::optional<ControlMatrix> initial_alpha;
  std::optional<PriceVector> initial_omega;

  void validate() const;
};

struct ClearingResidual {
  std::vector<double> per_step;  // (1/M) sum_m alpha[m][l] - Q[l]
  double sup = 0.0;
};

struct SolveReport {
  PriceVector omega;
  ControlMatrix alpha;
  StateMatrix states;
  double clearing_residual_sup = 0.0;
  std::vector<double> objective_trace;  // objective at the start of each recorded iteration
  std::size_t iterations_run = 0;
  SolverConfig config_echo;
  std::uint64_t seed_echo = 0;
};

ClearingResidual clearing_residual(const ControlMatrix& alpha, const SupplyVector& supply);

/// Modified PDHG: gradient ascent in alpha (scaled by tau_alpha*M*N/T),
/// extrapolation, closed-form proximal step in omega. Throws Diverged with
/// the iteration index if an iterate goes non-finite.
SolveReport pdhg_solve(const CostModel& cm, const InitialStates& x, const SupplyVector& supply,
                       const TimeGrid& grid, const SolverConfig& cfg);

struct InnerSolveConfig {
  std::size_t max_iterations = 20000;
  double tolerance = 1e-8;  // sup-norm of the per-agent cost gradient
  double initial_step = 1.0;
};

/// Thrown when an agent's inner minimization exhausts its budget; carries the
/// best value seen and the gradient norm actually reached.
class InnerSolveError : public Error {
 public:
  InnerSolveError(const std::string& what, double best_value, double achieved_grad_norm)
      : Error(ErrorCode::NoConvergence, what),
        best_value_(best_value),
        achieved_grad_norm_(achieved_grad_norm) {}
  double best_value() const { return best_value_; }
  double achieved_grad_norm() const { return achieved_grad_norm_; }

 private:
  double best_value_;
  double achieved_grad_norm_;
};

/// I[omega] = (T/N) sum_l omega[l] Q[l] - (1/M) sum_m phi_omega(x_m), with each
/// phi obtained by minimizing the agent's discretized cost over its control row
/// (gradient descent with the adjoint backend, backtracking on increase).
double evaluate_price_functional(const PriceVector& omega, const CostModel& cm,
                                 const InitialStates& x, const SupplyVector& supply,
                                 const TimeGrid& grid, const InnerSolveConfig& inner);

}  // namespace mfgp
