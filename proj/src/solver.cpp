#include "mfgp/solver.hpp"

#include <cmath>

#include "mfgp/supply.hpp"

namespace mfgp {

void SolverConfig::validate() const {
  if (!(tau_alpha > 0.0) || !(tau_omega > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "step sizes tau_alpha and tau_omega must be positive");
  }
  if (iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "iteration count must be at least 1");
  }
  if (!(sigma >= 0.0) || !(clearing_tol >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma and clearing_tol must be non-negative");
  }
  if (init == Init::Explicit && (!initial_alpha.has_value() || !initial_omega.has_value())) {
    throw Error(ErrorCode::InvalidArgument, "explicit init requires initial_alpha and initial_omega");
  }
}

ClearingResidual clearing_residual(const ControlMatrix& alpha, const SupplyVector& supply) {
  if (alpha.cols() != supply.size() || alpha.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "control matrix has " + std::to_string(alpha.cols()) +
                    " columns, supply has " + std::to_string(supply.size()));
  }
  const std::size_t m_count = alpha.rows();
  const std::size_t n = alpha.cols();
  ClearingResidual res;
  res.per_step.assign(n, 0.0);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double* row = alpha.row(m);
    for (std::size_t l = 0; l < n; ++l) res.per_step[l] += row[l];
  }
  const double inv_m = 1.0 / static_cast<double>(m_count);
  for (std::size_t l = 0; l < n; ++l) {
    res.per_step[l] = res.per_step[l] * inv_m - supply[l];
    res.sup = std::max(res.sup, std::abs(res.per_step[l]));
  }
  return res;
}

SolveReport pdhg_solve(const CostModel& cm, const InitialStates& x, const SupplyVector& supply,
                       const TimeGrid& grid, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t m_count = x.count();
  const std::size_t n = grid.steps();
  if (supply.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "supply has " + std::to_string(supply.size()) + " entries, grid expects " +
                    std::to_string(n));
  }
  require_finite(supply, "supply");

  ControlMatrix alpha(m_count, n);
  PriceVector omega(n, 0.0);
  switch (cfg.init) {
    case SolverConfig::Init::SeededNormal: {
      // Fill order is part of the reproducibility contract: alpha row-major,
      // then omega.
      NormalSampler normals(cfg.seed);
      for (double& a : alpha.data()) a = normals.next();
      for (double& w : omega) w = normals.next();
      break;
    }
    case SolverConfig::Init::Zeros:
      break;
    case SolverConfig::Init::Explicit:
      alpha = *cfg.initial_alpha;
      omega = *cfg.initial_omega;
      if (alpha.rows() != m_count || alpha.cols() != n || omega.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "explicit initial iterates disagree with M or N");
      }
      require_finite(alpha, "initial controls");
      require_finite(omega, "initial price");
      break;
  }

  SolveReport report;
  report.config_echo = cfg;
  report.seed_echo = cfg.seed;
  if (cfg.trace_stride > 0) {
    report.objective_trace.reserve(cfg.iterations / cfg.trace_stride + 1);
  }

  const double ascent_scale =
      cfg.tau_alpha * static_cast<double>(m_count) * static_cast<double>(n) / grid.horizon();
  const double dual_damp = 1.0 / (1.0 + cfg.tau_omega * cfg.sigma);
  const double inv_m = 1.0 / static_cast<double>(m_count);
  std::vector<double> mean_bar(n);
  ObjectiveValue value;

  std::size_t iterations_run = 0;
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    const bool record = cfg.trace_stride > 0 && k % cfg.trace_stride == 0;
    ControlMatrix grad = grad_alpha_with_value(cfg.backend, omega, alpha, supply, cm, x, grid,
                                               record ? &value : nullptr);
    if (record) report.objective_trace.push_back(value.total);

    // alpha^{k+1} = alpha^k + (tau_alpha*M*N/T) * grad; bar = 2*new - old.
    // mean_bar accumulates agents in index order so reruns are bitwise equal.
    std::fill(mean_bar.begin(), mean_bar.end(), 0.0);
    for (std::size_t m = 0; m < m_count; ++m) {
      double* a = alpha.row(m);
      const double* g = grad.row(m);
      for (std::size_t l = 0; l < n; ++l) {
        const double next = a[l] + ascent_scale * g[l];
        mean_bar[l] += 2.0 * next - a[l];
        a[l] = next;
      }
    }
    for (std::size_t l = 0; l < n; ++l) {
      omega[l] = (omega[l] + cfg.tau_omega * (mean_bar[l] * inv_m - supply[l])) * dual_damp;
    }
    iterations_run = k + 1;

    for (double w : omega) {
      if (!std::isfinite(w)) {
        throw Error(ErrorCode::Diverged,
                    "solver diverged at iteration " + std::to_string(k) + ": non-finite price");
      }
    }
    for (double a : alpha.data()) {
      if (!std::isfinite(a)) {
        throw Error(ErrorCode::Diverged,
                    "solver diverged at iteration " + std::to_string(k) + ": non-finite control");
      }
    }

    if (cfg.clearing_tol > 0.0) {
      if (clearing_residual(alpha, supply).sup <= cfg.clearing_tol) break;
    }
  }

  report.omega = std::move(omega);
  report.states = rollout(alpha, x, grid);
  report.clearing_residual_sup = clearing_residual(alpha, supply).sup;
  report.alpha = std::move(alpha);
  report.iterations_run = iterations_run;
  return report;
}

double evaluate_price_functional(const PriceVector& omega, const CostModel& cm,
                                 const InitialStates& x, const SupplyVector& supply,
                                 const TimeGrid& grid, const InnerSolveConfig& inner) {
  const std::size_t n = grid.steps();
  if (omega.size() != n || supply.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "price/supply vectors must have " + std::to_string(n) + " entries");
  }
  if (inner.max_iterations < 1 || !(inner.tolerance > 0.0) || !(inner.initial_step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "inner solve needs a positive budget, tolerance and step");
  }

  const std::size_t m_count = x.count();
  std::vector<double> row(n, 0.0);
  std::vector<double> grad(n), trial(n);
  double phi_sum = 0.0;

  for (std::size_t m = 0; m < m_count; ++m) {
    std::fill(row.begin(), row.end(), 0.0);
    double step = inner.initial_step;
    double cost = adjoint_agent_cost_grad(row.data(), x.sample(m), omega, cm, grid, grad.data());
    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));

    std::size_t used = 1;
    while (gnorm > inner.tolerance) {
      if (used >= inner.max_iterations) {
        throw InnerSolveError("inner solve for agent " + std::to_string(m) + " stopped at gradient norm " +
                                  std::to_string(gnorm) + " after " + std::to_string(used) +
                                  " evaluations",
                              cost, gnorm);
      }
      for (std::size_t l = 0; l < n; ++l) trial[l] = row[l] - step * grad[l];
      const double trial_cost = agent_cost(trial.data(), x.sample(m), omega, cm, grid);
      ++used;
      if (trial_cost <= cost) {
        row.swap(trial);
        cost = adjoint_agent_cost_grad(row.data(), x.sample(m), omega, cm, grid, grad.data());
        ++used;
        gnorm = 0.0;
        for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
        step *= 1.2;
      } else {
        step *= 0.5;
        if (step < 1e-300) {
          throw InnerSolveError("inner solve for agent " + std::to_string(m) + " stalled", cost, gnorm);
        }
      }
    }
    phi_sum += cost;
  }

  double supply_sum = 0.0;
  for (std::size_t l = 0; l < n; ++l) supply_sum += omega[l] * supply[l];
  return grid.dt() * supply_sum - phi_sum / static_cast<double>(m_count);
}

}  // namespace mfgp
