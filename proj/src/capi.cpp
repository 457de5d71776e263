#include "mfgprice.h"

#include <cstring>
#include <memory>
#include <string>

#include "mfgp/analytic.hpp"
#include "mfgp/core.hpp"
#include "mfgp/grad.hpp"
#include "mfgp/objective.hpp"
#include "mfgp/solver.hpp"
#include "mfgp/supply.hpp"

namespace {

thread_local std::string g_last_error;

mfgp_status map_code(mfgp::ErrorCode code) {
  switch (code) {
    case mfgp::ErrorCode::InvalidArgument:
      return MFGP_ERR_INVALID_ARGUMENT;
    case mfgp::ErrorCode::DimensionMismatch:
      return MFGP_ERR_DIMENSION_MISMATCH;
    case mfgp::ErrorCode::NonFiniteValue:
      return MFGP_ERR_NONFINITE;
    case mfgp::ErrorCode::IoError:
      return MFGP_ERR_IO;
    case mfgp::ErrorCode::Diverged:
      return MFGP_ERR_DIVERGED;
    case mfgp::ErrorCode::NoConvergence:
      return MFGP_ERR_NO_CONVERGENCE;
    case mfgp::ErrorCode::Unsupported:
      return MFGP_ERR_UNSUPPORTED;
  }
  return MFGP_ERR_INTERNAL;
}

template <typename Fn>
mfgp_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MFGP_OK;
  } catch (const mfgp::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MFGP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MFGP_ERR_INTERNAL;
  }
}

mfgp_status copy_out(const std::vector<double>& src, double* out, size_t count,
                     const char* what) {
  if (out == nullptr || count != src.size()) {
    g_last_error = std::string(what) + ": output buffer must hold exactly " +
                   std::to_string(src.size()) + " values";
    return MFGP_ERR_DIMENSION_MISMATCH;
  }
  std::memcpy(out, src.data(), src.size() * sizeof(double));
  return MFGP_OK;
}

}  // namespace

struct mfgp_problem {
  mfgp::TimeGrid grid;
  mfgp::CostModel cost;
  mfgp::InitialStates agents;
  mfgp::SupplySpec supply_spec;
  mfgp::SupplyVector explicit_supply;
  bool has_explicit_supply = false;

  mfgp::SupplyVector supply() const {
    return has_explicit_supply ? explicit_supply : mfgp::generate_supply(supply_spec, grid);
  }
};

struct mfgp_result {
  mfgp::SolveReport report;
};

extern "C" {

const char* mfgp_version(void) { return MFGP_VERSION; }

const char* mfgp_last_error(void) { return g_last_error.c_str(); }

mfgp_problem* mfgp_problem_new(double horizon, size_t steps, size_t agents) {
  mfgp_problem* p = nullptr;
  const mfgp_status st = guarded([&] {
    p = new mfgp_problem{
        mfgp::TimeGrid(horizon, steps),
        mfgp::CostModel(1.0, mfgp::Potential::zero(), mfgp::Potential::zero()),
        mfgp::InitialStates::evenly_spaced(0.0, 1.0, agents),
        mfgp::SupplySpec::constant(0.0),
        {},
        false,
    };
  });
  return st == MFGP_OK ? p : nullptr;
}

void mfgp_problem_free(mfgp_problem* p) { delete p; }

#define MFGP_REQUIRE_HANDLE(h)                            \
  do {                                                    \
    if ((h) == nullptr) {                                 \
      g_last_error = "null handle";                       \
      return MFGP_ERR_INVALID_ARGUMENT;                   \
    }                                                     \
  } while (0)

mfgp_status mfgp_set_control_weight(mfgp_problem* p, double c0) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] { p->cost = mfgp::CostModel(c0, p->cost.running, p->cost.terminal); });
}

mfgp_status mfgp_set_running_zero(mfgp_problem* p) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->cost = mfgp::CostModel(p->cost.c0, mfgp::Potential::zero(), p->cost.terminal);
  });
}

mfgp_status mfgp_set_running_quadratic(mfgp_problem* p, double weight, double center) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->cost = mfgp::CostModel(p->cost.c0, mfgp::Potential::quadratic(weight, center),
                              p->cost.terminal);
  });
}

mfgp_status mfgp_set_running_double_well(mfgp_problem* p, double weight, double center_a,
                                         double center_b) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->cost = mfgp::CostModel(p->cost.c0,
                              mfgp::Potential::double_well(weight, center_a, center_b),
                              p->cost.terminal);
  });
}

mfgp_status mfgp_set_terminal_zero(mfgp_problem* p) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->cost = mfgp::CostModel(p->cost.c0, p->cost.running, mfgp::Potential::zero());
  });
}

mfgp_status mfgp_set_terminal_quadratic(mfgp_problem* p, double weight, double center) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->cost = mfgp::CostModel(p->cost.c0, p->cost.running,
                              mfgp::Potential::quadratic(weight, center));
  });
}

mfgp_status mfgp_set_terminal_double_well(mfgp_problem* p, double weight, double center_a,
                                          double center_b) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->cost = mfgp::CostModel(p->cost.c0, p->cost.running,
                              mfgp::Potential::double_well(weight, center_a, center_b));
  });
}

mfgp_status mfgp_set_agents_evenly_spaced(mfgp_problem* p, double a, double b) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->agents = mfgp::InitialStates::evenly_spaced(a, b, p->agents.count());
  });
}

mfgp_status mfgp_set_agents(mfgp_problem* p, const double* x, size_t count) {
  MFGP_REQUIRE_HANDLE(p);
  if (x == nullptr) {
    g_last_error = "null agent array";
    return MFGP_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    p->agents = mfgp::InitialStates::explicit_samples(std::vector<double>(x, x + count));
  });
}

mfgp_status mfgp_set_agents_from_file(mfgp_problem* p, const char* path) {
  MFGP_REQUIRE_HANDLE(p);
  MFGP_REQUIRE_HANDLE(path);
  return guarded([&] {
    p->agents = mfgp::InitialStates::from_file(path, p->agents.count());
  });
}

mfgp_status mfgp_set_supply_sinusoid(mfgp_problem* p, double amplitude,
                                     double angular_frequency) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->supply_spec = mfgp::SupplySpec::sinusoid(amplitude, angular_frequency);
    p->has_explicit_supply = false;
  });
}

mfgp_status mfgp_set_supply_wiener(mfgp_problem* p, uint64_t seed) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->supply_spec = mfgp::SupplySpec::wiener(seed);
    p->has_explicit_supply = false;
  });
}

mfgp_status mfgp_set_supply_constant(mfgp_problem* p, double value) {
  MFGP_REQUIRE_HANDLE(p);
  return guarded([&] {
    p->supply_spec = mfgp::SupplySpec::constant(value);
    p->has_explicit_supply = false;
  });
}

mfgp_status mfgp_set_supply_values(mfgp_problem* p, const double* q, size_t count) {
  MFGP_REQUIRE_HANDLE(p);
  if (q == nullptr) {
    g_last_error = "null supply array";
    return MFGP_ERR_INVALID_ARGUMENT;
  }
  if (count != p->grid.steps()) {
    g_last_error = "supply needs exactly " + std::to_string(p->grid.steps()) + " values, got " +
                   std::to_string(count);
    return MFGP_ERR_DIMENSION_MISMATCH;
  }
  return guarded([&] {
    std::vector<double> values(q, q + count);
    mfgp::require_finite(values, "supply");
    p->explicit_supply = std::move(values);
    p->has_explicit_supply = true;
  });
}

mfgp_status mfgp_set_supply_from_file(mfgp_problem* p, const char* path) {
  MFGP_REQUIRE_HANDLE(p);
  MFGP_REQUIRE_HANDLE(path);
  return guarded([&] {
    mfgp::SupplySpec spec = mfgp::SupplySpec::from_file(path);
    // Validate eagerly so config errors surface at setup time.
    mfgp::generate_supply(spec, p->grid);
    p->supply_spec = std::move(spec);
    p->has_explicit_supply = false;
  });
}

size_t mfgp_problem_steps(const mfgp_problem* p) { return p ? p->grid.steps() : 0; }

size_t mfgp_problem_agents(const mfgp_problem* p) { return p ? p->agents.count() : 0; }

double mfgp_problem_horizon(const mfgp_problem* p) { return p ? p->grid.horizon() : 0.0; }

mfgp_status mfgp_problem_supply(const mfgp_problem* p, double* out, size_t count) {
  MFGP_REQUIRE_HANDLE(p);
  mfgp::SupplyVector q;
  const mfgp_status st = guarded([&] { q = p->supply(); });
  if (st != MFGP_OK) return st;
  return copy_out(q, out, count, "supply");
}

mfgp_status mfgp_problem_initial_states(const mfgp_problem* p, double* out, size_t count) {
  MFGP_REQUIRE_HANDLE(p);
  return copy_out(p->agents.samples(), out, count, "initial states");
}

void mfgp_solve_options_init(mfgp_solve_options* opts) {
  if (opts == nullptr) return;
  opts->tau_alpha = 0.05;
  opts->tau_omega = 0.5;
  opts->sigma = 0.0;
  opts->iterations = 10000;
  opts->clearing_tol = 0.0;
  opts->seed = 0;
  opts->backend = MFGP_BACKEND_ADJOINT;
  opts->fd_step = 1e-6;
  opts->init = MFGP_INIT_SEEDED_NORMAL;
  opts->trace_stride = 1;
}

mfgp_status mfgp_solve(const mfgp_problem* p, const mfgp_solve_options* opts,
                       mfgp_result** out) {
  MFGP_REQUIRE_HANDLE(p);
  MFGP_REQUIRE_HANDLE(opts);
  MFGP_REQUIRE_HANDLE(out);
  *out = nullptr;
  return guarded([&] {
    mfgp::SolverConfig cfg;
    cfg.tau_alpha = opts->tau_alpha;
    cfg.tau_omega = opts->tau_omega;
    cfg.sigma = opts->sigma;
    cfg.iterations = opts->iterations;
    cfg.clearing_tol = opts->clearing_tol;
    cfg.seed = opts->seed;
    cfg.trace_stride = opts->trace_stride;
    switch (opts->backend) {
      case MFGP_BACKEND_TAPE:
        cfg.backend = mfgp::GradientBackend::tape();
        break;
      case MFGP_BACKEND_ADJOINT:
        cfg.backend = mfgp::GradientBackend::adjoint();
        break;
      case MFGP_BACKEND_FINITE_DIFFERENCE:
        cfg.backend = mfgp::GradientBackend::finite_difference(opts->fd_step);
        break;
      default:
        throw mfgp::Error(mfgp::ErrorCode::InvalidArgument, "unknown backend id");
    }
    switch (opts->init) {
      case MFGP_INIT_SEEDED_NORMAL:
        cfg.init = mfgp::SolverConfig::Init::SeededNormal;
        break;
      case MFGP_INIT_ZEROS:
        cfg.init = mfgp::SolverConfig::Init::Zeros;
        break;
      default:
        throw mfgp::Error(mfgp::ErrorCode::InvalidArgument, "unknown init id");
    }
    auto result = std::make_unique<mfgp_result>();
    result->report = mfgp::pdhg_solve(p->cost, p->agents, p->supply(), p->grid, cfg);
    *out = result.release();
  });
}

void mfgp_result_free(mfgp_result* r) { delete r; }

size_t mfgp_result_iterations(const mfgp_result* r) { return r ? r->report.iterations_run : 0; }

double mfgp_result_clearing_residual(const mfgp_result* r) {
  return r ? r->report.clearing_residual_sup : 0.0;
}

mfgp_status mfgp_result_price(const mfgp_result* r, double* out, size_t count) {
  MFGP_REQUIRE_HANDLE(r);
  return copy_out(r->report.omega, out, count, "price");
}

mfgp_status mfgp_result_controls(const mfgp_result* r, double* out, size_t count) {
  MFGP_REQUIRE_HANDLE(r);
  return copy_out(r->report.alpha.data(), out, count, "controls");
}

mfgp_status mfgp_result_states(const mfgp_result* r, double* out, size_t count) {
  MFGP_REQUIRE_HANDLE(r);
  return copy_out(r->report.states.data(), out, count, "states");
}

size_t mfgp_result_trace_length(const mfgp_result* r) {
  return r ? r->report.objective_trace.size() : 0;
}

mfgp_status mfgp_result_trace(const mfgp_result* r, double* out, size_t count) {
  MFGP_REQUIRE_HANDLE(r);
  return copy_out(r->report.objective_trace, out, count, "trace");
}

mfgp_status mfgp_analytic_price(const mfgp_problem* p, double* out, size_t count) {
  MFGP_REQUIRE_HANDLE(p);
  mfgp::PriceVector omega;
  const mfgp_status st = guarded([&] {
    const mfgp::LQParams lq = mfgp::LQParams::from_cost_model(p->cost);
    omega = mfgp::analytic_price(lq, p->agents, p->supply(), p->grid);
  });
  if (st != MFGP_OK) return st;
  return copy_out(omega, out, count, "analytic price");
}

mfgp_status mfgp_analytic_trajectory(const mfgp_problem* p, double x0, double* out,
                                     size_t count) {
  MFGP_REQUIRE_HANDLE(p);
  std::vector<double> z;
  const mfgp_status st = guarded([&] {
    const mfgp::LQParams lq = mfgp::LQParams::from_cost_model(p->cost);
    const mfgp::SupplyVector q = p->supply();
    const mfgp::PriceVector omega = mfgp::analytic_price(lq, p->agents, q, p->grid);
    const mfgp::LQConstants consts = mfgp::lq_constants(lq, p->agents, omega, p->grid);
    z = mfgp::analytic_trajectory(lq, consts, omega, x0, p->grid);
  });
  if (st != MFGP_OK) return st;
  return copy_out(z, out, count, "analytic trajectory");
}

}  // extern "C"
