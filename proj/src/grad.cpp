#include "mfgp/grad.hpp"

#include <cassert>
#include <cmath>

namespace mfgp {

Tape::Ref Tape::push(Node n) {
  assert(n.op == Op::Leaf || n.op == Op::Constant || n.a < nodes_.size());
  nodes_.push_back(n);
  return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::leaf(double value) {
  return push({Op::Leaf, 0, 0, 0, 0.0, 0.0, value, 0.0});
}

Tape::Ref Tape::constant(double value) {
  return push({Op::Constant, 0, 0, 0, 0.0, 0.0, value, 0.0});
}

Tape::Ref Tape::add(Ref x, Ref y) {
  return push({Op::Add, x, y, 0, 1.0, 1.0, nodes_[x].value + nodes_[y].value, 0.0});
}

Tape::Ref Tape::sub(Ref x, Ref y) {
  return push({Op::Sub, x, y, 0, 1.0, -1.0, nodes_[x].value - nodes_[y].value, 0.0});
}

Tape::Ref Tape::mul(Ref x, Ref y) {
  const double xv = nodes_[x].value;
  const double yv = nodes_[y].value;
  return push({Op::Mul, x, y, 0, yv, xv, xv * yv, 0.0});
}

Tape::Ref Tape::square(Ref x) {
  const double xv = nodes_[x].value;
  return push({Op::Square, x, x, 0, 2.0 * xv, 0.0, xv * xv, 0.0});
}

Tape::Ref Tape::affine(Ref x, double scale, double shift) {
  return push({Op::Affine, x, x, 0, scale, 0.0, scale * nodes_[x].value + shift, 0.0});
}

Tape::Ref Tape::add_scaled(Ref x, Ref y, double c) {
  return push({Op::AddScaled, x, y, 0, 1.0, c, nodes_[x].value + c * nodes_[y].value, 0.0});
}

Tape::Ref Tape::potential(Ref z, const Potential& p) {
  const double zv = nodes_[z].value;
  return push({Op::Potential, z, z, 0, p.d1(zv), 0.0, p.eval(zv), 0.0});
}

Tape::Ref Tape::sum(Ref first, std::uint32_t stride, std::uint32_t count) {
  double s = 0.0;
  for (std::uint32_t i = 0; i < count; ++i) s += nodes_[first + stride * i].value;
  return push({Op::Sum, first, stride, count, 1.0, 0.0, s, 0.0});
}

Tape::Ref Tape::mean(Ref first, std::uint32_t stride, std::uint32_t count) {
  double s = 0.0;
  for (std::uint32_t i = 0; i < count; ++i) s += nodes_[first + stride * i].value;
  const double w = 1.0 / static_cast<double>(count);
  return push({Op::Mean, first, stride, count, w, 0.0, s * w, 0.0});
}

void Tape::backward(Ref root) {
  for (Node& n : nodes_) n.adjoint = 0.0;
  nodes_[root].adjoint = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    const double adj = n.adjoint;
    if (adj == 0.0) continue;
    if (n.op == Op::Sum || n.op == Op::Mean) {
      const double w = n.da * adj;
      for (std::uint32_t k = 0; k < n.count; ++k) {
        nodes_[n.a + n.b * k].adjoint += w;
      }
    } else {
      // Unary nodes alias b to a with db = 0; leaves have da = db = 0.
      nodes_[n.a].adjoint += n.da * adj;
      nodes_[n.b].adjoint += n.db * adj;
    }
  }
}

namespace {

// Records one agent's cost; alpha leaves come first so their adjoints can be
// read back by offset. Per-step nodes are emitted in fixed-size groups so the
// running sum is a strided reduction. Zero potentials record no nodes.
struct AgentRecording {
  Tape::Ref first_leaf;
  Tape::Ref cost;
};

AgentRecording record_agent_cost(Tape& t, const double* alpha_row, double x0,
                                 const PriceVector& omega, const CostModel& cm,
                                 const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  const bool has_running = cm.running.kind() != Potential::Kind::Zero;
  const std::uint32_t stride = has_running ? 5 : 3;

  AgentRecording rec;
  rec.first_leaf = t.leaf(alpha_row[0]);
  for (std::size_t l = 1; l < n; ++l) t.leaf(alpha_row[l]);

  Tape::Ref z = t.constant(x0);
  Tape::Ref first_group = 0;
  for (std::size_t l = 0; l < n; ++l) {
    const Tape::Ref a = rec.first_leaf + static_cast<Tape::Ref>(l);
    // c0*a^2/2 + a*omega = a * (c0/2 * a + omega)
    const Tape::Ref lin = t.affine(a, 0.5 * cm.c0, omega[l]);
    Tape::Ref step_cost = t.mul(a, lin);
    if (has_running) {
      const Tape::Ref pot = t.potential(z, cm.running);
      step_cost = t.add(step_cost, pot);
    }
    if (l == 0) first_group = step_cost;
    z = t.add_scaled(z, a, dt);
  }
  const Tape::Ref running = t.sum(first_group, stride, static_cast<std::uint32_t>(n));
  if (cm.terminal.kind() != Potential::Kind::Zero) {
    const Tape::Ref scaled = t.affine(running, dt, 0.0);
    const Tape::Ref terminal = t.potential(z, cm.terminal);
    rec.cost = t.add(scaled, terminal);
  } else {
    rec.cost = t.affine(running, dt, 0.0);
  }
  return rec;
}

void check_dims(const PriceVector& omega, const ControlMatrix& alpha, const SupplyVector& supply,
                const InitialStates& x, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  if (alpha.rows() != x.count() || alpha.cols() != n || omega.size() != n ||
      supply.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "gradient inputs disagree on M or N");
  }
  require_finite(omega, "price");
  require_finite(alpha, "controls");
}

ControlMatrix grad_tape(const PriceVector& omega, const ControlMatrix& alpha,
                        const SupplyVector& supply, const CostModel& cm,
                        const InitialStates& x, const TimeGrid& grid,
                        ObjectiveValue* value_out) {
  const std::size_t m_count = alpha.rows();
  const std::size_t n = grid.steps();
  const double neg_inv_m = -1.0 / static_cast<double>(m_count);

  // One tape per agent, recorded into the same scratch so it stays
  // cache-resident; the mean over agents is a fixed-order reduction outside
  // the sweep.
  Tape t;
  ControlMatrix grad(m_count, n);
  double cost_sum = 0.0;
  if (value_out != nullptr) value_out->per_agent_cost.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    double* g = grad.row(m);
    const double cost = tape_agent_cost_grad(t, alpha.row(m), x.sample(m), omega, cm, grid, g);
    if (!std::isfinite(cost)) {
      throw Error(ErrorCode::NonFiniteValue,
                  "non-finite cost in tape forward pass for agent " + std::to_string(m));
    }
    for (std::size_t l = 0; l < n; ++l) g[l] *= neg_inv_m;
    cost_sum += cost;
    if (value_out != nullptr) value_out->per_agent_cost[m] = cost;
  }
  if (value_out != nullptr) {
    const double dt = grid.dt();
    double supply_sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) supply_sum += omega[l] * supply[l];
    value_out->supply_term = dt * supply_sum;
    value_out->total = value_out->supply_term + cost_sum * neg_inv_m;
  }
  return grad;
}

ControlMatrix grad_adjoint(const PriceVector& omega, const ControlMatrix& alpha,
                           const SupplyVector& supply, const CostModel& cm,
                           const InitialStates& x, const TimeGrid& grid,
                           ObjectiveValue* value_out) {
  const std::size_t m_count = alpha.rows();
  const std::size_t n = grid.steps();
  const double neg_inv_m = -1.0 / static_cast<double>(m_count);

  ControlMatrix grad(m_count, n);
  double cost_sum = 0.0;
  if (value_out != nullptr) value_out->per_agent_cost.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    double* g = grad.row(m);
    const double cost = adjoint_agent_cost_grad(alpha.row(m), x.sample(m), omega, cm, grid, g);
    for (std::size_t l = 0; l < n; ++l) g[l] *= neg_inv_m;
    cost_sum += cost;
    if (value_out != nullptr) value_out->per_agent_cost[m] = cost;
  }
  if (value_out != nullptr) {
    const double dt = grid.dt();
    double supply_sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) supply_sum += omega[l] * supply[l];
    value_out->supply_term = dt * supply_sum;
    value_out->total = value_out->supply_term + cost_sum * neg_inv_m;
  }
  return grad;
}

ControlMatrix grad_fd(double step, const PriceVector& omega, const ControlMatrix& alpha,
                      const SupplyVector& supply, const CostModel& cm, const InitialStates& x,
                      const TimeGrid& grid, ObjectiveValue* value_out) {
  ControlMatrix grad(alpha.rows(), alpha.cols());
  ControlMatrix work = alpha;
  for (std::size_t m = 0; m < alpha.rows(); ++m) {
    for (std::size_t l = 0; l < alpha.cols(); ++l) {
      const double base = alpha(m, l);
      const double h = step * (1.0 + std::abs(base));
      if (base + h == base) {
        throw Error(ErrorCode::InvalidArgument, "finite-difference step underflows at entry");
      }
      work(m, l) = base + h;
      const double up = lagrangian(omega, work, supply, cm, x, grid).total;
      work(m, l) = base - h;
      const double down = lagrangian(omega, work, supply, cm, x, grid).total;
      work(m, l) = base;
      grad(m, l) = (up - down) / (2.0 * h);
    }
  }
  if (value_out != nullptr) {
    *value_out = lagrangian(omega, alpha, supply, cm, x, grid);
  }
  return grad;
}

}  // namespace

double adjoint_agent_cost_grad(const double* alpha_row, double x0, const PriceVector& omega,
                               const CostModel& cm, const TimeGrid& grid, double* grad_out) {
  const std::size_t n = grid.steps();
  const double dt = grid.dt();

  std::vector<double> z(n + 1);
  z[0] = x0;
  double running = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    const double a = alpha_row[l];
    running += 0.5 * cm.c0 * a * a + cm.running.eval(z[l]) + a * omega[l];
    z[l + 1] = z[l] + dt * a;
  }
  const double cost = dt * running + cm.terminal.eval(z[n]);

  // Reverse cumulative sum: tail[l] = sum_{j=l+1}^{N-1} V'(z_j).
  const double gp = cm.terminal.d1(z[n]);
  double tail = 0.0;
  for (std::size_t l = n; l-- > 0;) {
    grad_out[l] = dt * (cm.c0 * alpha_row[l] + omega[l] + dt * tail + gp);
    tail += cm.running.d1(z[l]);
  }
  return cost;
}

double tape_agent_cost_grad(Tape& tape, const double* alpha_row, double x0,
                            const PriceVector& omega, const CostModel& cm,
                            const TimeGrid& grid, double* grad_out) {
  tape.reset();
  AgentRecording rec = record_agent_cost(tape, alpha_row, x0, omega, cm, grid);
  tape.backward(rec.cost);
  for (std::size_t l = 0; l < grid.steps(); ++l) {
    grad_out[l] = tape.adjoint(rec.first_leaf + static_cast<Tape::Ref>(l));
  }
  return tape.value(rec.cost);
}

ControlMatrix grad_alpha_with_value(const GradientBackend& backend, const PriceVector& omega,
                                    const ControlMatrix& alpha, const SupplyVector& supply,
                                    const CostModel& cm, const InitialStates& x,
                                    const TimeGrid& grid, ObjectiveValue* value_out) {
  check_dims(omega, alpha, supply, x, grid);
  switch (backend.kind) {
    case GradientBackend::Kind::Tape:
      return grad_tape(omega, alpha, supply, cm, x, grid, value_out);
    case GradientBackend::Kind::Adjoint:
      return grad_adjoint(omega, alpha, supply, cm, x, grid, value_out);
    case GradientBackend::Kind::FiniteDifference:
      return grad_fd(backend.fd_step, omega, alpha, supply, cm, x, grid, value_out);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown gradient backend");
}

ControlMatrix grad_alpha(const GradientBackend& backend, const PriceVector& omega,
                         const ControlMatrix& alpha, const SupplyVector& supply,
                         const CostModel& cm, const InitialStates& x, const TimeGrid& grid) {
  return grad_alpha_with_value(backend, omega, alpha, supply, cm, x, grid, nullptr);
}

}  // namespace mfgp
