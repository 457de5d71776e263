#pragma once

#include <cstdint>

#include "mfgp/core.hpp"
#include "mfgp/objective.hpp"

namespace mfgp {

/// Reverse-mode tape over the closed operation set the objective needs.
/// Nodes are appended in topological order (inputs always precede users);
/// local derivatives are stored at record time, so one reverse sweep fills
/// every adjoint. Instances are single-use per recorded expression and not
/// shared across threads; reset() keeps capacity for the next recording.
class Tape {
 public:
  using Ref = std::uint32_t;

  enum class Op : std::uint8_t {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    Square,
    Affine,     // scale * x + shift
    AddScaled,  // x + c * y
    Potential,  // composite node with analytic local derivative
    Sum,        // strided reduction over earlier nodes
    Mean,
  };

  Ref leaf(double value);
  Ref constant(double value);
  Ref add(Ref x, Ref y);
  Ref sub(Ref x, Ref y);
  Ref mul(Ref x, Ref y);
  Ref square(Ref x);
  Ref affine(Ref x, double scale, double shift);
  Ref add_scaled(Ref x, Ref y, double c);
  Ref potential(Ref z, const Potential& p);
  Ref sum(Ref first, std::uint32_t stride, std::uint32_t count);
  Ref mean(Ref first, std::uint32_t stride, std::uint32_t count);

  double value(Ref i) const { return nodes_[i].value; }
  double adjoint(Ref i) const { return nodes_[i].adjoint; }
  std::size_t size() const { return nodes_.size(); }

  /// Zeroes adjoints, seeds root with 1, sweeps once in reverse node order.
  void backward(Ref root);

  void reset() { nodes_.clear(); }

 private:
  struct Node {
    Op op;
    Ref a = 0;
    Ref b = 0;            // second input, or stride for Sum/Mean
    std::uint32_t count = 0;
    double da = 0.0;
    double db = 0.0;
    double value = 0.0;
    double adjoint = 0.0;
  };

  Ref push(Node n);

  std::vector<Node> nodes_;
};

struct GradientBackend {
  enum class Kind { Tape, Adjoint, FiniteDifference };

  static GradientBackend tape() { return {Kind::Tape, 0.0}; }
  static GradientBackend adjoint() { return {Kind::Adjoint, 0.0}; }
  static GradientBackend finite_difference(double step) {
    if (!(step > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
    }
    return {Kind::FiniteDifference, step};
  }

  Kind kind = Kind::Adjoint;
  double fd_step = 1e-6;
};

/// Gradient of one agent's cost with respect to its control row, by the
/// discrete adjoint recursion (reverse cumulative sum of V' along the
/// rolled-out states). Returns the cost. grad_out has length N and holds
///   d cost / d a_l = dt * (c0*a_l + omega_l + dt * sum_{j>l} V'(z_j) + g'(z_N)).
double adjoint_agent_cost_grad(const double* alpha_row, double x0, const PriceVector& omega,
                               const CostModel& cm, const TimeGrid& grid, double* grad_out);

/// Same quantity via a recorded tape; also used by the full-objective tape.
double tape_agent_cost_grad(Tape& tape, const double* alpha_row, double x0,
                            const PriceVector& omega, const CostModel& cm,
                            const TimeGrid& grid, double* grad_out);

/// Entry [m][l] approximates dL/d alpha[m][l] of the saddle objective.
/// All backends consume identical inputs; Tape records the whole objective
/// and sweeps once, Adjoint uses the closed recursion, FiniteDifference is
/// a central-difference oracle with per-entry step fd_step * (1 + |a|).
ControlMatrix grad_alpha(const GradientBackend& backend, const PriceVector& omega,
                         const ControlMatrix& alpha, const SupplyVector& supply,
                         const CostModel& cm, const InitialStates& x, const TimeGrid& grid);

/// grad_alpha plus the objective pieces evaluated at the same iterate, so the
/// solver's trace costs no extra pass.
ControlMatrix grad_alpha_with_value(const GradientBackend& backend, const PriceVector& omega,
                                    const ControlMatrix& alpha, const SupplyVector& supply,
                                    const CostModel& cm, const InitialStates& x,
                                    const TimeGrid& grid, ObjectiveValue* value_out);

}  // namespace mfgp
