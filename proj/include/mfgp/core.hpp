#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfgp {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFiniteValue,
  IoError,
  Diverged,
  NoConvergence,
  Unsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Uniform grid on [0, T] with N steps. States live on the N+1 nodes,
/// controls/price/supply on the N left endpoints.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }

  // Node time t_l = l*T/N, one multiply and one divide, never accumulated.
  double node(std::size_t l) const {
    return static_cast<double>(l) * horizon_ / static_cast<double>(steps_);
  }

 private:
  double horizon_;
  std::size_t steps_;
};

/// Closed set of running/terminal cost shapes. Each variant carries its
/// analytic first and second derivatives so gradient backends can reuse them.
class Potential {
 public:
  enum class Kind { Zero, Quadratic, DoubleWell };

  static Potential zero() { return Potential(Kind::Zero, 0.0, 0.0, 0.0); }
  static Potential quadratic(double weight, double center);
  static Potential double_well(double weight, double center_a, double center_b);

  Kind kind() const { return kind_; }
  double weight() const { return weight_; }
  double center() const { return a_; }
  double center_a() const { return a_; }
  double center_b() const { return b_; }

  double eval(double z) const;
  double d1(double z) const;
  double d2(double z) const;

 private:
  Potential(Kind k, double w, double a, double b)
      : kind_(k), weight_(w), a_(a), b_(b) {}

  Kind kind_;
  double weight_;
  double a_;
  double b_;
};

/// Running cost L(z, a) = c0*a^2/2 + V(z) plus terminal cost g.
struct CostModel {
  CostModel(double control_weight, Potential running_cost, Potential terminal_cost);

  double c0;
  Potential running;
  Potential terminal;

  bool is_linear_quadratic() const;
};

/// Empirical sample of the initial asset distribution.
class InitialStates {
 public:
  enum class Provenance { EvenlySpaced, FromFile, Explicit };

  static InitialStates evenly_spaced(double a, double b, std::size_t count);
  static InitialStates explicit_samples(std::vector<double> samples);
  static InitialStates from_file(const std::string& path, std::size_t expected_count);

  std::size_t count() const { return samples_.size(); }
  double sample(std::size_t m) const { return samples_[m]; }
  const std::vector<double>& samples() const { return samples_; }
  double mean() const;
  Provenance provenance() const { return provenance_; }

 private:
  InitialStates(std::vector<double> samples, Provenance p);

  std::vector<double> samples_;
  Provenance provenance_;
};

/// Dense row-major M x C matrix of doubles; rows index agents.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t m, std::size_t l) { return data_[m * cols_ + l]; }
  double operator()(std::size_t m, std::size_t l) const { return data_[m * cols_ + l]; }

  double* row(std::size_t m) { return data_.data() + m * cols_; }
  const double* row(std::size_t m) const { return data_.data() + m * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using PriceVector = std::vector<double>;
using SupplyVector = std::vector<double>;
using ControlMatrix = Matrix;
using StateMatrix = Matrix;

/// ||omega||^2 = (T/N) sum_l omega[l]^2, the grid version of the L2(0,T) norm.
double norm_price(const PriceVector& omega, const TimeGrid& grid);

/// ||alpha||^2 = (T/(M N)) sum_{m,l} alpha[m][l]^2.
double norm_control(const ControlMatrix& alpha, const TimeGrid& grid);

void require_finite(const std::vector<double>& values, const char* what);
void require_finite(const Matrix& values, const char* what);

}  // namespace mfgp
