#include "mfgp/core.hpp"

#include <cmath>

#include "mfgp/supply.hpp"

namespace mfgp {

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::InvalidArgument, "time horizon must be positive and finite");
  }
  if (steps < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid needs at least one step");
  }
}

Potential Potential::quadratic(double weight, double center) {
  if (!(weight >= 0.0) || !std::isfinite(weight) || !std::isfinite(center)) {
    throw Error(ErrorCode::InvalidArgument, "quadratic potential needs weight >= 0 and finite center");
  }
  return Potential(Kind::Quadratic, weight, center, 0.0);
}

Potential Potential::double_well(double weight, double center_a, double center_b) {
  if (!(weight >= 0.0) || !std::isfinite(weight) || !std::isfinite(center_a) ||
      !std::isfinite(center_b)) {
    throw Error(ErrorCode::InvalidArgument, "double-well potential needs weight >= 0 and finite centers");
  }
  return Potential(Kind::DoubleWell, weight, center_a, center_b);
}

double Potential::eval(double z) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Quadratic: {
      const double u = z - a_;
      return 0.5 * weight_ * u * u;
    }
    case Kind::DoubleWell: {
      const double u = z - a_;
      const double v = z - b_;
      return 0.5 * weight_ * u * u * v * v;
    }
  }
  return 0.0;
}

double Potential::d1(double z) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Quadratic:
      return weight_ * (z - a_);
    case Kind::DoubleWell: {
      const double u = z - a_;
      const double v = z - b_;
      return weight_ * u * v * (u + v);
    }
  }
  return 0.0;
}

double Potential::d2(double z) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Quadratic:
      return weight_;
    case Kind::DoubleWell: {
      const double u = z - a_;
      const double v = z - b_;
      const double s = u + v;
      return weight_ * (s * s + 2.0 * u * v);
    }
  }
  return 0.0;
}

CostModel::CostModel(double control_weight, Potential running_cost, Potential terminal_cost)
    : c0(control_weight), running(running_cost), terminal(terminal_cost) {
  if (!(c0 > 0.0) || !std::isfinite(c0)) {
    throw Error(ErrorCode::InvalidArgument, "control penalty weight c0 must be positive");
  }
}

bool CostModel::is_linear_quadratic() const {
  return running.kind() != Potential::Kind::DoubleWell &&
         terminal.kind() != Potential::Kind::DoubleWell;
}

InitialStates::InitialStates(std::vector<double> samples, Provenance p)
    : samples_(std::move(samples)), provenance_(p) {
  if (samples_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "initial states need at least one sample");
  }
  require_finite(samples_, "initial states");
}

InitialStates InitialStates::evenly_spaced(double a, double b, std::size_t count) {
  if (count < 1) {
    throw Error(ErrorCode::InvalidArgument, "initial states need at least one sample");
  }
  std::vector<double> xs(count);
  if (count == 1) {
    xs[0] = 0.5 * (a + b);
  } else {
    for (std::size_t m = 0; m < count; ++m) {
      xs[m] = a + static_cast<double>(m) * (b - a) / static_cast<double>(count - 1);
    }
  }
  return InitialStates(std::move(xs), Provenance::EvenlySpaced);
}

InitialStates InitialStates::explicit_samples(std::vector<double> samples) {
  return InitialStates(std::move(samples), Provenance::Explicit);
}

InitialStates InitialStates::from_file(const std::string& path, std::size_t expected_count) {
  std::vector<double> xs = load_column_csv(path, expected_count, "x");
  return InitialStates(std::move(xs), Provenance::FromFile);
}

double InitialStates::mean() const {
  double sum = 0.0;
  for (double v : samples_) sum += v;
  return sum / static_cast<double>(samples_.size());
}

double norm_price(const PriceVector& omega, const TimeGrid& grid) {
  if (omega.size() != grid.steps()) {
    throw Error(ErrorCode::DimensionMismatch,
                "price vector has " + std::to_string(omega.size()) + " entries, grid expects " +
                    std::to_string(grid.steps()));
  }
  double sum = 0.0;
  for (double w : omega) sum += w * w;
  return std::sqrt(grid.horizon() / static_cast<double>(grid.steps()) * sum);
}

double norm_control(const ControlMatrix& alpha, const TimeGrid& grid) {
  if (alpha.cols() != grid.steps() || alpha.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "control matrix has " + std::to_string(alpha.cols()) + " columns, grid expects " +
                    std::to_string(grid.steps()));
  }
  double sum = 0.0;
  for (double a : alpha.data()) sum += a * a;
  const double mn = static_cast<double>(alpha.rows()) * static_cast<double>(grid.steps());
  return std::sqrt(grid.horizon() / mn * sum);
}

void require_finite(const std::vector<double>& values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteValue,
                  std::string(what) + " has non-finite entry at index " + std::to_string(i));
    }
  }
}

void require_finite(const Matrix& values, const char* what) {
  const auto& data = values.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(ErrorCode::NonFiniteValue,
                  std::string(what) + " has non-finite entry at row " +
                      std::to_string(i / values.cols()) + ", column " +
                      std::to_string(i % values.cols()));
    }
  }
}

}  // namespace mfgp
