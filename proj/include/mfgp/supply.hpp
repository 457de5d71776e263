#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mfgp/core.hpp"

namespace mfgp {

/// Supply specification. Wiener paths are a deterministic function of
/// (seed, grid): mt19937_64 uniforms mapped through Box-Muller, increments
/// scaled by sqrt(dt), value sampled at left endpoints starting from 0.
class SupplySpec {
 public:
  enum class Kind { Sinusoid, Wiener, FromFile, Constant };

  static SupplySpec sinusoid(double amplitude, double angular_frequency);
  static SupplySpec wiener(std::uint64_t seed);
  static SupplySpec from_file(std::string path);
  static SupplySpec constant(double value);

  Kind kind() const { return kind_; }
  double amplitude() const { return a_; }
  double angular_frequency() const { return b_; }
  double value() const { return a_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& path() const { return path_; }

 private:
  SupplySpec() = default;

  Kind kind_ = Kind::Constant;
  double a_ = 0.0;
  double b_ = 0.0;
  std::uint64_t seed_ = 0;
  std::string path_;
};

SupplyVector generate_supply(const SupplySpec& spec, const TimeGrid& grid);

/// Standard-normal draws from a seeded mt19937_64 via Box-Muller. Both values
/// of a pair are consumed in order, so the stream is a pure function of the
/// seed. std::normal_distribution is avoided on purpose: its algorithm is
/// implementation-defined.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// One value per row, optional single-cell header, LF or CRLF, plain decimal
/// point. Exactly expected_count data rows required.
std::vector<double> load_column_csv(const std::string& path, std::size_t expected_count,
                                    const std::string& header_name);

/// Shortest round-trip formatting; reloading reproduces the values bitwise.
void save_column_csv(const std::string& path, const std::vector<double>& values,
                     const std::string& header_name);

}  // namespace mfgp
