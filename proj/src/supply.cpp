#include "mfgp/supply.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace mfgp {

SupplySpec SupplySpec::sinusoid(double amplitude, double angular_frequency) {
  if (!std::isfinite(amplitude) || !std::isfinite(angular_frequency)) {
    throw Error(ErrorCode::InvalidArgument, "sinusoid supply needs finite parameters");
  }
  SupplySpec s;
  s.kind_ = Kind::Sinusoid;
  s.a_ = amplitude;
  s.b_ = angular_frequency;
  return s;
}

SupplySpec SupplySpec::wiener(std::uint64_t seed) {
  SupplySpec s;
  s.kind_ = Kind::Wiener;
  s.seed_ = seed;
  return s;
}

SupplySpec SupplySpec::from_file(std::string path) {
  SupplySpec s;
  s.kind_ = Kind::FromFile;
  s.path_ = std::move(path);
  return s;
}

SupplySpec SupplySpec::constant(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::InvalidArgument, "constant supply needs a finite value");
  }
  SupplySpec s;
  s.kind_ = Kind::Constant;
  s.a_ = value;
  return s;
}

double NormalSampler::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1]: shift the standard [0,1) draw away from zero for the log.
  const double inv = 1.0 / (static_cast<double>(engine_.max()) + 1.0);
  const double u1 = (static_cast<double>(engine_()) + 1.0) * inv;
  const double u2 = static_cast<double>(engine_()) * inv;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

SupplyVector generate_supply(const SupplySpec& spec, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  SupplyVector q(n);
  switch (spec.kind()) {
    case SupplySpec::Kind::Sinusoid:
      for (std::size_t l = 0; l < n; ++l) {
        q[l] = spec.amplitude() * std::sin(spec.angular_frequency() * grid.node(l));
      }
      break;
    case SupplySpec::Kind::Wiener: {
      NormalSampler normals(spec.seed());
      const double root_dt = std::sqrt(grid.dt());
      q[0] = 0.0;
      for (std::size_t l = 1; l < n; ++l) {
        q[l] = q[l - 1] + normals.next() * root_dt;
      }
      break;
    }
    case SupplySpec::Kind::Constant:
      for (std::size_t l = 0; l < n; ++l) q[l] = spec.value();
      break;
    case SupplySpec::Kind::FromFile:
      q = load_column_csv(spec.path(), n, "Q");
      break;
  }
  require_finite(q, "supply");
  return q;
}

namespace {

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::vector<double> load_column_csv(const std::string& path, std::size_t expected_count,
                                    const std::string& header_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path);
  }
  std::vector<double> values;
  values.reserve(expected_count);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v;
    if (!parse_double(line, v)) {
      if (line_no == 1 && (line == header_name || line == "Q" || line == "x")) continue;
      throw Error(ErrorCode::IoError,
                  path + ":" + std::to_string(line_no) + ": cannot parse '" + line + "'");
    }
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteValue,
                  path + ":" + std::to_string(line_no) + ": non-finite value");
    }
    values.push_back(v);
  }
  if (values.size() != expected_count) {
    throw Error(ErrorCode::DimensionMismatch,
                path + ": expected " + std::to_string(expected_count) + " values, found " +
                    std::to_string(values.size()));
  }
  return values;
}

void save_column_csv(const std::string& path, const std::vector<double>& values,
                     const std::string& header_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  out << header_name << '\n';
  char buf[32];
  for (double v : values) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
    out.put('\n');
  }
  if (!out) {
    throw Error(ErrorCode::IoError, "write to " + path + " failed");
  }
}

}  // namespace mfgp
