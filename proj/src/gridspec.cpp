#include "fk/gridspec.hpp"

#include <cmath>

#include "fk/csvio.hpp"
#include "fk/errors.hpp"

namespace fk {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

std::vector<double> spaced(const std::string& spec, bool log_scale) {
  const auto parts = split(spec, ':');
  if (parts.size() != 4) {
    throw InvalidArgument("grid spec needs start:stop:steps after the prefix");
  }
  const double start = parse_double(parts[1]);
  const double stop = parse_double(parts[2]);
  const long steps = std::lround(parse_double(parts[3]));
  if (steps < 1) throw InvalidArgument("grid needs at least one step");
  if (log_scale && (start <= 0.0 || stop <= 0.0)) {
    throw InvalidArgument("log grid endpoints must be positive");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out.push_back(start);
    return out;
  }
  for (long i = 0; i < steps; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(steps - 1);
    if (log_scale) {
      out.push_back(
          std::exp(std::log(start) + f * (std::log(stop) - std::log(start))));
    } else {
      out.push_back(start + f * (stop - start));
    }
  }
  return out;
}

}  // namespace

std::vector<double> parse_eps_grid(const std::string& spec) {
  if (spec.empty()) throw InvalidArgument("empty epsilon grid");
  if (spec.rfind("lin:", 0) == 0) return spaced(spec, false);
  if (spec.rfind("log:", 0) == 0) return spaced(spec, true);
  std::vector<double> out;
  for (const std::string& cell : split(spec, ',')) {
    out.push_back(parse_double(cell));
  }
  for (double v : out) {
    if (v < 0.0) throw InvalidArgument("epsilon values must be >= 0");
  }
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& spec) {
  std::vector<std::size_t> out;
  for (const std::string& cell : split(spec, ',')) {
    const double v = parse_double(cell);
    if (v < 0.0 || v != std::floor(v)) {
      throw InvalidArgument("expected a non-negative integer: '" + cell + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace fk
