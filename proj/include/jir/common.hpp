#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace jir {

using Vec = std::vector<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Dense row-major matrix, just enough for probability and distortion tables.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  bool empty() const { return a.empty(); }

  Vec row(std::size_t i) const {
    return Vec(a.begin() + static_cast<std::ptrdiff_t>(i * cols),
               a.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }

  double max_value() const {
    double m = -kInf;
    for (double v : a) m = std::max(m, v);
    return m;
  }
};

// Error taxonomy; the CLI maps these onto its exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-convergence of an iterative solver; carries the last iterate so callers
// can inspect how far it got.
struct SolverError : std::runtime_error {
  double last_rate = kNaN;
  double last_distortion = kNaN;
  int iterations = 0;
  SolverError(const std::string& msg, double rate, double distortion, int iters)
      : std::runtime_error(msg), last_rate(rate), last_distortion(distortion), iterations(iters) {}
};

inline double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// sum of exp2 of log-domain terms, accumulated largest-first for stability
inline double exp2_sum(std::vector<double> log2_terms) {
  if (log2_terms.empty()) return 0.0;
  std::sort(log2_terms.begin(), log2_terms.end(), std::greater<double>());
  double top = log2_terms.front();
  if (top == -kInf) return 0.0;
  double acc = 0.0;
  for (double t : log2_terms) acc += std::exp2(t - top);
  return std::exp2(top) * acc;
}

inline double pow_u64(double base, std::uint64_t e) {
  return std::pow(base, static_cast<double>(e));
}

// 17 significant digits: enough for the decimal text to round-trip the double
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON-safe number: infinities and NaN become strings
inline std::string json_num(double v) {
  if (std::isfinite(v)) return fmt_g17(v);
  if (std::isnan(v)) return "\"nan\"";
  return v > 0 ? "\"inf\"" : "\"-inf\"";
}

// {0, 0.1, ..., ceil(10 hi)/10}; i/10.0 keeps the candidates reproducible
inline Vec tenth_grid(double hi) {
  Vec g;
  long n = hi > 0.0 && std::isfinite(hi) ? std::lround(std::ceil(hi * 10.0)) : 0;
  for (long i = 0; i <= n; ++i) g.push_back(double(i) / 10.0);
  return g;
}

// One evaluated point of a bound sweep; params records everything needed to
// re-evaluate it bit-identically.
struct BoundPoint {
  std::uint64_t M = 0;
  double value = 0.0;      // clipped to [0, 1]
  double raw_value = 0.0;  // before clipping
  std::string params;      // JSON object fragment
};

struct BoundCurve {
  std::string tag;        // row label in CSV output
  std::string direction;  // "upper" | "lower" | "exact" | "estimate"
  std::vector<BoundPoint> points;
};

}  // namespace jir
