#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jir/common.hpp"

//
// Finite single-shot source model: a pair (X, Y) ~ p_xy where X is observed
// by the encoder and Y must be inferred, plus per-task distortion measures.
//

namespace jir::src {

struct Alphabet {
  std::vector<std::string> labels;

  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> l) : labels(std::move(l)) {}
  static Alphabet numbered(std::size_t n, const std::string& prefix = "") {
    std::vector<std::string> l;
    l.reserve(n);
    for (std::size_t i = 0; i < n; ++i) l.push_back(prefix + std::to_string(i));
    return Alphabet(std::move(l));
  }

  std::size_t size() const { return labels.size(); }

  void validate() const {
    if (labels.empty()) throw ConfigError("alphabet must be nonempty");
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j]) throw ConfigError("alphabet labels must be distinct: " + labels[i]);
  }
};

inline double entropy(const Vec& p) {
  double s = 0.0, h = 0.0;
  for (double v : p) {
    if (v < 0.0) throw ConfigError("entropy: negative mass");
    s += v;
    h -= xlog2x(v);
  }
  if (std::abs(s - 1.0) > 1e-9) throw ConfigError("entropy: masses sum to " + std::to_string(s));
  return h;
}

inline double binary_entropy(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("binary_entropy: argument outside [0,1]");
  return -xlog2x(q) - xlog2x(1.0 - q);
}

struct JointSource {
  Alphabet x_alphabet, y_alphabet;
  Mat p_xy;        // |X| x |Y|
  Vec p_x, p_y;    // marginals
  Mat p_y_given_x; // rows are zero off the X support

  JointSource() = default;
  JointSource(Alphabet xa, Alphabet ya, Mat joint)
      : x_alphabet(std::move(xa)), y_alphabet(std::move(ya)), p_xy(std::move(joint)) {
    x_alphabet.validate();
    y_alphabet.validate();
    if (p_xy.rows != x_alphabet.size() || p_xy.cols != y_alphabet.size())
      throw ConfigError("joint mass table shape does not match alphabets");
    double total = 0.0;
    for (double v : p_xy.a) {
      if (!(v >= 0.0)) throw ConfigError("joint mass table has a negative or NaN entry");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ConfigError("joint mass table sums to " + std::to_string(total));
    p_x.assign(p_xy.rows, 0.0);
    p_y.assign(p_xy.cols, 0.0);
    for (std::size_t x = 0; x < p_xy.rows; ++x)
      for (std::size_t y = 0; y < p_xy.cols; ++y) {
        p_x[x] += p_xy(x, y);
        p_y[y] += p_xy(x, y);
      }
    p_y_given_x = Mat(p_xy.rows, p_xy.cols, 0.0);
    for (std::size_t x = 0; x < p_xy.rows; ++x)
      if (p_x[x] > 0.0)
        for (std::size_t y = 0; y < p_xy.cols; ++y) p_y_given_x(x, y) = p_xy(x, y) / p_x[x];
  }

  std::size_t x_size() const { return x_alphabet.size(); }
  std::size_t y_size() const { return y_alphabet.size(); }
};

enum class DistortionKind { matrix, hamming, logloss };

inline std::string to_string(DistortionKind k) {
  switch (k) {
    case DistortionKind::matrix: return "matrix";
    case DistortionKind::hamming: return "hamming";
    case DistortionKind::logloss: return "logloss";
  }
  return "?";
}

// A distortion measure as declared on an instance. `matrix` carries its own
// reconstruction alphabet; `hamming` reuses the source-side alphabet;
// `logloss` scores a reconstruction distribution by -log2 of the mass it
// puts on the realized symbol, so it has no reconstruction alphabet at all.
struct DistortionSpec {
  DistortionKind kind = DistortionKind::hamming;
  Mat matrix;                 // kind == matrix only
  Alphabet reconstruction;    // kind == matrix only

  static DistortionSpec hamming() { return DistortionSpec{DistortionKind::hamming, {}, {}}; }
  static DistortionSpec logloss() { return DistortionSpec{DistortionKind::logloss, {}, {}}; }
  static DistortionSpec from_matrix(Mat m, Alphabet rec) {
    DistortionSpec d;
    d.kind = DistortionKind::matrix;
    d.matrix = std::move(m);
    d.reconstruction = std::move(rec);
    return d;
  }

  void validate(std::size_t source_size) const {
    if (kind == DistortionKind::matrix) {
      reconstruction.validate();
      if (matrix.rows != source_size || matrix.cols != reconstruction.size())
        throw ConfigError("distortion matrix shape mismatch");
      for (double v : matrix.a)
        if (!(v >= 0.0) || !std::isfinite(v))
          throw ConfigError("distortion matrix entries must be finite and nonnegative");
    }
  }

  std::size_t reconstruction_size(std::size_t source_size) const {
    switch (kind) {
      case DistortionKind::matrix: return reconstruction.size();
      case DistortionKind::hamming: return source_size;
      case DistortionKind::logloss:
        throw ConfigError("log-loss distortion has no finite reconstruction alphabet");
    }
    return 0;
  }

  // explicit per-pair table; rejects logloss
  Mat effective_matrix(const Alphabet& source) const {
    switch (kind) {
      case DistortionKind::matrix: return matrix;
      case DistortionKind::hamming: {
        Mat m(source.size(), source.size(), 1.0);
        for (std::size_t i = 0; i < source.size(); ++i) m(i, i) = 0.0;
        return m;
      }
      case DistortionKind::logloss:
        throw ConfigError("log-loss distortion has no per-pair table");
    }
    return {};
  }
};

struct ProblemInstance {
  JointSource source;
  DistortionSpec d1;  // direct task, on X; may be logloss
  DistortionSpec d2;  // inference task, on Y; never logloss
  double D1 = 0.0;
  double D2 = 0.0;
  std::uint64_t M = 1;

  void validate() const {
    if (d2.kind == DistortionKind::logloss)
      throw ConfigError("the inference-side distortion cannot be log-loss");
    d1.validate(source.x_size());
    d2.validate(source.y_size());
    if (std::isnan(D1) || D1 < 0.0) throw ConfigError("D1 must be nonnegative");
    if (std::isnan(D2) || D2 < 0.0) throw ConfigError("D2 must be nonnegative");
    if (M < 1) throw ConfigError("codebook size must be at least 1");
  }

  bool direct_is_logloss() const { return d1.kind == DistortionKind::logloss; }
  std::size_t xhat_size() const { return d1.reconstruction_size(source.x_size()); }
  std::size_t yhat_size() const { return d2.reconstruction_size(source.y_size()); }
  Mat d1_matrix() const { return d1.effective_matrix(source.x_alphabet); }
  Mat d2_matrix() const { return d2.effective_matrix(source.y_alphabet); }

  ProblemInstance with_m(std::uint64_t m) const {
    ProblemInstance c = *this;
    c.M = m;
    return c;
  }
};

// expected inference distortion seen from x: dt2(x, yh) = E[d2(Y, yh) | X = x]
inline Mat surrogate_distortion(const JointSource& source, const DistortionSpec& d2) {
  if (d2.kind == DistortionKind::logloss)
    throw ConfigError("surrogate distortion is undefined for log-loss");
  Mat d2m = d2.effective_matrix(source.y_alphabet);
  Mat out(source.x_size(), d2m.cols, 0.0);
  for (std::size_t x = 0; x < source.x_size(); ++x) {
    if (source.p_x[x] <= 0.0) continue;
    for (std::size_t yh = 0; yh < d2m.cols; ++yh) {
      double acc = 0.0;
      for (std::size_t y = 0; y < source.y_size(); ++y)
        acc += source.p_y_given_x(x, y) * d2m(y, yh);
      out(x, yh) = acc;
    }
  }
  return out;
}

// self-information table in bits; NaN on zero-mass symbols
inline Vec info_density(const JointSource& source) {
  Vec out(source.x_size(), kNaN);
  for (std::size_t x = 0; x < source.x_size(); ++x)
    if (source.p_x[x] > 0.0) out[x] = -std::log2(source.p_x[x]);
  return out;
}

inline double info_density_at(const JointSource& source, std::size_t x) {
  if (x >= source.x_size() || source.p_x[x] <= 0.0)
    throw std::domain_error("information density undefined off the source support");
  return -std::log2(source.p_x[x]);
}

// P[d2(Y, yh) > D2 | X = x]: the inference-side failure kernel
inline double indirect_excess_kernel(const ProblemInstance& inst, std::size_t x, std::size_t yh) {
  Mat d2m = inst.d2_matrix();
  double acc = 0.0;
  for (std::size_t y = 0; y < inst.source.y_size(); ++y)
    if (d2m(y, yh) > inst.D2) acc += inst.source.p_y_given_x(x, y);
  return acc;
}

inline Mat indirect_excess_table(const ProblemInstance& inst) {
  Mat d2m = inst.d2_matrix();
  Mat out(inst.source.x_size(), d2m.cols, 0.0);
  for (std::size_t x = 0; x < inst.source.x_size(); ++x)
    for (std::size_t yh = 0; yh < d2m.cols; ++yh) {
      double acc = 0.0;
      for (std::size_t y = 0; y < inst.source.y_size(); ++y)
        if (d2m(y, yh) > inst.D2) acc += inst.source.p_y_given_x(x, y);
      out(x, yh) = acc;
    }
  return out;
}

// Conditional failure probability of the pair (xh, yh) at observation x:
// 1 when the direct reconstruction already misses, else the inference kernel.
inline double excess_kernel_pi(const ProblemInstance& inst, std::size_t x, std::size_t xh,
                               std::size_t yh) {
  if (inst.direct_is_logloss())
    throw ConfigError("excess kernel over reconstruction indices needs a finite direct distortion");
  Mat d1m = inst.d1_matrix();
  if (x >= d1m.rows || xh >= d1m.cols || yh >= inst.yhat_size())
    throw ConfigError("excess kernel index out of range");
  if (d1m(x, xh) > inst.D1) return 1.0;
  return indirect_excess_kernel(inst, x, yh);
}

// Log-loss variant: the direct reconstruction is a distribution over X.
inline double excess_kernel_pi(const ProblemInstance& inst, std::size_t x, const Vec& xhat_dist,
                               std::size_t yh) {
  if (!inst.direct_is_logloss())
    throw ConfigError("distribution-valued reconstruction requires log-loss direct distortion");
  if (xhat_dist.size() != inst.source.x_size())
    throw ConfigError("reconstruction distribution has wrong length");
  double mass = xhat_dist[x];
  double d1 = mass > 0.0 ? -std::log2(mass) : kInf;
  if (d1 > inst.D1) return 1.0;
  return indirect_excess_kernel(inst, x, yh);
}

// full direct+inference failure table indexed by (x, xh*|Yhat|+yh)
inline Mat joint_excess_table(const ProblemInstance& inst) {
  Mat d1m = inst.d1_matrix();
  Mat ind = indirect_excess_table(inst);
  std::size_t nx = inst.source.x_size(), nxh = d1m.cols, nyh = ind.cols;
  Mat out(nx, nxh * nyh, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t xh = 0; xh < nxh; ++xh)
      for (std::size_t yh = 0; yh < nyh; ++yh)
        out(x, xh * nyh + yh) = d1m(x, xh) > inst.D1 ? 1.0 : ind(x, yh);
  return out;
}

inline Vec binomial_pmf(unsigned n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("binomial parameter outside [0,1]");
  Vec phi(n + 1, 0.0);
  if (p == 0.0) {
    phi[0] = 1.0;
    return phi;
  }
  if (p == 1.0) {
    phi[n] = 1.0;
    return phi;
  }
  for (unsigned k = 0; k <= n; ++k) {
    double lg = std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) -
                std::lgamma(double(n - k) + 1);
    phi[k] = std::exp(lg + k * std::log(p) + (n - k) * std::log1p(-p));
  }
  double s = 0.0;
  for (double v : phi) s += v;
  for (double& v : phi) v /= s;
  return phi;
}

// Structured test family: Y uniform on {0..m-1}, X = Y*(n+1) + K with
// K ~ Binomial(n, p) independent of Y, so Y is a deterministic block
// function of X and |X| = m*(n+1).
inline JointSource build_binomial_class_source(unsigned m, unsigned n, double p) {
  if (m < 1) throw ConfigError("class count must be positive");
  Vec phi = binomial_pmf(n, p);
  Alphabet xa = Alphabet::numbered(std::size_t(m) * (n + 1));
  Alphabet ya = Alphabet::numbered(m);
  Mat joint(xa.size(), ya.size(), 0.0);
  for (unsigned y = 0; y < m; ++y)
    for (unsigned k = 0; k <= n; ++k) joint(std::size_t(y) * (n + 1) + k, y) = phi[k] / m;
  return JointSource(std::move(xa), std::move(ya), std::move(joint));
}

}  // namespace jir::src
