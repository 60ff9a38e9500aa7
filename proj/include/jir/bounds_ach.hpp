#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jir/common.hpp"
#include "jir/rd.hpp"
#include "jir/source_model.hpp"

//
// Random-coding achievability bounds: the exact ensemble value for the joint
// task, the threshold scheme for inference alone, and the binning scheme for
// a log-loss direct task.
//

namespace jir::ach {

using src::ProblemInstance;
using src::indirect_excess_table;
using src::info_density;
using src::joint_excess_table;

namespace detail {

// E[min of M iid draws] where the draw takes value `v` with mass `w`.
// Computed as the integral of tail(t)^M over the breakpoints 0 = b_0 < b_1 <
// ... given by the distinct positive values.
inline double expected_min_of_iid(std::vector<std::pair<double, double>>& vw, std::uint64_t M) {
  std::sort(vw.begin(), vw.end());
  double suffix = 0.0;
  std::size_t start = 0;
  while (start < vw.size() && vw[start].first <= 0.0) ++start;
  for (std::size_t k = start; k < vw.size(); ++k) suffix += vw[k].second;
  double ex = 0.0, b = 0.0;
  std::size_t i = start;
  while (i < vw.size()) {
    double v = vw[i].first;
    ex += (v - b) * pow_u64(suffix, M);
    double at = 0.0;
    while (i < vw.size() && vw[i].first == v) {
      at += vw[i].second;
      ++i;
    }
    suffix = std::max(0.0, suffix - at);
    b = v;
  }
  return ex;
}

// Piecewise description of t -> Q[value > t]^E for the gradient integrals.
struct TailProfile {
  Vec breaks;   // 0 = b_0 < b_1 < ...
  Vec tail_pow; // tail(t)^E on [b_k, b_{k+1})
  Vec cum;      // integral of tail^E from 0 to b_k

  double integral_to(double v) const {
    if (v <= 0.0) return 0.0;
    std::size_t k = std::size_t(std::upper_bound(breaks.begin(), breaks.end(), v) -
                                breaks.begin()) - 1;
    return cum[k] + (v - breaks[k]) * tail_pow[k];
  }
};

inline TailProfile tail_profile(std::vector<std::pair<double, double>>& vw, std::uint64_t expo) {
  std::sort(vw.begin(), vw.end());
  double suffix = 0.0;
  std::size_t start = 0;
  while (start < vw.size() && vw[start].first <= 0.0) ++start;
  for (std::size_t k = start; k < vw.size(); ++k) suffix += vw[k].second;
  TailProfile pr;
  pr.breaks.push_back(0.0);
  pr.tail_pow.push_back(pow_u64(suffix, expo));
  pr.cum.push_back(0.0);
  std::size_t i = start;
  while (i < vw.size()) {
    double v = vw[i].first;
    double at = 0.0;
    while (i < vw.size() && vw[i].first == v) {
      at += vw[i].second;
      ++i;
    }
    suffix = std::max(0.0, suffix - at);
    pr.cum.push_back(pr.cum.back() + (v - pr.breaks.back()) * pr.tail_pow.back());
    pr.breaks.push_back(v);
    pr.tail_pow.push_back(pow_u64(suffix, expo));
  }
  return pr;
}

}  // namespace detail

// Exact ensemble excess probability of the joint random code: M codeword
// pairs drawn iid from q_pairs (row-major over reconstruction pairs), encoder
// picking the pair with the smallest conditional failure probability.
inline double ach_random_coding_bound(const ProblemInstance& inst, const Vec& q_pairs) {
  inst.validate();
  if (inst.direct_is_logloss())
    throw ConfigError("joint random-coding bound needs a per-pair direct distortion table");
  Mat pi = joint_excess_table(inst);
  if (q_pairs.size() != pi.cols) throw ConfigError("codeword distribution has wrong length");
  double total = 0.0;
  std::vector<std::pair<double, double>> vw;
  for (std::size_t x = 0; x < pi.rows; ++x) {
    double px = inst.source.p_x[x];
    if (px <= 0.0) continue;
    vw.clear();
    for (std::size_t j = 0; j < pi.cols; ++j)
      if (q_pairs[j] > 0.0) vw.emplace_back(pi(x, j), q_pairs[j]);
    total += px * detail::expected_min_of_iid(vw, inst.M);
  }
  return total;
}

struct AchJointResult {
  double value = kNaN;
  Vec q_pairs;
  std::string origin;  // which candidate or refinement produced the winner
};

// Search over codeword-pair distributions: closed-form candidates seeded from
// the rate-distortion achiever, then multiplicative-weight descent on the
// exact ensemble value (any distribution is a valid bound, so the best
// evaluated point is kept).
inline AchJointResult ach_optimize_output(const ProblemInstance& inst, int refine_iters = 40) {
  inst.validate();
  Mat pi = joint_excess_table(inst);
  std::size_t npairs = pi.cols;
  std::size_t nxh = inst.xhat_size(), nyh = inst.yhat_size();

  std::vector<std::pair<Vec, std::string>> candidates;
  candidates.push_back({Vec(npairs, 1.0 / double(npairs)), "uniform"});
  try {
    rd::RDSolution joint = rd::solve_joint(inst.source, inst.d1, inst.d2, inst.D1, inst.D2);
    Vec induced = rd::output_marginal(inst.source.p_x, joint.conditional);
    candidates.push_back({induced, "rd-induced"});
    Vec mx(nxh, 0.0), my(nyh, 0.0);
    for (std::size_t xh = 0; xh < nxh; ++xh)
      for (std::size_t yh = 0; yh < nyh; ++yh) {
        mx[xh] += induced[xh * nyh + yh];
        my[yh] += induced[xh * nyh + yh];
      }
    Vec prod(npairs);
    for (std::size_t xh = 0; xh < nxh; ++xh)
      for (std::size_t yh = 0; yh < nyh; ++yh) prod[xh * nyh + yh] = mx[xh] * my[yh];
    candidates.push_back({prod, "rd-product"});
  } catch (const InfeasibleError&) {
  } catch (const SolverError&) {
  }

  AchJointResult best;
  for (auto& [q, name] : candidates) {
    double v = ach_random_coding_bound(inst, q);
    if (!(v >= best.value)) {
      best.value = v;
      best.q_pairs = q;
      best.origin = name;
    }
  }

  // gradient of the ensemble value in q_j: sum_x p_x M * I_x(pi(x,j)) where
  // I_x integrates tail^(M-1)
  Vec q = best.q_pairs;
  double step = 1.0;
  std::vector<std::pair<double, double>> vw;
  for (int it = 0; it < refine_iters && step > 1e-3; ++it) {
    Vec grad(npairs, 0.0);
    for (std::size_t x = 0; x < pi.rows; ++x) {
      double px = inst.source.p_x[x];
      if (px <= 0.0) continue;
      vw.clear();
      for (std::size_t j = 0; j < npairs; ++j)
        if (q[j] > 0.0) vw.emplace_back(pi(x, j), q[j]);
      detail::TailProfile pr = detail::tail_profile(vw, inst.M - 1);
      for (std::size_t j = 0; j < npairs; ++j)
        grad[j] += px * double(inst.M) * pr.integral_to(pi(x, j));
    }
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax <= 0.0) break;
    Vec next(npairs);
    double z = 0.0;
    for (std::size_t j = 0; j < npairs; ++j) {
      next[j] = std::max(q[j], 1e-12) * std::exp(-step * grad[j] / gmax);
      z += next[j];
    }
    for (double& v : next) v /= z;
    double val = ach_random_coding_bound(inst, next);
    if (val < best.value - 1e-15) {
      best.value = val;
      best.q_pairs = next;
      best.origin = "refined";
      q = next;
    } else {
      step *= 0.5;
    }
  }
  return best;
}

// Threshold scheme for the inference-only task: send any codeword whose
// conditional failure probability is at most eps_prime.
inline double ach_threshold_bound(const ProblemInstance& inst, const Vec& p_yhat,
                                  double eps_prime) {
  inst.validate();
  Mat pi1 = indirect_excess_table(inst);
  if (p_yhat.size() != pi1.cols) throw ConfigError("codeword distribution has wrong length");
  double s1 = 0.0;
  for (std::size_t x = 0; x < pi1.rows; ++x) {
    double eta = 0.0;
    for (std::size_t yh = 0; yh < pi1.cols; ++yh)
      if (pi1(x, yh) > eps_prime) eta += p_yhat[yh];
    s1 += inst.source.p_x[x] * pow_u64(clip01(eta), inst.M);
  }
  return eps_prime * (1.0 - s1) + s1;
}

// The bound is piecewise linear and increasing in eps_prime between the
// distinct failure levels, so only those levels need scanning.
inline std::pair<double, double> ach_threshold_best(const ProblemInstance& inst,
                                                    const Vec& p_yhat) {
  Mat pi1 = indirect_excess_table(inst);
  Vec cands(pi1.a);
  cands.push_back(0.0);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  double best = kInf, best_eps = 0.0;
  for (double c : cands) {
    if (c < 0.0 || c > 1.0) continue;
    double v = ach_threshold_bound(inst, p_yhat, c);
    if (v < best) {
      best = v;
      best_eps = c;
    }
  }
  return {best, best_eps};
}

// ---------------------------------------------------------------------------
// Binning scheme for a log-loss direct task.

struct LoglossAchTerms {
  double eps_prime = 0.0;
  double s1 = 0.0;       // E[eta^M]
  double s2 = 0.0;       // sum_k C(M,k) (M/k) E[eta^(M-k) (1-eta)^k]
  double s2_variant = 0.0;  // same with (1-eta)^k replaced by eta^k
};

namespace detail {

// inner binomial sums for one eta level, in the log domain
inline std::pair<double, double> logloss_binomial_sums(double eta, std::uint64_t M) {
  if (M > 5000000) throw BudgetError("binning bound needs a sum over M terms; M is too large");
  if (eta <= 0.0) return {1.0, 0.0};  // only k = M survives; the variant sum vanishes
  double l2e = std::log2(eta);
  double l2ne = eta >= 1.0 ? -kInf : std::log2(1.0 - eta);
  double lgM = std::lgamma(double(M) + 1.0);
  constexpr double kLn2 = 0.6931471805599453;
  std::vector<double> terms, vterms;
  terms.reserve(std::size_t(M));
  vterms.reserve(std::size_t(M));
  for (std::uint64_t k = 1; k <= M; ++k) {
    double lgC = (lgM - std::lgamma(double(k) + 1.0) - std::lgamma(double(M - k) + 1.0)) / kLn2;
    double coef = lgC + std::log2(double(M) / double(k));
    terms.push_back(coef + double(M - k) * l2e + double(k) * l2ne);
    vterms.push_back(coef + double(M) * l2e);
  }
  return {exp2_sum(std::move(terms)), exp2_sum(std::move(vterms))};
}

}  // namespace detail

inline LoglossAchTerms logloss_ach_terms(const ProblemInstance& inst, const Vec& p_yhat,
                                         double eps_prime) {
  inst.validate();
  if (!inst.direct_is_logloss())
    throw ConfigError("binning bound requires a log-loss direct task");
  Mat pi1 = indirect_excess_table(inst);
  if (p_yhat.size() != pi1.cols) throw ConfigError("codeword distribution has wrong length");
  LoglossAchTerms t;
  t.eps_prime = eps_prime;
  // group by distinct eta so the binomial sum runs once per level
  std::vector<std::pair<double, double>> levels;
  for (std::size_t x = 0; x < pi1.rows; ++x) {
    double eta = 0.0;
    for (std::size_t yh = 0; yh < pi1.cols; ++yh)
      if (pi1(x, yh) > eps_prime) eta += p_yhat[yh];
    levels.emplace_back(clip01(eta), inst.source.p_x[x]);
  }
  std::sort(levels.begin(), levels.end());
  std::size_t i = 0;
  while (i < levels.size()) {
    double eta = levels[i].first, mass = 0.0;
    while (i < levels.size() && levels[i].first == eta) {
      mass += levels[i].second;
      ++i;
    }
    auto [s2, s2v] = detail::logloss_binomial_sums(eta, inst.M);
    t.s1 += mass * pow_u64(eta, inst.M);
    t.s2 += mass * s2;
    t.s2_variant += mass * s2v;
  }
  return t;
}

// mass of the info-density tail P[iota(X) > D1 + log2 M - gamma]
inline double logloss_ach_tail(const ProblemInstance& inst, const Vec& iota, double gamma) {
  double cut = inst.D1 + std::log2(double(inst.M)) - gamma;
  double tail = 0.0;
  for (std::size_t x = 0; x < iota.size(); ++x)
    if (iota[x] > cut) tail += inst.source.p_x[x];
  return tail;
}

inline double ach_logloss_value(const ProblemInstance& inst, const LoglossAchTerms& t,
                                const Vec& iota, double gamma) {
  double pen = std::exp2(1.0 - gamma);
  return t.eps_prime * (1.0 - t.s1) + t.s1 * (1.0 + pen) + pen * t.s2 +
         logloss_ach_tail(inst, iota, gamma);
}

struct LoglossAchResult {
  double raw_value = kInf;
  double value = 1.0;  // clipped
  double gamma = 0.0;
  double eps_prime = 0.0;
  double variant_raw = kInf;  // same gamma/eps, binomial sum as displayed in
                              // the worked uniform-class example
};

namespace detail {

// golden-section sweep that only ever keeps evaluated points, so it is safe
// even when the profile is not unimodal
template <typename F>
inline std::pair<double, double> golden_refine(F&& f, double lo, double hi, double best_x,
                                               double best_v, int iters = 40) {
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  for (int i = 0; i < iters; ++i) {
    double m1 = b - gr * (b - a), m2 = a + gr * (b - a);
    double v1 = f(m1), v2 = f(m2);
    if (v1 < best_v) {
      best_v = v1;
      best_x = m1;
    }
    if (v2 < best_v) {
      best_v = v2;
      best_x = m2;
    }
    if (v1 <= v2)
      b = m2;
    else
      a = m1;
  }
  return {best_x, best_v};
}

}  // namespace detail

// Minimize the binning bound over the gamma grid (with golden-section
// refinement) and the eps_prime grid. extra_gammas lets a caller seed known
// good points, e.g. the previous optimum when sweeping M.
//
// Between the breakpoints gamma_x = D1 + log2 M - iota(x) the profile is
// A + B 2^-gamma with B > 0, so the true infimum over gamma sits at a
// breakpoint; those are always added to the candidates (nudged left so the
// strict tail comparison is safe against rounding).
inline LoglossAchResult ach_logloss_bound(const ProblemInstance& inst, const Vec& p_yhat,
                                          const Vec& eps_grid, const Vec& gamma_grid,
                                          const Vec& extra_gammas = {}) {
  Vec iota = info_density(inst.source);
  for (double& v : iota)
    if (std::isnan(v)) v = -kInf;  // zero-mass rows never contribute to the tail
  Vec cands;
  cands.push_back(0.0);
  double lm = std::log2(double(inst.M));
  for (double ix : iota) {
    if (ix == -kInf) continue;
    double g = inst.D1 + lm - ix;
    if (g > 0.0) cands.push_back(std::max(0.0, g - 1e-9));
  }
  for (double g : gamma_grid)
    if (g >= 0.0) cands.push_back(g);
  for (double g : extra_gammas)
    if (g >= 0.0) cands.push_back(g);
  LoglossAchResult best;
  for (double eps : eps_grid) {
    LoglossAchTerms terms = logloss_ach_terms(inst, p_yhat, eps);
    auto value_at = [&](double g) { return ach_logloss_value(inst, terms, iota, g); };
    double lo = kInf, lo_g = 0.0;
    for (double g : cands) {
      double v = value_at(g);
      if (v < lo) {
        lo = v;
        lo_g = g;
      }
    }
    double span = gamma_grid.empty() ? 1.0 : std::max(1.0, gamma_grid.back() - gamma_grid.front());
    auto [gs, vs] = detail::golden_refine(value_at, std::max(0.0, lo_g - 0.2 * span),
                                          lo_g + 0.2 * span, lo_g, lo);
    if (vs < best.raw_value) {
      best.raw_value = vs;
      best.value = clip01(vs);
      best.gamma = gs;
      best.eps_prime = eps;
      double pen = std::exp2(1.0 - gs);
      best.variant_raw = eps * (1.0 - terms.s1) + terms.s1 * (1.0 + pen) +
                         pen * terms.s2_variant + logloss_ach_tail(inst, iota, gs);
    }
  }
  return best;
}

// Parameter record for a single achievability evaluation, as fed by the CLI.
struct AchParams {
  Vec output_distribution;  // over reconstruction pairs or over yhat alone
  double eps_prime = 0.0;
  double gamma = 0.0;
  Vec gamma_grid;
  Vec eps_prime_grid;

  void validate() const {
    double s = 0.0;
    for (double v : output_distribution) {
      if (v < 0.0 || std::isnan(v)) throw ConfigError("output distribution has negative mass");
      s += v;
    }
    if (!output_distribution.empty() && std::abs(s - 1.0) > 1e-9)
      throw ConfigError("output distribution does not sum to 1");
    if (!(eps_prime >= 0.0 && eps_prime <= 1.0)) throw ConfigError("eps_prime outside [0, 1]");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
    for (double g : gamma_grid)
      if (!(g >= 0.0)) throw ConfigError("gamma grid entries must be nonnegative");
    for (double e : eps_prime_grid)
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eps_prime grid entries outside [0, 1]");
  }
};

// Binning-bound curve for the uniform-class binomial family: uniform
// reconstruction of the class label, eps_prime = 0, bound minimized over
// gamma per M through the generic machinery above.
inline BoundCurve example_achievability_curve(std::size_t m, std::size_t n, double p, double D1,
                                              const std::vector<std::uint64_t>& Ms,
                                              double D2 = 0.5) {
  ProblemInstance inst;
  inst.source = src::build_binomial_class_source(m, n, p);
  inst.d1 = src::DistortionSpec::logloss();
  inst.d2 = src::DistortionSpec::hamming();
  inst.D1 = D1;
  inst.D2 = D2;
  inst.M = 1;
  inst.validate();
  Vec p_yhat(inst.source.y_size(), 1.0 / double(inst.source.y_size()));
  Vec iota = info_density(inst.source);
  double max_iota = 0.0;
  for (double v : iota)
    if (!std::isnan(v)) max_iota = std::max(max_iota, v);

  BoundCurve curve;
  curve.tag = "example_ach";
  curve.direction = "upper";
  for (std::uint64_t M : Ms) {
    ProblemInstance cur = inst.with_m(M);
    Vec grid = tenth_grid(max_iota + std::log2(double(M)));
    LoglossAchResult r = ach_logloss_bound(cur, p_yhat, Vec{0.0}, grid);
    BoundPoint pt;
    pt.M = M;
    pt.value = r.value;
    pt.raw_value = r.raw_value;
    pt.params = "{\"m\":" + std::to_string(m) + ",\"n\":" + std::to_string(n) +
                ",\"p\":" + json_num(p) + ",\"d1\":" + json_num(D1) + ",\"d2\":" + json_num(D2) +
                ",\"eps_prime\":0,\"gamma\":" + json_num(r.gamma) +
                ",\"variant_raw\":" + json_num(r.variant_raw) + "}";
    curve.points.push_back(pt);
  }
  return curve;
}

}  // namespace jir::ach
