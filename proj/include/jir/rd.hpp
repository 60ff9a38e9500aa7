#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jir/common.hpp"
#include "jir/source_model.hpp"

//
// Rate-distortion machinery: fixed-slope alternating minimization, scalar
// solvers for the direct and inference tasks, the two-constraint joint
// solver, and the log-loss closed forms plus the posterior-based achiever
// construction that certifies rate equality in the log-loss regime.
//
// All rates and slopes are in bits.
//

namespace jir::rd {

using src::Alphabet;
using src::DistortionKind;
using src::DistortionSpec;
using src::JointSource;
using src::entropy;
using src::surrogate_distortion;

constexpr double kLambdaMax = 60.0;       // slope cap for targets at the distortion floor
constexpr double kBaTol = 1e-12;          // Lagrangian stall tolerance
constexpr double kBaGapTol = 1e-7;        // duality gap accepted as optimal
constexpr int kBaMaxIters = 10000;

struct SolverDiagnostics {
  int iterations = 0;
  double duality_gap = 0.0;
  double raw_rate = kNaN;  // unclipped value where the rate formula can go negative
  std::vector<std::string> warnings;
};

struct RDSolution {
  double rate = 0.0;
  std::optional<double> target_d1, target_d2;
  Mat conditional;  // w(reconstruction | x); empty for rate-only answers
  std::optional<double> lambda1, lambda2;
  std::optional<double> achieved_d1, achieved_d2;
  std::size_t xhat_count = 0, yhat_count = 0;  // set for product-alphabet solutions
  std::vector<Vec> logloss_posteriors;         // per output column, log-loss achievers only
  SolverDiagnostics diag;
};

inline double d_min(const Vec& p_x, const Mat& d) {
  if (d.rows != p_x.size()) throw ConfigError("d_min: shape mismatch");
  double acc = 0.0;
  for (std::size_t x = 0; x < d.rows; ++x) {
    double best = kInf;
    for (std::size_t j = 0; j < d.cols; ++j) best = std::min(best, d(x, j));
    acc += p_x[x] * best;
  }
  return acc;
}

inline Vec output_marginal(const Vec& p_x, const Mat& w) {
  Vec q(w.cols, 0.0);
  for (std::size_t x = 0; x < w.rows; ++x)
    for (std::size_t j = 0; j < w.cols; ++j) q[j] += p_x[x] * w(x, j);
  return q;
}

inline double mutual_information(const Vec& p_x, const Mat& w) {
  Vec q = output_marginal(p_x, w);
  double i = 0.0;
  for (std::size_t x = 0; x < w.rows; ++x) {
    if (p_x[x] <= 0.0) continue;
    for (std::size_t j = 0; j < w.cols; ++j)
      if (w(x, j) > 0.0) i += p_x[x] * w(x, j) * std::log2(w(x, j) / q[j]);
  }
  return i;
}

inline double expected_distortion(const Vec& p_x, const Mat& w, const Mat& d) {
  double acc = 0.0;
  for (std::size_t x = 0; x < w.rows; ++x)
    for (std::size_t j = 0; j < w.cols; ++j) acc += p_x[x] * w(x, j) * d(x, j);
  return acc;
}

struct BaResult {
  double rate = 0.0;
  double dist_a = 0.0, dist_b = 0.0;
  Mat conditional;
  int iterations = 0;
  double duality_gap = 0.0;
};

// Alternating minimization of I(X;J) + la*E[da] + lb*E[db] over the
// conditional. The returned conditional is the exponential tilt of the final
// output marginal, so it is strictly positive on every supported column.
inline BaResult ba_two_slopes(const Vec& p_x, const Mat& da, const Mat& db, double la, double lb) {
  std::size_t n = da.rows, m = da.cols;
  if (db.rows != n || db.cols != m || p_x.size() != n)
    throw ConfigError("fixed-slope solver: shape mismatch");
  if (la < 0.0 || lb < 0.0) throw ConfigError("fixed-slope solver: slopes must be nonnegative");

  Vec q(m, 1.0 / double(m));
  Mat w(n, m, 0.0);
  Vec lw(m);
  auto tilt_rows = [&]() {
    for (std::size_t x = 0; x < n; ++x) {
      double mx = -kInf;
      for (std::size_t j = 0; j < m; ++j) {
        lw[j] = q[j] > 0.0 ? std::log2(q[j]) - la * da(x, j) - lb * db(x, j) : -kInf;
        mx = std::max(mx, lw[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < m; ++j) lw[j] = lw[j] > -kInf ? std::exp2(lw[j] - mx) : 0.0;
      for (std::size_t j = 0; j < m; ++j) z += lw[j];
      for (std::size_t j = 0; j < m; ++j) w(x, j) = lw[j] / z;
    }
  };

  double prev = kInf;
  int it = 0;
  bool converged = false;
  for (it = 1; it <= kBaMaxIters; ++it) {
    tilt_rows();
    q = output_marginal(p_x, w);
    double lagr = mutual_information(p_x, w) + la * expected_distortion(p_x, w, da) +
                  lb * expected_distortion(p_x, w, db);
    if (std::abs(prev - lagr) < kBaTol) {
      converged = true;
      break;
    }
    prev = lagr;
  }
  tilt_rows();  // final conditional consistent with the converged marginal

  BaResult r;
  r.conditional = w;
  r.rate = mutual_information(p_x, w);
  r.dist_a = expected_distortion(p_x, w, da);
  r.dist_b = expected_distortion(p_x, w, db);
  r.iterations = it;
  double primal = r.rate + la * r.dist_a + lb * r.dist_b;
  double dual = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (p_x[x] <= 0.0) continue;
    double mx = -kInf;
    for (std::size_t j = 0; j < m; ++j) {
      lw[j] = q[j] > 0.0 ? std::log2(q[j]) - la * da(x, j) - lb * db(x, j) : -kInf;
      mx = std::max(mx, lw[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (lw[j] > -kInf) z += std::exp2(lw[j] - mx);
    dual -= p_x[x] * (mx + std::log2(z));
  }
  r.duality_gap = primal - dual;
  // Primal and dual agree exactly at a fixed point of the iteration, so a
  // near-zero gap certifies the solve even when successive Lagrangian values
  // kept chattering at rounding level and the stall test never fired.
  if (!converged && std::abs(r.duality_gap) > kBaGapTol)
    throw SolverError("fixed-slope solver stalled after " + std::to_string(kBaMaxIters) +
                          " iterations (gap " + fmt_g17(r.duality_gap) + ")",
                      r.rate, r.dist_a, it);
  return r;
}

inline BaResult ba_fixed_slope(const Vec& p_x, const Mat& d, double lambda) {
  if (lambda == 0.0) {
    // slope zero: the optimum is rate 0 with the best single reconstruction
    std::size_t best = 0;
    double bestv = kInf;
    for (std::size_t j = 0; j < d.cols; ++j) {
      double e = 0.0;
      for (std::size_t x = 0; x < d.rows; ++x) e += p_x[x] * d(x, j);
      if (e < bestv) {
        bestv = e;
        best = j;
      }
    }
    BaResult r;
    r.conditional = Mat(d.rows, d.cols, 0.0);
    for (std::size_t x = 0; x < d.rows; ++x) r.conditional(x, best) = 1.0;
    r.rate = 0.0;
    r.dist_a = bestv;
    r.iterations = 0;
    r.duality_gap = 0.0;
    return r;
  }
  Mat zero(d.rows, d.cols, 0.0);
  return ba_two_slopes(p_x, d, zero, lambda, 0.0);
}

namespace detail {

struct ScalarSolve {
  BaResult point;
  double lambda = 0.0;
  int total_iterations = 0;
  std::vector<std::string> warnings;
};

// Bisect the slope until the achieved distortion meets the target. If the
// distortion jumps across the target inside a collapsed bracket (linear piece
// of the rate curve) the two endpoints are blended, which lands on the target
// exactly and is optimal on a true linear segment.
inline ScalarSolve solve_scalar(const Vec& p_x, const Mat& d, double target) {
  ScalarSolve out;
  double dmin = d_min(p_x, d);
  if (target < dmin - 1e-9)
    throw InfeasibleError("distortion target " + std::to_string(target) +
                          " below the floor " + std::to_string(dmin));

  BaResult zero = ba_fixed_slope(p_x, d, 0.0);
  if (target >= zero.dist_a - 1e-12) {
    out.point = zero;
    out.lambda = 0.0;
    return out;
  }
  double lo = 0.0;
  BaResult lo_pt = zero;
  BaResult hi_pt = ba_fixed_slope(p_x, d, kLambdaMax);
  out.total_iterations += hi_pt.iterations;
  double hi = kLambdaMax;
  if (target <= hi_pt.dist_a) {
    out.point = hi_pt;
    out.lambda = kLambdaMax;
    out.warnings.push_back("slope capped at " + std::to_string(kLambdaMax) +
                           " bits/unit for a target at the distortion floor");
    return out;
  }
  while (hi - lo > 1e-11) {
    double mid = 0.5 * (lo + hi);
    BaResult mid_pt = ba_fixed_slope(p_x, d, mid);
    out.total_iterations += mid_pt.iterations;
    if (std::abs(mid_pt.dist_a - target) <= 1e-9) {
      out.point = mid_pt;
      out.lambda = mid;
      return out;
    }
    if (mid_pt.dist_a > target) {
      lo = mid;
      lo_pt = mid_pt;
    } else {
      hi = mid;
      hi_pt = mid_pt;
    }
  }
  double span = lo_pt.dist_a - hi_pt.dist_a;
  double alpha = span > 0.0 ? (target - hi_pt.dist_a) / span : 0.0;
  alpha = clip01(alpha);
  BaResult blend;
  blend.conditional = Mat(d.rows, d.cols, 0.0);
  for (std::size_t i = 0; i < blend.conditional.a.size(); ++i)
    blend.conditional.a[i] = alpha * lo_pt.conditional.a[i] + (1.0 - alpha) * hi_pt.conditional.a[i];
  blend.rate = mutual_information(p_x, blend.conditional);
  blend.dist_a = expected_distortion(p_x, blend.conditional, d);
  blend.iterations = 0;
  blend.duality_gap = std::max(lo_pt.duality_gap, hi_pt.duality_gap);
  out.point = blend;
  out.lambda = 0.5 * (lo + hi);
  out.warnings.push_back("target sits on a linear segment; returned the bracket blend");
  return out;
}

}  // namespace detail

// R1(D1): best rate for the direct task alone.
inline RDSolution solve_r1(const Vec& p_x, const DistortionSpec& d1, double D1,
                           const Alphabet& x_alphabet) {
  if (d1.kind == DistortionKind::logloss)
    throw ConfigError("use the log-loss closed form for the direct task");
  Mat d = d1.effective_matrix(x_alphabet);
  detail::ScalarSolve s = detail::solve_scalar(p_x, d, D1);
  RDSolution sol;
  sol.rate = s.point.rate;
  sol.target_d1 = D1;
  sol.conditional = s.point.conditional;
  sol.lambda1 = s.lambda;
  sol.achieved_d1 = s.point.dist_a;
  sol.xhat_count = d.cols;
  sol.diag.iterations = s.total_iterations;
  sol.diag.duality_gap = s.point.duality_gap;
  sol.diag.warnings = s.warnings;
  return sol;
}

// R2(D2): best rate for inferring Y from a description of X, solved through
// the surrogate distortion dt2(x, yh) = E[d2(Y, yh) | X = x].
inline RDSolution solve_r2(const JointSource& source, const DistortionSpec& d2, double D2) {
  Mat dt2 = surrogate_distortion(source, d2);
  detail::ScalarSolve s = detail::solve_scalar(source.p_x, dt2, D2);
  RDSolution sol;
  sol.rate = s.point.rate;
  sol.target_d2 = D2;
  sol.conditional = s.point.conditional;
  sol.lambda2 = s.lambda;
  sol.achieved_d2 = s.point.dist_a;
  sol.yhat_count = dt2.cols;
  sol.diag.iterations = s.total_iterations;
  sol.diag.duality_gap = s.point.duality_gap;
  sol.diag.warnings = s.warnings;
  return sol;
}

// R(D1, D2): joint description of both tasks over the product reconstruction
// alphabet. Slopes are searched on a coarse logarithmic grid, then refined by
// coordinate-wise bisection until both targets are met.
inline RDSolution solve_joint(const JointSource& source, const DistortionSpec& d1,
                              const DistortionSpec& d2, double D1, double D2) {
  if (d1.kind == DistortionKind::logloss)
    throw ConfigError("use the log-loss achiever construction for the joint problem");
  Mat d1m = d1.effective_matrix(source.x_alphabet);
  Mat dt2 = surrogate_distortion(source, d2);
  const Vec& p_x = source.p_x;
  double d1_floor = d_min(p_x, d1m), d2_floor = d_min(p_x, dt2);
  if (D1 < d1_floor - 1e-9 || D2 < d2_floor - 1e-9)
    throw InfeasibleError("joint targets outside the achievable region: floors are (" +
                          std::to_string(d1_floor) + ", " + std::to_string(d2_floor) +
                          "), best single reconstructions reach (" +
                          std::to_string(ba_fixed_slope(p_x, d1m, 0.0).dist_a) + ", " +
                          std::to_string(ba_fixed_slope(p_x, dt2, 0.0).dist_a) + ")");

  std::size_t nxh = d1m.cols, nyh = dt2.cols, nx = source.x_size();
  RDSolution sol;
  sol.target_d1 = D1;
  sol.target_d2 = D2;
  sol.xhat_count = nxh;
  sol.yhat_count = nyh;

  BaResult a0 = ba_fixed_slope(p_x, d1m, 0.0);
  BaResult b0 = ba_fixed_slope(p_x, dt2, 0.0);
  auto best_column = [&](const BaResult& r) {
    for (std::size_t j = 0; j < r.conditional.cols; ++j)
      if (r.conditional(0, j) > 0.0) return j;
    return std::size_t{0};
  };

  auto embed = [&](const Mat& w, bool w_is_direct, std::size_t fixed_col) {
    Mat out(nx, nxh * nyh, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t j = 0; j < w.cols; ++j) {
        std::size_t pair = w_is_direct ? j * nyh + fixed_col : fixed_col * nyh + j;
        out(x, pair) += w(x, j);
      }
    return out;
  };

  bool d1_inactive = D1 >= a0.dist_a - 1e-12;
  bool d2_inactive = D2 >= b0.dist_a - 1e-12;
  if (d1_inactive && d2_inactive) {
    sol.rate = 0.0;
    sol.conditional = Mat(nx, nxh * nyh, 0.0);
    std::size_t pair = best_column(a0) * nyh + best_column(b0);
    for (std::size_t x = 0; x < nx; ++x) sol.conditional(x, pair) = 1.0;
    sol.lambda1 = 0.0;
    sol.lambda2 = 0.0;
    sol.achieved_d1 = a0.dist_a;
    sol.achieved_d2 = b0.dist_a;
    return sol;
  }
  if (d1_inactive) {
    RDSolution r2 = solve_r2(source, d2, D2);
    sol.rate = r2.rate;
    sol.conditional = embed(r2.conditional, false, best_column(a0));
    sol.lambda1 = 0.0;
    sol.lambda2 = r2.lambda2;
    sol.achieved_d1 = a0.dist_a;
    sol.achieved_d2 = r2.achieved_d2;
    sol.diag = r2.diag;
    return sol;
  }
  if (d2_inactive) {
    RDSolution r1 = solve_r1(p_x, d1, D1, source.x_alphabet);
    sol.rate = r1.rate;
    sol.conditional = embed(r1.conditional, true, best_column(b0));
    sol.lambda1 = r1.lambda1;
    sol.lambda2 = 0.0;
    sol.achieved_d1 = r1.achieved_d1;
    sol.achieved_d2 = b0.dist_a;
    sol.diag = r1.diag;
    return sol;
  }

  // both constraints active: product-alphabet distortion pair
  Mat da(nx, nxh * nyh, 0.0), db(nx, nxh * nyh, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t xh = 0; xh < nxh; ++xh)
      for (std::size_t yh = 0; yh < nyh; ++yh) {
        da(x, xh * nyh + yh) = d1m(x, xh);
        db(x, xh * nyh + yh) = dt2(x, yh);
      }

  int total_iters = 0;
  auto eval = [&](double la, double lb) {
    BaResult r = ba_two_slopes(p_x, da, db, la, lb);
    total_iters += r.iterations;
    return r;
  };

  // coarse grid by dual value; a stalled corner is just skipped
  double best_dual = -kInf, la = 1.0, lb = 1.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      double ga = 0.01 * std::pow(kLambdaMax / 0.01, i / 15.0);
      double gb = 0.01 * std::pow(kLambdaMax / 0.01, j / 15.0);
      try {
        BaResult r = eval(ga, gb);
        double dual = r.rate + ga * (r.dist_a - D1) + gb * (r.dist_b - D2);
        if (dual > best_dual) {
          best_dual = dual;
          la = ga;
          lb = gb;
        }
      } catch (const SolverError&) {
      }
    }

  BaResult cur = eval(la, lb);
  std::vector<std::string> warnings;
  for (int sweep = 0; sweep < 40; ++sweep) {
    bool a_ok = (cur.dist_a <= D1 + 1e-6) && (std::abs(cur.dist_a - D1) <= 1e-5 || la <= 1e-12);
    bool b_ok = (cur.dist_b <= D2 + 1e-6) && (std::abs(cur.dist_b - D2) <= 1e-5 || lb <= 1e-12);
    if (a_ok && b_ok) break;
    for (int coord = 0; coord < 2; ++coord) {
      double& lam = coord == 0 ? la : lb;
      double target = coord == 0 ? D1 : D2;
      auto dist_of = [&](const BaResult& r) { return coord == 0 ? r.dist_a : r.dist_b; };
      double zero_other = coord == 0 ? lb : la;
      BaResult at0 = coord == 0 ? eval(0.0, zero_other) : eval(zero_other, 0.0);
      if (dist_of(at0) <= target + 1e-9) {
        lam = 0.0;
        cur = at0;
        continue;
      }
      double lo = 0.0, hi = kLambdaMax;
      BaResult hi_pt = coord == 0 ? eval(hi, lb) : eval(la, hi);
      if (dist_of(hi_pt) > target + 1e-6) {
        lam = kLambdaMax;
        cur = hi_pt;
        warnings.push_back("slope capped on coordinate " + std::to_string(coord + 1));
        continue;
      }
      BaResult best = hi_pt;
      double best_lam = hi;
      while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        BaResult mid_pt = coord == 0 ? eval(mid, lb) : eval(la, mid);
        double dm = dist_of(mid_pt);
        if (dm <= target) {
          hi = mid;
          best = mid_pt;
          best_lam = mid;
          if (target - dm <= 1e-7) break;
        } else {
          lo = mid;
        }
      }
      lam = best_lam;
      cur = best;
    }
  }
  if (cur.dist_a > D1 + 1e-6 || cur.dist_b > D2 + 1e-6)
    warnings.push_back("joint slope search left residual slack: achieved (" +
                       std::to_string(cur.dist_a) + ", " + std::to_string(cur.dist_b) + ")");

  sol.rate = cur.rate;
  sol.conditional = cur.conditional;
  sol.lambda1 = la;
  sol.lambda2 = lb;
  sol.achieved_d1 = cur.dist_a;
  sol.achieved_d2 = cur.dist_b;
  sol.diag.iterations = total_iters;
  sol.diag.duality_gap = cur.duality_gap;
  sol.diag.warnings = std::move(warnings);
  return sol;
}

// Direct-task rate under log-loss: H(X) - D1, clipped at zero. Rate-only
// answer; the posterior construction below supplies an explicit achiever.
inline RDSolution logloss_r1(const Vec& p_x, double D1) {
  double h = entropy(p_x);
  RDSolution sol;
  sol.diag.raw_rate = h - D1;
  sol.rate = std::max(0.0, h - D1);
  sol.target_d1 = D1;
  sol.lambda1 = D1 < h ? 1.0 : 0.0;
  return sol;
}

struct MergedPosteriors {
  Mat conditional;                       // |X| x kept columns
  std::vector<Vec> posteriors;           // posterior over X per kept column
  std::vector<std::size_t> kept_columns; // original column indices
};

// Collapse output columns that induce the same posterior over X. Among
// duplicates the column with the smaller posterior-expected inference
// distortion survives (ties to the lower index), so merging never increases
// E[dt2] and leaves the mutual information unchanged.
inline MergedPosteriors merge_duplicate_posteriors(const Vec& p_x, const Mat& w, const Mat& dt2,
                                                   double tol = 1e-9) {
  Vec q = output_marginal(p_x, w);
  std::size_t m = w.cols, nx = w.rows;
  std::vector<Vec> post(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (q[j] <= 0.0) continue;
    post[j].resize(nx);
    for (std::size_t x = 0; x < nx; ++x) post[j][x] = p_x[x] * w(x, j) / q[j];
  }
  auto same = [&](std::size_t a, std::size_t b) {
    for (std::size_t x = 0; x < nx; ++x)
      if (std::abs(post[a][x] - post[b][x]) > tol) return false;
    return true;
  };
  auto exp_dist = [&](std::size_t j) {
    double e = 0.0;
    for (std::size_t x = 0; x < nx; ++x) e += post[j][x] * dt2(x, j);
    return e;
  };
  std::vector<std::size_t> rep(m, m);  // column -> representative
  std::vector<std::size_t> reps;
  for (std::size_t j = 0; j < m; ++j) {
    if (q[j] <= 0.0) continue;
    bool grouped = false;
    for (std::size_t& r : reps) {
      if (same(j, r)) {
        if (exp_dist(j) < exp_dist(r)) r = j;  // keep the cheaper duplicate
        rep[j] = r;  // provisional; fixed up below once groups are final
        grouped = true;
        break;
      }
    }
    if (!grouped) reps.push_back(j);
  }
  // rebuild the assignment against the final representatives
  for (std::size_t j = 0; j < m; ++j) {
    if (q[j] <= 0.0) continue;
    for (std::size_t r : reps)
      if (same(j, r)) {
        rep[j] = r;
        break;
      }
  }
  std::sort(reps.begin(), reps.end());
  MergedPosteriors out;
  out.kept_columns = reps;
  out.conditional = Mat(nx, reps.size(), 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (q[j] <= 0.0) continue;
    std::size_t slot =
        std::size_t(std::lower_bound(reps.begin(), reps.end(), rep[j]) - reps.begin());
    for (std::size_t x = 0; x < nx; ++x) out.conditional(x, slot) += w(x, j);
  }
  out.posteriors.reserve(reps.size());
  for (std::size_t r : reps) out.posteriors.push_back(post[r]);
  return out;
}

struct LoglossRegime {
  bool applicable = false;  // equality construction is available
  bool case_a = false;      // direct-rate branch dominates: R2(D2) < H(X) - D1
  double h_x = 0.0;
  double r1_raw = 0.0;      // H(X) - D1 before clipping
  double r2_at_d2 = 0.0;
  double r2_at_d2min = 0.0;
  double d2_floor = 0.0;
  RDSolution r2_solution;   // at D2
};

inline LoglossRegime logloss_regime(const JointSource& source, const DistortionSpec& d2,
                                    double D1, double D2) {
  Mat dt2 = surrogate_distortion(source, d2);
  LoglossRegime reg;
  reg.h_x = entropy(source.p_x);
  reg.r1_raw = reg.h_x - D1;
  reg.d2_floor = d_min(source.p_x, dt2);
  if (D2 < reg.d2_floor - 1e-9) {
    reg.applicable = false;
    return reg;
  }
  reg.r2_solution = solve_r2(source, d2, D2);
  reg.r2_at_d2 = reg.r2_solution.rate;
  reg.r2_at_d2min = solve_r2(source, d2, reg.d2_floor).rate;
  reg.applicable = reg.r2_at_d2min >= reg.r1_raw - 1e-9;
  reg.case_a = reg.r2_at_d2 < reg.r1_raw - 1e-9;
  return reg;
}

// Joint achiever for log-loss direct distortion: rate max(R1, R2), with the
// direct reconstruction equal to the posterior over X given the inference
// reconstruction, so the two outputs determine each other.
inline RDSolution logloss_joint_achiever(const JointSource& source, const DistortionSpec& d2,
                                         double D1, double D2) {
  LoglossRegime reg = logloss_regime(source, d2, D1, D2);
  if (!reg.applicable)
    throw InfeasibleError(
        "rate-equality construction unavailable: inference rate at the distortion floor (" +
        std::to_string(reg.r2_at_d2min) + ") is below H(X) - D1 = " + std::to_string(reg.r1_raw));
  double r1 = std::max(0.0, reg.r1_raw);
  RDSolution base = reg.r2_solution;
  int extra_iters = 0;
  if (reg.case_a) {
    // tighten the inference target until its rate matches the direct rate;
    // keep the iterate from the rate >= r1 side so E[d1] stays within D1
    double lo = reg.d2_floor, hi = D2;
    RDSolution best = solve_r2(source, d2, lo);
    extra_iters += best.diag.iterations;
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
      double mid = 0.5 * (lo + hi);
      RDSolution trial = solve_r2(source, d2, mid);
      extra_iters += trial.diag.iterations;
      if (trial.rate >= r1) {
        lo = mid;
        best = trial;
        if (trial.rate - r1 <= 1e-9) break;
      } else {
        hi = mid;
      }
    }
    base = best;
  }

  Mat dt2 = surrogate_distortion(source, d2);
  MergedPosteriors merged = merge_duplicate_posteriors(source.p_x, base.conditional, dt2);
  RDSolution sol;
  sol.rate = mutual_information(source.p_x, merged.conditional);
  sol.target_d1 = D1;
  sol.target_d2 = D2;
  sol.conditional = merged.conditional;
  sol.logloss_posteriors = merged.posteriors;
  sol.yhat_count = merged.posteriors.size();
  if (reg.case_a) {
    sol.lambda1 = 1.0;
    sol.lambda2 = 0.0;
  } else {
    sol.lambda1 = 0.0;
    sol.lambda2 = base.lambda2;
  }
  Vec q = output_marginal(source.p_x, merged.conditional);
  double cond_ent = 0.0, d2_ach = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    double h = 0.0;
    for (double v : merged.posteriors[j]) h -= xlog2x(v);
    cond_ent += q[j] * h;
    for (std::size_t x = 0; x < source.x_size(); ++x)
      d2_ach += source.p_x[x] * merged.conditional(x, j) * dt2(x, merged.kept_columns[j]);
  }
  sol.achieved_d1 = cond_ent;  // expected log-loss of the posterior reconstruction
  sol.achieved_d2 = d2_ach;
  sol.diag.iterations = base.diag.iterations + extra_iters;
  sol.diag.duality_gap = base.diag.duality_gap;
  sol.diag.warnings = base.diag.warnings;
  return sol;
}

}  // namespace jir::rd
