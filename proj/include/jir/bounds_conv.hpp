#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "jir/common.hpp"
#include "jir/rd.hpp"
#include "jir/simplex.hpp"
#include "jir/source_model.hpp"
#include "jir/tilted.hpp"

//
// Converse (lower) bounds on the excess probability, driven by tilted
// information thresholds. Two evaluation modes:
//
//   sup-inf (default): for each gamma the inner minimization over
//   reconstruction conditionals decouples per source symbol and is solved
//   exactly; the sup over the gamma grid of these values is a valid, possibly
//   loosened, lower bound.
//
//   exact LP: the full min over product conditionals of the max over the
//   gamma grid, as one linear program. Always >= the sup-inf value and still
//   a valid lower bound.
//

namespace jir::conv {

using src::ProblemInstance;
using tilt::TiltedEvaluator;

struct ConvResult {
  double value = 0.0;      // clipped to [0, 1]
  double raw_value = 0.0;  // before clipping (can be negative)
  double gamma = 0.0;      // winning grid point (sup-inf mode)
  std::string mode;        // "sup-inf" or "lp"
  double raw_supinf = kNaN;
  double raw_lp = kNaN;
  Vec gamma_values;  // per-gamma sup-inf values; each is a valid bound alone
};

// gamma grid shared between bound families so curves are comparable
inline Vec default_gamma_grid(const ProblemInstance& inst) {
  Vec iota = src::info_density(inst.source);
  double mx = 0.0;
  for (double v : iota)
    if (!std::isnan(v)) mx = std::max(mx, v);
  return tenth_grid(mx + std::log2(double(inst.M)));
}

namespace detail {

// Sup over the gamma grid of sum_x p_x min_col cost(x, col, gamma) - 2^-gamma
// where cost thresholds the per-(x, col) exceedance mass. cost_mass(x, col,
// cut) must return sum over y of p(y|x) 1{j(x, y, col) >= cut}.
template <typename CostFn>
inline ConvResult sup_inf_over_grid(const Vec& p_x, std::size_t ncols, const Vec& gamma_grid,
                                    double log2_m, CostFn&& cost_mass) {
  ConvResult res;
  res.mode = "sup-inf";
  res.raw_value = -kInf;
  for (double g : gamma_grid) {
    double cut = log2_m + g;
    double total = 0.0;
    for (std::size_t x = 0; x < p_x.size(); ++x) {
      if (p_x[x] <= 0.0) continue;
      double best = kInf;
      for (std::size_t col = 0; col < ncols; ++col) best = std::min(best, cost_mass(x, col, cut));
      total += p_x[x] * best;
    }
    double v = total - std::exp2(-g);
    res.gamma_values.push_back(v);
    if (v > res.raw_value) {
      res.raw_value = v;
      res.gamma = g;
    }
  }
  res.raw_supinf = res.raw_value;
  res.value = clip01(res.raw_value);
  return res;
}

// min over product conditionals P(col|x) of max over the grid, as an LP:
// minimize t subject to sum_{x,col} p_x cost_g(x,col) P(col|x) - t <= 2^-g
// and per-x simplex rows; t free via t = t+ - t-.
template <typename CostFn>
inline double exact_lp_value(const Vec& p_x, std::size_t ncols, const Vec& gamma_grid,
                             double log2_m, CostFn&& cost_mass) {
  std::size_t nx = p_x.size();
  std::size_t nv = nx * ncols + 2;  // P(col|x) then t+, t-
  Mat a_ub(gamma_grid.size(), nv, 0.0);
  Vec b_ub(gamma_grid.size());
  for (std::size_t gi = 0; gi < gamma_grid.size(); ++gi) {
    double cut = log2_m + gamma_grid[gi];
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t col = 0; col < ncols; ++col)
        a_ub(gi, x * ncols + col) = p_x[x] * cost_mass(x, col, cut);
    a_ub(gi, nx * ncols) = -1.0;
    a_ub(gi, nx * ncols + 1) = 1.0;
    b_ub[gi] = std::exp2(-gamma_grid[gi]);
  }
  Mat a_eq(nx, nv, 0.0);
  Vec b_eq(nx, 1.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t col = 0; col < ncols; ++col) a_eq(x, x * ncols + col) = 1.0;
  Vec c(nv, 0.0);
  c[nx * ncols] = 1.0;
  c[nx * ncols + 1] = -1.0;
  LpResult lp = solve_lp(c, a_ub, b_ub, a_eq, b_eq);
  if (!lp.feasible || !lp.bounded)
    throw SolverError("converse LP did not solve", kNaN, kNaN, 0);
  return lp.objective;
}

}  // namespace detail

// General product-alphabet converse evaluated against a joint rate-distortion
// solution. Each gamma grid point alone is a valid lower bound; so is the LP
// value over the whole grid.
inline ConvResult conv_joint_bound(const ProblemInstance& inst, const rd::RDSolution& sol,
                                   const Vec& gamma_grid, bool exact_lp = false) {
  inst.validate();
  if (inst.direct_is_logloss())
    throw ConfigError("log-loss direct tasks use the log-loss converse");
  if (sol.conditional.empty() || sol.xhat_count == 0 || sol.yhat_count == 0)
    throw ConfigError("joint converse needs a product-alphabet rate-distortion solution");
  TiltedEvaluator ev = tilt::make_evaluator(inst.source.p_x, sol);
  Mat d1m = inst.d1_matrix();
  Mat d2m = inst.d2_matrix();
  std::size_t ny = inst.source.y_size();
  std::size_t ncols = sol.xhat_count * sol.yhat_count;

  // j(x, y, col) table; small alphabets only
  std::vector<Mat> j_of_x(inst.source.x_size(), Mat(ny, ncols));
  for (std::size_t x = 0; x < inst.source.x_size(); ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t xh = 0; xh < sol.xhat_count; ++xh)
        for (std::size_t yh = 0; yh < sol.yhat_count; ++yh)
          j_of_x[x](y, xh * sol.yhat_count + yh) =
              tilt::joint_tilted(ev, d1m, d2m, x, y, xh, yh, inst.D1, inst.D2);

  auto cost_mass = [&](std::size_t x, std::size_t col, double cut) {
    double s = 0.0;
    for (std::size_t y = 0; y < ny; ++y)
      if (j_of_x[x](y, col) >= cut) s += inst.source.p_y_given_x(x, y);
    return s;
  };
  double log2_m = std::log2(double(inst.M));
  ConvResult res =
      detail::sup_inf_over_grid(inst.source.p_x, ncols, gamma_grid, log2_m, cost_mass);
  if (exact_lp) {
    res.raw_lp = detail::exact_lp_value(inst.source.p_x, ncols, gamma_grid, log2_m, cost_mass);
    res.mode = "lp";
    res.raw_value = res.raw_lp;
    res.value = clip01(res.raw_value);
  }
  return res;
}

// Log-loss converse. Case A thresholds the plain information density; case B
// works through the tilted information of the inference-only solution.
// Requires the log-loss regime (rate equality construction applicable).
inline ConvResult conv_logloss_bound(const ProblemInstance& inst, const Vec& gamma_grid,
                                     bool exact_lp = false) {
  inst.validate();
  if (!inst.direct_is_logloss())
    throw ConfigError("log-loss converse requires a log-loss direct task");
  rd::LoglossRegime regime = rd::logloss_regime(inst.source, inst.d2, inst.D1, inst.D2);
  if (!regime.applicable)
    throw InfeasibleError(
        "log-loss converse outside its regime: inference rate at the distortion floor must "
        "cover the direct rate");
  double log2_m = std::log2(double(inst.M));

  if (regime.case_a) {
    // threshold on iota_X alone (non-strict comparison)
    Vec iota = src::info_density(inst.source);
    ConvResult res;
    res.mode = "sup-inf";
    res.raw_value = -kInf;
    for (double g : gamma_grid) {
      double cut = inst.D1 + log2_m + g;
      double mass = 0.0;
      for (std::size_t x = 0; x < iota.size(); ++x)
        if (inst.source.p_x[x] > 0.0 && iota[x] >= cut) mass += inst.source.p_x[x];
      double v = mass - std::exp2(-g);
      res.gamma_values.push_back(v);
      if (v > res.raw_value) {
        res.raw_value = v;
        res.gamma = g;
      }
    }
    res.raw_supinf = res.raw_value;
    res.value = clip01(res.raw_value);
    return res;  // the LP relaxation has nothing to optimize here
  }

  TiltedEvaluator ev = tilt::make_evaluator(inst.source.p_x, regime.r2_solution);
  Mat d2m = inst.d2_matrix();
  std::size_t ny = inst.source.y_size();
  std::size_t nyh = ev.conditional.cols;
  auto cost_mass = [&](std::size_t x, std::size_t yh, double cut) {
    double s = 0.0;
    for (std::size_t y = 0; y < ny; ++y)
      if (tilt::indirect_tilted(ev, d2m, x, y, yh, inst.D2) >= cut)
        s += inst.source.p_y_given_x(x, y);
    return s;
  };
  ConvResult res =
      detail::sup_inf_over_grid(inst.source.p_x, nyh, gamma_grid, log2_m, cost_mass);
  if (exact_lp) {
    res.raw_lp = detail::exact_lp_value(inst.source.p_x, nyh, gamma_grid, log2_m, cost_mass);
    res.mode = "lp";
    res.raw_value = res.raw_lp;
    res.value = clip01(res.raw_value);
  }
  return res;
}

// Closed-form converse for the uniform-class binomial family: with M
// codewords at most M of the m equiprobable class labels can be answered
// correctly, so the failure mass is at least (m - M)/m.
inline BoundCurve example_converse_curve(std::size_t m, const std::vector<std::uint64_t>& Ms) {
  if (m == 0) throw ConfigError("class count must be positive");
  BoundCurve curve;
  curve.tag = "example_conv";
  curve.direction = "lower";
  for (std::uint64_t M : Ms) {
    BoundPoint pt;
    pt.M = M;
    double v = M >= m ? 0.0 : double(m - M) / double(m);
    pt.value = v;
    pt.raw_value = v;
    pt.params = "{\"m\":" + std::to_string(m) + "}";
    curve.points.push_back(pt);
  }
  return curve;
}

}  // namespace jir::conv
