#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "jir/common.hpp"
#include "jir/rd.hpp"
#include "jir/source_model.hpp"

//
// Tilted information densities taken against a rate-distortion solution:
// the plain information density between source symbol and reconstruction,
// plus the distortion-tilted variants whose threshold probabilities drive
// the converse bounds.
//

namespace jir::tilt {

using rd::RDSolution;
using rd::output_marginal;

struct TiltedEvaluator {
  Vec p_x;
  Mat conditional;      // w(reconstruction | x) from the solution
  Vec output_marginal;  // induced marginal over reconstructions
  Mat log_ratio;        // log2 w/q; -inf where w vanishes on a supported column
  double lambda1 = 0.0, lambda2 = 0.0;
  std::size_t xhat_count = 0, yhat_count = 0;
  std::vector<Vec> logloss_posteriors;

  // Columns with zero induced mass fall back to the prior posterior
  // (density 0): any choice of a per-column posterior keeps
  // sum_x p_x 2^density <= 1, which is all converse validity needs, and the
  // prior keeps those columns from absorbing the per-x minimization.
  double density_extended(std::size_t x, std::size_t col) const {
    return output_marginal[col] > 0.0 ? log_ratio(x, col) : 0.0;
  }
};

inline TiltedEvaluator make_evaluator(const Vec& p_x, const RDSolution& sol) {
  if (sol.conditional.empty())
    throw ConfigError("tilted evaluation needs a solution with an explicit conditional");
  if (sol.conditional.rows != p_x.size())
    throw ConfigError("tilted evaluation: conditional does not match the source");
  TiltedEvaluator ev;
  ev.p_x = p_x;
  ev.conditional = sol.conditional;
  ev.output_marginal = output_marginal(p_x, sol.conditional);
  ev.log_ratio = Mat(sol.conditional.rows, sol.conditional.cols, -kInf);
  for (std::size_t x = 0; x < sol.conditional.rows; ++x)
    for (std::size_t j = 0; j < sol.conditional.cols; ++j)
      if (sol.conditional(x, j) > 0.0 && ev.output_marginal[j] > 0.0)
        ev.log_ratio(x, j) = std::log2(sol.conditional(x, j) / ev.output_marginal[j]);
  ev.lambda1 = sol.lambda1.value_or(0.0);
  ev.lambda2 = sol.lambda2.value_or(0.0);
  ev.xhat_count = sol.xhat_count;
  ev.yhat_count = sol.yhat_count;
  ev.logloss_posteriors = sol.logloss_posteriors;
  return ev;
}

// log2 of the posterior-to-prior ratio for (x, reconstruction column)
inline double mutual_info_density(const TiltedEvaluator& ev, std::size_t x, std::size_t col) {
  if (x >= ev.log_ratio.rows || col >= ev.log_ratio.cols)
    throw std::domain_error("information density: index out of range");
  if (!(ev.output_marginal[col] > 0.0))
    throw std::domain_error("information density undefined: reconstruction has zero output mass");
  return ev.log_ratio(x, col);
}

// Inference-only tilted density: density(x; yh) + lambda2 * (d2(y, yh) - D2).
inline double indirect_tilted(const TiltedEvaluator& ev, const Mat& d2m, std::size_t x,
                              std::size_t y, std::size_t yh, double D2) {
  return ev.density_extended(x, yh) + ev.lambda2 * (d2m(y, yh) - D2);
}

// Joint tilted density over a product reconstruction pair.
inline double joint_tilted(const TiltedEvaluator& ev, const Mat& d1m, const Mat& d2m,
                           std::size_t x, std::size_t y, std::size_t xh, std::size_t yh,
                           double D1, double D2) {
  if (ev.yhat_count == 0 || ev.xhat_count == 0)
    throw ConfigError("joint tilted density needs a product-alphabet solution");
  std::size_t col = xh * ev.yhat_count + yh;
  return ev.density_extended(x, col) + ev.lambda1 * (d1m(x, xh) - D1) +
         ev.lambda2 * (d2m(y, yh) - D2);
}

// Joint tilted density for a log-loss achiever, where the direct
// reconstruction is the posterior attached to yh. With lambda1 = 1 the
// posterior cancels against the density, leaving iota_X(x) - D1; the code
// uses that identity so zero-posterior symbols stay well defined.
inline double joint_tilted_logloss(const TiltedEvaluator& ev, const Mat& d2m, std::size_t x,
                                   std::size_t y, std::size_t yh, double D1, double D2) {
  if (ev.logloss_posteriors.empty())
    throw ConfigError("log-loss tilted density needs a posterior-built solution");
  double pen2 = ev.lambda2 * (d2m(y, yh) - D2);
  if (ev.lambda1 == 0.0) return ev.density_extended(x, yh) + pen2;
  if (ev.lambda1 == 1.0) {
    if (!(ev.p_x[x] > 0.0))
      throw std::domain_error("tilted density undefined off the source support");
    return -std::log2(ev.p_x[x]) - D1 + pen2;
  }
  double post = ev.logloss_posteriors[yh][x];
  double d1 = post > 0.0 ? -std::log2(post) : kInf;
  return ev.density_extended(x, yh) + ev.lambda1 * (d1 - D1) + pen2;
}

}  // namespace jir::tilt
