#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jir/common.hpp"
#include "jir/rng.hpp"
#include "jir/source_model.hpp"

//
// Ground truth and Monte Carlo: exhaustive search for the best single-shot
// code of a given size, and simulators for the three random-coding schemes
// whose ensemble bounds live in bounds_ach.
//

namespace jir::sim {

using src::ProblemInstance;
using src::indirect_excess_table;
using src::info_density;
using src::joint_excess_table;

struct CodeRealization {
  std::vector<std::uint32_t> encoder;                         // x -> cell
  std::vector<std::pair<std::uint32_t, std::uint32_t>> decoder;  // cell -> (xh, yh)
  std::vector<Vec> decoder_distributions;                     // cell -> xhat dist (log-loss)
  std::vector<std::uint32_t> decoder_yhat;                    // cell -> yh (log-loss)
};

struct SimReport {
  std::uint64_t trials = 0;
  std::uint64_t excess_count = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_enumeration_budget(std::uint64_t M, std::size_t nx, std::size_t a,
                                     std::size_t b, double budget) {
  double enumerations = std::pow(double(M), double(nx)) * double(a) * double(b);
  if (!(enumerations <= budget))
    throw BudgetError("exhaustive search needs ~" + std::to_string(enumerations) +
                      " cell evaluations (" + std::to_string(M) + "^" + std::to_string(nx) +
                      " encoders x " + std::to_string(a) + " x " + std::to_string(b) +
                      " reconstructions), over the budget of " + std::to_string(budget));
}

// Enumerate encoder maps up to cell relabeling (restricted growth strings,
// f[0] = 0 and f[i] <= 1 + max of the prefix): the optimal decoder only
// depends on the partition, so relabelings are symmetric duplicates.
// Enumeration order is lexicographic over the canonical maps.
template <typename Fn>
inline void for_each_canonical_encoder(std::size_t nx, std::uint64_t M, Fn&& fn) {
  std::uint32_t max_cell = std::uint32_t(std::min<std::uint64_t>(M, nx)) - 1;
  std::vector<std::uint32_t> f(nx, 0);
  auto rec = [&](auto&& self, std::size_t i, std::uint32_t prefix_max) -> void {
    if (i == nx) {
      fn(f);
      return;
    }
    std::uint32_t limit = i == 0 ? 0 : std::min<std::uint32_t>(prefix_max + 1, max_cell);
    for (std::uint32_t v = 0; v <= limit; ++v) {
      f[i] = v;
      self(self, i + 1, std::max(prefix_max, v));
    }
  };
  rec(rec, 0, 0);
}

}  // namespace detail

// Smallest achievable excess probability over all encoders into M cells and
// all decoders, by exhaustive search with per-cell decoder decoupling.
// Ties: lexicographically first canonical encoder, lowest (xh, yh) per cell.
inline std::pair<double, CodeRealization> exact_eps_star(const ProblemInstance& inst,
                                                         double budget = 1e8) {
  inst.validate();
  if (inst.direct_is_logloss())
    throw ConfigError("use the log-loss oracle for a log-loss direct task");
  std::size_t nx = inst.source.x_size(), nxh = inst.xhat_size(), nyh = inst.yhat_size();
  detail::check_enumeration_budget(inst.M, nx, nxh, nyh, budget);
  Mat pi = joint_excess_table(inst);
  std::size_t npairs = nxh * nyh;
  std::uint64_t cells = std::min<std::uint64_t>(inst.M, nx);

  double best_eps = kInf;
  std::vector<std::uint32_t> best_f;
  std::vector<std::uint32_t> best_pair;
  std::vector<double> cell_weight(cells * npairs);
  detail::for_each_canonical_encoder(nx, inst.M, [&](const std::vector<std::uint32_t>& f) {
    std::fill(cell_weight.begin(), cell_weight.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      double px = inst.source.p_x[x];
      if (px <= 0.0) continue;
      double* row = cell_weight.data() + std::size_t(f[x]) * npairs;
      const double* pirow = pi.a.data() + x * npairs;
      for (std::size_t j = 0; j < npairs; ++j) row[j] += px * pirow[j];
    }
    double eps = 0.0;
    std::vector<std::uint32_t> pick(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      const double* row = cell_weight.data() + c * npairs;
      double bestv = row[0];
      std::size_t bestj = 0;
      for (std::size_t j = 1; j < npairs; ++j)
        if (row[j] < bestv) {
          bestv = row[j];
          bestj = j;
        }
      eps += bestv;
      pick[c] = std::uint32_t(bestj);
    }
    if (eps < best_eps - 1e-15) {
      best_eps = eps;
      best_f = f;
      best_pair = pick;
    }
  });

  CodeRealization code;
  code.encoder = best_f;
  code.decoder.resize(cells, {0, 0});
  for (std::size_t c = 0; c < cells; ++c)
    code.decoder[c] = {std::uint32_t(best_pair[c] / nyh), std::uint32_t(best_pair[c] % nyh)};
  return {best_eps, code};
}

// Log-loss oracle. The best reconstruction distribution for a cell, given an
// inference reconstruction yh, spreads mass 2^-D1 over the floor(2^D1)
// symbols with the largest p_x(x) P[d2(Y, yh) <= D2 | X = x]; leftover mass
// goes to the covered symbol with the largest prior.
inline std::pair<double, CodeRealization> exact_eps_star_logloss(const ProblemInstance& inst,
                                                                 double budget = 1e8) {
  inst.validate();
  if (!inst.direct_is_logloss())
    throw ConfigError("log-loss oracle requires a log-loss direct task");
  std::size_t nx = inst.source.x_size(), nyh = inst.yhat_size();
  detail::check_enumeration_budget(inst.M, nx, nx, nyh, budget);
  Mat pi1 = indirect_excess_table(inst);
  std::uint64_t cells = std::min<std::uint64_t>(inst.M, nx);
  // 2^D1 support symbols fit in the reconstruction (capped before the exp2
  // can overflow the integer)
  std::uint64_t cover = std::uint64_t(std::floor(std::exp2(std::min(inst.D1, 62.0)) + 1e-9));
  if (cover < 1) cover = 1;
  if (cover > nx) cover = nx;

  // weight(x, yh) = p_x(x) * P[d2 <= D2 | x]
  Mat weight(nx, nyh, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t yh = 0; yh < nyh; ++yh)
      weight(x, yh) = inst.source.p_x[x] * (1.0 - pi1(x, yh));

  double best_eps = kInf;
  std::vector<std::uint32_t> best_f;
  std::vector<std::uint32_t> best_yh;
  std::vector<std::vector<std::size_t>> members(cells);
  std::vector<std::size_t> order;
  detail::for_each_canonical_encoder(nx, inst.M, [&](const std::vector<std::uint32_t>& f) {
    for (auto& m : members) m.clear();
    for (std::size_t x = 0; x < nx; ++x) members[f[x]].push_back(x);
    double eps = 0.0;
    std::vector<std::uint32_t> pick(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      double cell_mass = 0.0;
      for (std::size_t x : members[c]) cell_mass += inst.source.p_x[x];
      double best_cost = kInf;
      std::uint32_t best_col = 0;
      for (std::size_t yh = 0; yh < nyh; ++yh) {
        order = members[c];
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          double wa = weight(a, yh), wb = weight(b, yh);
          if (wa != wb) return wa > wb;
          return a < b;
        });
        double saved = 0.0;
        for (std::size_t k = 0; k < order.size() && k < cover; ++k) saved += weight(order[k], yh);
        double cost = cell_mass - saved;
        if (cost < best_cost - 1e-15) {
          best_cost = cost;
          best_col = std::uint32_t(yh);
        }
      }
      eps += best_cost;
      pick[c] = best_col;
    }
    if (eps < best_eps - 1e-15) {
      best_eps = eps;
      best_f = f;
      best_yh = pick;
    }
  });

  CodeRealization code;
  code.encoder = best_f;
  code.decoder_yhat = best_yh;
  code.decoder_distributions.assign(cells, Vec(nx, 0.0));
  for (auto& m : members) m.clear();
  for (std::size_t x = 0; x < nx; ++x) members[best_f[x]].push_back(x);
  double unit = std::exp2(-inst.D1);
  for (std::size_t c = 0; c < cells; ++c) {
    order = members[c];
    std::size_t yh = best_yh[c];
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double wa = weight(a, yh), wb = weight(b, yh);
      if (wa != wb) return wa > wb;
      return a < b;
    });
    std::size_t covered = std::min<std::size_t>(order.size(), std::size_t(cover));
    if (covered == 0) continue;
    for (std::size_t k = 0; k < covered; ++k) code.decoder_distributions[c][order[k]] = unit;
    std::size_t heaviest = order[0];
    for (std::size_t k = 1; k < covered; ++k)
      if (inst.source.p_x[order[k]] > inst.source.p_x[heaviest]) heaviest = order[k];
    code.decoder_distributions[c][heaviest] += 1.0 - double(covered) * unit;
  }
  return {best_eps, code};
}

// Evaluate a concrete finite code exactly.
inline double code_excess_probability(const ProblemInstance& inst, const CodeRealization& code) {
  Mat pi = joint_excess_table(inst);
  std::size_t nyh = inst.yhat_size();
  double eps = 0.0;
  for (std::size_t x = 0; x < inst.source.x_size(); ++x) {
    auto [xh, yh] = code.decoder[code.encoder[x]];
    eps += inst.source.p_x[x] * pi(x, std::size_t(xh) * nyh + yh);
  }
  return eps;
}

// i.i.d. codebook of (xh, yh) pairs from q_pairs; encoder picks the codeword
// with the smallest conditional failure probability (lowest index on ties).
inline SimReport simulate_joint_code(const ProblemInstance& inst, const Vec& q_pairs,
                                     std::uint64_t trials, std::uint64_t seed) {
  inst.validate();
  std::size_t npairs = inst.xhat_size() * inst.yhat_size();
  if (q_pairs.size() != npairs) throw ConfigError("codeword distribution has wrong length");
  Mat pi = joint_excess_table(inst);
  Mat d1m = inst.d1_matrix();
  Mat d2m = inst.d2_matrix();
  std::size_t nyh = inst.yhat_size(), ny = inst.source.y_size();
  Vec cdf_pairs = cumulative(q_pairs);
  Vec flat(inst.source.p_xy.a);
  Vec cdf_source = cumulative(flat);

  std::uint64_t excess = 0;
  std::vector<std::size_t> book(inst.M);
  for (std::uint64_t t = 0; t < trials; ++t) {
    TrialRng rng(seed, t);
    for (std::uint64_t i = 0; i < inst.M; ++i) book[i] = rng.categorical(cdf_pairs);
    std::size_t cell = rng.categorical(cdf_source);
    std::size_t x = cell / ny, y = cell % ny;
    std::size_t pick = 0;
    double best = kInf;
    for (std::uint64_t i = 0; i < inst.M; ++i) {
      double v = pi(x, book[i]);
      if (v < best) {
        best = v;
        pick = book[i];
      }
    }
    std::size_t xh = pick / nyh, yh = pick % nyh;
    if (d1m(x, xh) > inst.D1 || d2m(y, yh) > inst.D2) ++excess;
  }
  SimReport rep;
  rep.trials = trials;
  rep.excess_count = excess;
  rep.estimate = trials ? double(excess) / double(trials) : 0.0;
  rep.std_error = trials ? std::sqrt(rep.estimate * (1.0 - rep.estimate) / double(trials)) : 0.0;
  rep.seed = seed;
  return rep;
}

// Inference-only scheme: codewords are yh draws; the encoder sends the first
// codeword whose conditional failure is at most eps_prime, else the first
// codeword outright.
inline SimReport simulate_indirect_code(const ProblemInstance& inst, const Vec& p_yhat,
                                        double eps_prime, std::uint64_t trials,
                                        std::uint64_t seed) {
  inst.validate();
  if (p_yhat.size() != inst.yhat_size()) throw ConfigError("codeword distribution has wrong length");
  Mat pi1 = indirect_excess_table(inst);
  Mat d2m = inst.d2_matrix();
  std::size_t ny = inst.source.y_size();
  Vec cdf_cw = cumulative(p_yhat);
  Vec cdf_source = cumulative(Vec(inst.source.p_xy.a));

  std::uint64_t excess = 0;
  std::vector<std::size_t> book(inst.M);
  for (std::uint64_t t = 0; t < trials; ++t) {
    TrialRng rng(seed, t);
    for (std::uint64_t i = 0; i < inst.M; ++i) book[i] = rng.categorical(cdf_cw);
    std::size_t cell = rng.categorical(cdf_source);
    std::size_t x = cell / ny, y = cell % ny;
    std::size_t pick = book[0];
    for (std::uint64_t i = 0; i < inst.M; ++i)
      if (pi1(x, book[i]) <= eps_prime) {
        pick = book[i];
        break;
      }
    if (d2m(y, pick) > inst.D2) ++excess;
  }
  SimReport rep;
  rep.trials = trials;
  rep.excess_count = excess;
  rep.estimate = trials ? double(excess) / double(trials) : 0.0;
  rep.std_error = trials ? std::sqrt(rep.estimate * (1.0 - rep.estimate) / double(trials)) : 0.0;
  rep.seed = seed;
  return rep;
}

// Log-loss scheme: the encoder's index is uniform over the codewords that
// meet the eps_prime threshold (all of them when none do); a uniform bin of
// the source symbol rides along. The decoder lists the typical symbols that
// are uniquely identified by (cell, bin) and answers uniformly over that
// list, falling back to the prior when the list is empty.
inline SimReport simulate_logloss_code(const ProblemInstance& inst, const Vec& p_yhat,
                                       double eps_prime, double gamma, std::uint64_t trials,
                                       std::uint64_t seed) {
  inst.validate();
  if (!inst.direct_is_logloss())
    throw ConfigError("log-loss simulator requires a log-loss direct task");
  if (p_yhat.size() != inst.yhat_size()) throw ConfigError("codeword distribution has wrong length");
  Mat pi1 = indirect_excess_table(inst);
  Mat d2m = inst.d2_matrix();
  std::size_t nx = inst.source.x_size(), ny = inst.source.y_size();
  Vec cdf_cw = cumulative(p_yhat);
  Vec cdf_source = cumulative(Vec(inst.source.p_xy.a));
  Vec iota = info_density(inst.source);
  // capped before the exp2 can overflow the integer; collisions at 2^62 bins
  // are beyond floating-point resolution anyway
  std::uint64_t bins = std::uint64_t(std::floor(std::exp2(std::min(inst.D1, 62.0)) + 1e-9));
  if (bins < 1) bins = 1;
  double typical_cut = inst.D1 + std::log2(double(inst.M)) - gamma;

  std::uint64_t excess = 0;
  std::vector<std::size_t> book(inst.M);
  std::vector<std::uint32_t> f(nx);
  std::vector<std::uint64_t> b(nx);
  std::vector<std::uint64_t> ok_idx;
  std::vector<std::size_t> cell_typical;
  for (std::uint64_t t = 0; t < trials; ++t) {
    TrialRng rng(seed, t);
    for (std::uint64_t i = 0; i < inst.M; ++i) book[i] = rng.categorical(cdf_cw);
    for (std::size_t x = 0; x < nx; ++x) {
      ok_idx.clear();
      for (std::uint64_t i = 0; i < inst.M; ++i)
        if (pi1(x, book[i]) <= eps_prime) ok_idx.push_back(i);
      f[x] = ok_idx.empty() ? std::uint32_t(rng.below(inst.M))
                            : std::uint32_t(ok_idx[rng.below(ok_idx.size())]);
      b[x] = rng.below(bins);
    }
    std::size_t cell = rng.categorical(cdf_source);
    std::size_t x0 = cell / ny, y0 = cell % ny;
    std::uint32_t i0 = f[x0];

    bool inference_fail = d2m(y0, book[i0]) > inst.D2;

    // uniquely decodable symbols of this cell: typical symbols whose bin no
    // other typical cellmate shares
    cell_typical.clear();
    for (std::size_t x = 0; x < nx; ++x)
      if (f[x] == i0 && iota[x] <= typical_cut) cell_typical.push_back(x);
    std::size_t listed = 0;
    bool x0_listed = false;
    for (std::size_t a = 0; a < cell_typical.size(); ++a) {
      bool unique = true;
      for (std::size_t c = 0; c < cell_typical.size(); ++c)
        if (c != a && b[cell_typical[c]] == b[cell_typical[a]]) {
          unique = false;
          break;
        }
      if (unique) {
        ++listed;
        if (cell_typical[a] == x0) x0_listed = true;
      }
    }
    bool direct_fail;
    if (listed > 0) {
      direct_fail = !x0_listed || std::log2(double(listed)) > inst.D1;
    } else {
      direct_fail = iota[x0] > inst.D1;  // prior fallback
    }
    if (inference_fail || direct_fail) ++excess;
  }
  SimReport rep;
  rep.trials = trials;
  rep.excess_count = excess;
  rep.estimate = trials ? double(excess) / double(trials) : 0.0;
  rep.std_error = trials ? std::sqrt(rep.estimate * (1.0 - rep.estimate) / double(trials)) : 0.0;
  rep.seed = seed;
  return rep;
}

}  // namespace jir::sim
