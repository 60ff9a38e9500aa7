#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "helpers.hpp"
#include "jir/bounds_ach.hpp"
#include "jir/bounds_conv.hpp"
#include "jir/oracle_sim.hpp"

using Catch::Matchers::WithinAbs;
using namespace jir;

TEST_CASE("expected minimum of iid draws") {
  std::vector<std::pair<double, double>> vw = {{0.2, 0.5}, {0.8, 0.5}};
  REQUIRE_THAT(ach::detail::expected_min_of_iid(vw, 1), WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(ach::detail::expected_min_of_iid(vw, 2), WithinAbs(0.35, 1e-15));
  REQUIRE_THAT(ach::detail::expected_min_of_iid(vw, 3), WithinAbs(0.275, 1e-15));

  // zero values clamp the minimum immediately
  std::vector<std::pair<double, double>> vz = {{0.0, 0.5}, {1.0, 0.5}};
  REQUIRE_THAT(ach::detail::expected_min_of_iid(vz, 1), WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(ach::detail::expected_min_of_iid(vz, 2), WithinAbs(0.25, 1e-15));
}

TEST_CASE("joint random-coding ensemble value") {
  auto inst = testutil::bsc_instance(0.1, 0.0, 0.1);
  Vec q(4, 0.25);

  SECTION("single codeword averages the failure table") {
    Mat pi = src::joint_excess_table(inst);
    double direct = 0.0;
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t j = 0; j < 4; ++j) direct += inst.source.p_x[x] * q[j] * pi(x, j);
    REQUIRE_THAT(ach::ach_random_coding_bound(inst.with_m(1), q), WithinAbs(direct, 1e-12));
  }

  SECTION("non-increasing in the codebook size") {
    double prev = 2.0;
    for (std::uint64_t M = 1; M <= 6; ++M) {
      double v = ach::ach_random_coding_bound(inst.with_m(M), q);
      REQUIRE(v <= prev + 1e-15);
      prev = v;
    }
  }

  SECTION("large codebooks approach the conditional floor") {
    double v = ach::ach_random_coding_bound(inst.with_m(std::uint64_t(1) << 20), q);
    REQUIRE_THAT(v, WithinAbs(0.1, 1e-6));
  }

  SECTION("rejects log-loss tasks and bad distributions") {
    auto ll = testutil::logloss_instance(testutil::identity_source(4), 1.0, 0.0);
    REQUIRE_THROWS_AS(ach::ach_random_coding_bound(ll, q), ConfigError);
    REQUIRE_THROWS_AS(ach::ach_random_coding_bound(inst, Vec(3, 1.0 / 3.0)), ConfigError);
  }
}

TEST_CASE("threshold and joint schemes coincide when the direct task is free") {
  auto inst = testutil::identity_instance(3, kInf, 0.0, 2);
  Vec q_pairs(9, 1.0 / 9.0);
  Vec p_yhat(3, 1.0 / 3.0);

  double joint = ach::ach_random_coding_bound(inst, q_pairs);
  double thresh = ach::ach_threshold_bound(inst, p_yhat, 0.0);
  REQUIRE_THAT(joint, WithinAbs(4.0 / 9.0, 1e-12));
  REQUIRE_THAT(thresh, WithinAbs(4.0 / 9.0, 1e-12));
  REQUIRE_THAT(joint, WithinAbs(thresh, 1e-12));
}

TEST_CASE("threshold scheme on the noisy pair source") {
  auto inst = testutil::bsc_instance(0.1, kInf, 0.0);
  Vec p_yhat = {0.5, 0.5};

  auto [b1, e1] = ach::ach_threshold_best(inst.with_m(1), p_yhat);
  REQUIRE_THAT(b1, WithinAbs(0.55, 1e-15));
  REQUIRE_THAT(e1, WithinAbs(0.1, 1e-15));

  auto [b3, e3] = ach::ach_threshold_best(inst.with_m(3), p_yhat);
  REQUIRE_THAT(b3, WithinAbs(0.2125, 1e-15));
  REQUIRE_THAT(e3, WithinAbs(0.1, 1e-15));

  // achievability never undercuts the exhaustive optimum
  auto [opt1, c1] = sim::exact_eps_star(inst.with_m(1));
  auto [opt3, c3] = sim::exact_eps_star(inst.with_m(3));
  REQUIRE(b1 >= opt1 - 1e-9);
  REQUIRE(b3 >= opt3 - 1e-9);
}

TEST_CASE("optimized codeword distribution") {
  auto inst = testutil::bsc_instance(0.1, 0.0, 0.1);
  Vec uniform(4, 0.25);
  for (std::uint64_t M = 1; M <= 3; ++M) {
    ach::AchJointResult r = ach::ach_optimize_output(inst.with_m(M));
    REQUIRE(r.value <= ach::ach_random_coding_bound(inst.with_m(M), uniform) + 1e-15);
    auto [oracle, code] = sim::exact_eps_star(inst.with_m(M));
    REQUIRE(r.value >= oracle - 1e-9);
    REQUIRE_FALSE(r.origin.empty());
    double sum = 0.0;
    for (double v : r.q_pairs) sum += v;
    REQUIRE_THAT(sum, WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("binning-bound binomial sums") {
  auto [s2a, v2a] = ach::detail::logloss_binomial_sums(0.5, 3);
  REQUIRE_THAT(s2a, WithinAbs(1.8125, 1e-12));
  REQUIRE_THAT(v2a, WithinAbs(1.8125, 1e-12));

  auto [s2b, v2b] = ach::detail::logloss_binomial_sums(0.3, 3);
  REQUIRE_THAT(s2b, WithinAbs(1.5715, 1e-12));
  REQUIRE_THAT(v2b, WithinAbs(0.3915, 1e-12));

  auto [s2c, v2c] = ach::detail::logloss_binomial_sums(0.0, 3);
  REQUIRE(s2c == 1.0);
  REQUIRE(v2c == 0.0);

  auto [s2d, v2d] = ach::detail::logloss_binomial_sums(1.0, 3);
  REQUIRE(s2d == 0.0);
  REQUIRE_THAT(v2d, WithinAbs(14.5, 1e-12));

  REQUIRE_THROWS_AS(ach::detail::logloss_binomial_sums(0.5, 6000000), BudgetError);
}

TEST_CASE("binning terms group by failure level") {
  auto inst = testutil::logloss_instance(testutil::identity_source(4), 1.0, 0.0, 3);
  Vec p_yhat = {0.4, 0.3, 0.2, 0.1};

  ach::LoglossAchTerms t = ach::logloss_ach_terms(inst, p_yhat, 0.0);

  double s1 = 0.0, s2 = 0.0, s2v = 0.0;
  for (std::size_t x = 0; x < 4; ++x) {
    double eta = 1.0 - p_yhat[x];  // only yh = x keeps the inference kernel at zero
    auto [a, b] = ach::detail::logloss_binomial_sums(eta, 3);
    s1 += 0.25 * pow_u64(eta, 3);
    s2 += 0.25 * a;
    s2v += 0.25 * b;
  }
  REQUIRE_THAT(t.s1, WithinAbs(s1, 1e-12));
  REQUIRE_THAT(t.s2, WithinAbs(s2, 1e-12));
  REQUIRE_THAT(t.s2_variant, WithinAbs(s2v, 1e-12));
}

TEST_CASE("info-density tail is strict") {
  auto inst = testutil::logloss_instance(testutil::identity_source(4), 1.0, 0.0, 2);
  Vec iota = src::info_density(inst.source);
  REQUIRE(ach::logloss_ach_tail(inst, iota, 1.0) == 1.0);  // cut 1, every iota = 2
  REQUIRE(ach::logloss_ach_tail(inst, iota, 0.0) == 0.0);  // cut 2, no strict excess
}

TEST_CASE("binning bound search is self-consistent") {
  auto cls = src::build_binomial_class_source(10, 6, 0.1);
  auto inst = testutil::logloss_instance(cls, 6.0, 0.5, 9);
  Vec p_yhat(10, 0.1);
  Vec grid = tenth_grid(std::log2(100.0) + std::log2(9.0));

  ach::LoglossAchResult r = ach::ach_logloss_bound(inst, p_yhat, Vec{0.0}, grid);
  REQUIRE(r.value == clip01(r.raw_value));
  REQUIRE(r.eps_prime == 0.0);

  ach::LoglossAchTerms terms = ach::logloss_ach_terms(inst, p_yhat, r.eps_prime);
  Vec iota = src::info_density(cls);
  REQUIRE_THAT(ach::ach_logloss_value(inst, terms, iota, r.gamma), WithinAbs(r.raw_value, 1e-12));
}

TEST_CASE("class family achievability curve") {
  std::vector<std::uint64_t> Ms;
  for (std::uint64_t M = 1; M <= 12; ++M) Ms.push_back(M);
  BoundCurve curve = ach::example_achievability_curve(10, 6, 0.1, 6.0, Ms);

  REQUIRE(curve.tag == "example_ach");
  REQUIRE(curve.direction == "upper");
  REQUIRE(curve.points.size() == 12);

  for (std::size_t i = 1; i < curve.points.size(); ++i)
    REQUIRE(curve.points[i].raw_value <= curve.points[i - 1].raw_value + 1e-9);

  // the bound dips below the trivial level once the codebook covers the bulk
  // of the class labels
  REQUIRE(curve.points[8].M == 9);
  REQUIRE(curve.points[8].value < 1.0);
  REQUIRE_THAT(curve.points[8].value, WithinAbs(0.97223132617664443, 1e-9));

  // matches a direct evaluation at the same parameters
  auto cls = src::build_binomial_class_source(10, 6, 0.1);
  auto inst = testutil::logloss_instance(cls, 6.0, 0.5, 9);
  Vec iota = src::info_density(cls);
  double mx = 0.0;
  for (double v : iota)
    if (!std::isnan(v)) mx = std::max(mx, v);
  ach::LoglossAchResult direct =
      ach::ach_logloss_bound(inst, Vec(10, 0.1), Vec{0.0}, tenth_grid(mx + std::log2(9.0)));
  REQUIRE(direct.value == curve.points[8].value);
}

TEST_CASE("class family converse curve") {
  BoundCurve curve = conv::example_converse_curve(10, {1, 5, 9, 10, 11, 60});
  REQUIRE(curve.tag == "example_conv");
  REQUIRE(curve.direction == "lower");
  REQUIRE(curve.points[0].value == 0.9);
  REQUIRE(curve.points[1].value == 0.5);
  REQUIRE_THAT(curve.points[2].value, WithinAbs(0.1, 1e-15));
  REQUIRE(curve.points[3].value == 0.0);
  REQUIRE(curve.points[4].value == 0.0);
  REQUIRE(curve.points[5].value == 0.0);
}

TEST_CASE("joint converse against the exhaustive optimum") {
  auto inst = testutil::bsc_instance(0.1, 0.0, 0.1);
  rd::RDSolution sol =
      rd::solve_joint(inst.source, inst.d1, inst.d2, inst.D1, inst.D2);
  Vec grid = conv::default_gamma_grid(inst.with_m(1));

  conv::ConvResult r = conv::conv_joint_bound(inst.with_m(1), sol, grid);
  REQUIRE(r.mode == "sup-inf");
  // winning point: full tail mass at gamma = 0.9
  REQUIRE_THAT(r.value, WithinAbs(1.0 - std::exp2(-0.9), 1e-12));
  REQUIRE_THAT(r.gamma, WithinAbs(0.9, 1e-12));

  auto [oracle1, c1] = sim::exact_eps_star(inst.with_m(1));
  REQUIRE(r.value <= oracle1 + 1e-12);
  for (double v : r.gamma_values) REQUIRE(v <= oracle1 + 1e-12);

  // the LP over the same grid dominates the sup-inf value and stays valid
  conv::ConvResult lp = conv::conv_joint_bound(inst.with_m(1), sol, grid, true);
  REQUIRE(lp.mode == "lp");
  REQUIRE(lp.raw_lp >= r.raw_supinf - 1e-9);
  REQUIRE(lp.value <= oracle1 + 1e-9);

  auto [oracle2, c2] = sim::exact_eps_star(inst.with_m(2));
  conv::ConvResult r2 = conv::conv_joint_bound(inst.with_m(2), sol, conv::default_gamma_grid(inst.with_m(2)));
  REQUIRE(r2.value <= oracle2 + 1e-12);
}

TEST_CASE("joint converse exact spot value") {
  auto inst = testutil::identity_instance(4, 0.0, 0.0, 1);
  rd::RDSolution sol = rd::solve_joint(inst.source, inst.d1, inst.d2, 0.0, 0.0);

  conv::ConvResult r = conv::conv_joint_bound(inst, sol, Vec{1.0});
  REQUIRE(r.value == 0.5);

  conv::ConvResult lp = conv::conv_joint_bound(inst, sol, Vec{1.0}, true);
  REQUIRE_THAT(lp.value, WithinAbs(0.5, 1e-9));
}

TEST_CASE("log-loss converse, direct branch") {
  auto inst = testutil::logloss_instance(testutil::identity_source(4), 1.0, 0.75, 1);
  conv::ConvResult r = conv::conv_logloss_bound(inst, conv::default_gamma_grid(inst));
  REQUIRE(r.value == 0.5);
  REQUIRE(r.gamma == 1.0);

  // every grid point is itself a valid lower bound on the optimum
  auto [oracle, code] = sim::exact_eps_star_logloss(inst);
  for (double v : r.gamma_values) REQUIRE(v <= oracle + 1e-9);
}

TEST_CASE("log-loss converse, inference branch") {
  auto cls = src::build_binomial_class_source(3, 1, 0.3);
  auto inst = testutil::logloss_instance(cls, 2.0, 0.2, 2);

  rd::LoglossRegime reg = rd::logloss_regime(cls, inst.d2, inst.D1, inst.D2);
  REQUIRE(reg.applicable);
  REQUIRE_FALSE(reg.case_a);

  Vec grid = conv::default_gamma_grid(inst);
  conv::ConvResult r = conv::conv_logloss_bound(inst, grid);
  auto [oracle, code] = sim::exact_eps_star_logloss(inst);
  REQUIRE(r.value <= oracle + 1e-9);
  for (double v : r.gamma_values) REQUIRE(v <= oracle + 1e-9);

  conv::ConvResult lp = conv::conv_logloss_bound(inst, grid, true);
  REQUIRE(lp.raw_lp >= r.raw_supinf - 1e-9);
  REQUIRE(lp.value <= oracle + 1e-9);

  // reproduce the sup-inf values from the published pieces
  tilt::TiltedEvaluator ev = tilt::make_evaluator(cls.p_x, reg.r2_solution);
  Mat d2m = inst.d2_matrix();
  double log2_m = std::log2(2.0);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double cut = log2_m + grid[gi];
    double total = 0.0;
    for (std::size_t x = 0; x < cls.x_size(); ++x) {
      if (cls.p_x[x] <= 0.0) continue;
      double best = kInf;
      for (std::size_t yh = 0; yh < ev.conditional.cols; ++yh) {
        double mass = 0.0;
        for (std::size_t y = 0; y < cls.y_size(); ++y)
          if (tilt::indirect_tilted(ev, d2m, x, y, yh, inst.D2) >= cut)
            mass += cls.p_y_given_x(x, y);
        best = std::min(best, mass);
      }
      total += cls.p_x[x] * best;
    }
    REQUIRE_THAT(r.gamma_values[gi], WithinAbs(total - std::exp2(-grid[gi]), 1e-12));
  }
}

TEST_CASE("log-loss converse regime gate") {
  auto cls = src::build_binomial_class_source(3, 1, 0.3);
  auto inst = testutil::logloss_instance(cls, 0.2, 0.0, 2);
  REQUIRE_THROWS_AS(conv::conv_logloss_bound(inst, Vec{1.0}), InfeasibleError);

  auto finite = testutil::bsc_instance(0.1, 0.0, 0.1);
  REQUIRE_THROWS_AS(conv::conv_logloss_bound(finite, Vec{1.0}), ConfigError);
}

TEST_CASE("gamma grid construction") {
  auto inst = testutil::bsc_instance(0.1, 0.0, 0.1, 4);
  Vec grid = conv::default_gamma_grid(inst);
  REQUIRE(grid.size() == 31);  // 0, 0.1, ..., 3.0 for max iota 1 and log2 M = 2
  REQUIRE(grid.front() == 0.0);
  REQUIRE(grid.back() == 3.0);
  REQUIRE(grid[10] == 1.0);
}

TEST_CASE("achievability parameter validation") {
  ach::AchParams p;
  p.output_distribution = {0.5, 0.5};
  REQUIRE_NOTHROW(p.validate());

  ach::AchParams bad_sum;
  bad_sum.output_distribution = {0.5, 0.4};
  REQUIRE_THROWS_AS(bad_sum.validate(), ConfigError);

  ach::AchParams bad_eps;
  bad_eps.eps_prime = 1.5;
  REQUIRE_THROWS_AS(bad_eps.validate(), ConfigError);

  ach::AchParams bad_gamma;
  bad_gamma.gamma = -0.5;
  REQUIRE_THROWS_AS(bad_gamma.validate(), ConfigError);

  ach::AchParams bad_grid;
  bad_grid.eps_prime_grid = {0.5, 2.0};
  REQUIRE_THROWS_AS(bad_grid.validate(), ConfigError);
}
