#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "jir/rd.hpp"

using Catch::Matchers::WithinAbs;
using namespace jir;

namespace {

double hamming_rd(double p, double d) {  // rate of a Bernoulli(p) source under Hamming loss
  return src::binary_entropy(p) - src::binary_entropy(d);
}

double class_inference_rate(unsigned m, double d2) {  // closed form for the class family
  return std::log2(double(m)) - src::binary_entropy(d2) - d2 * std::log2(double(m - 1));
}

}  // namespace

TEST_CASE("channel functionals") {
  Vec p = {0.5, 0.5};
  Mat ident(2, 2, 0.0);
  ident(0, 0) = ident(1, 1) = 1.0;

  Vec q = rd::output_marginal(p, ident);
  REQUIRE_THAT(q[0], WithinAbs(0.5, 1e-15));
  REQUIRE(rd::mutual_information(p, ident) == 1.0);

  Mat ham(2, 2, 1.0);
  ham(0, 0) = ham(1, 1) = 0.0;
  REQUIRE(rd::expected_distortion(p, ident, ham) == 0.0);
  REQUIRE(rd::d_min(p, ham) == 0.0);

  Mat dt2 = src::surrogate_distortion(testutil::bsc_source(0.1), src::DistortionSpec::hamming());
  REQUIRE_THAT(rd::d_min(p, dt2), WithinAbs(0.1, 1e-15));
}

TEST_CASE("zero slope collapses to the cheapest column") {
  Vec p = {0.5, 0.5};
  Mat ham(2, 2, 1.0);
  ham(0, 0) = ham(1, 1) = 0.0;
  rd::BaResult r = rd::ba_fixed_slope(p, ham, 0.0);
  REQUIRE(r.rate <= 1e-12);
  REQUIRE_THAT(r.dist_a, WithinAbs(0.5, 1e-9));
}

TEST_CASE("binary rate-distortion curve matches the closed form") {
  Vec p = {0.5, 0.5};
  auto ham = src::DistortionSpec::hamming();
  auto xa = src::Alphabet::numbered(2);
  for (double d = 0.0; d < 0.46; d += 0.05) {
    rd::RDSolution s = rd::solve_r1(p, ham, d, xa);
    REQUIRE_THAT(s.rate, WithinAbs(1.0 - src::binary_entropy(d), 1e-6));
    REQUIRE(s.achieved_d1.has_value());
    REQUIRE(*s.achieved_d1 <= d + 1e-8);
  }

  // the slope is the magnitude of the curve derivative: h'(D) = log2((1-D)/D)
  rd::RDSolution mid = rd::solve_r1(p, ham, 0.2, xa);
  REQUIRE(mid.lambda1.has_value());
  REQUIRE_THAT(*mid.lambda1, WithinAbs(2.0, 1e-2));

  Vec skew = {0.2, 0.8};
  rd::RDSolution sk = rd::solve_r1(skew, ham, 0.1, xa);
  REQUIRE_THAT(sk.rate, WithinAbs(hamming_rd(0.2, 0.1), 1e-6));
}

TEST_CASE("slack targets cost nothing") {
  Vec p = {0.5, 0.5};
  rd::RDSolution s = rd::solve_r1(p, src::DistortionSpec::hamming(), 0.5, src::Alphabet::numbered(2));
  REQUIRE(s.rate <= 1e-12);

  auto cls = src::build_binomial_class_source(10, 6, 0.1);
  rd::RDSolution s2 = rd::solve_r2(cls, src::DistortionSpec::hamming(), 0.95);
  REQUIRE(s2.rate <= 1e-12);
}

TEST_CASE("inference rate matches the class closed form") {
  auto cls = src::build_binomial_class_source(10, 6, 0.1);
  auto ham = src::DistortionSpec::hamming();

  rd::RDSolution a = rd::solve_r2(cls, ham, 0.5);
  REQUIRE_THAT(a.rate, WithinAbs(class_inference_rate(10, 0.5), 1e-6));
  REQUIRE(a.achieved_d2.has_value());
  REQUIRE_THAT(*a.achieved_d2, WithinAbs(0.5, 1e-8));

  rd::RDSolution b = rd::solve_r2(cls, ham, 0.2);
  REQUIRE_THAT(b.rate, WithinAbs(class_inference_rate(10, 0.2), 1e-6));
}

TEST_CASE("infeasible targets are rejected") {
  auto s = testutil::bsc_source(0.1);
  REQUIRE_THROWS_AS(rd::solve_r2(s, src::DistortionSpec::hamming(), 0.05), InfeasibleError);
  REQUIRE_THROWS_AS(
      rd::solve_joint(s, src::DistortionSpec::hamming(), src::DistortionSpec::hamming(), 0.0, 0.0),
      InfeasibleError);
}

TEST_CASE("joint description meets both targets") {
  auto s = testutil::bsc_source(0.1);
  auto ham = src::DistortionSpec::hamming();

  rd::RDSolution j = rd::solve_joint(s, ham, ham, 0.0, 0.1);
  REQUIRE_THAT(j.rate, WithinAbs(1.0, 1e-5));
  REQUIRE(*j.achieved_d1 <= 1e-6);
  REQUIRE(*j.achieved_d2 <= 0.1 + 1e-6);
  REQUIRE(j.xhat_count == 2);
  REQUIRE(j.yhat_count == 2);
  REQUIRE(j.conditional.cols == 4);

  // never cheaper than either marginal description
  rd::RDSolution r1 = rd::solve_r1(s.p_x, ham, 0.0, s.x_alphabet);
  rd::RDSolution r2 = rd::solve_r2(s, ham, 0.1);
  REQUIRE(j.rate >= std::max(r1.rate, r2.rate) - 1e-6);

  rd::RDSolution ident = rd::solve_joint(testutil::identity_source(4), ham, ham, 0.0, 0.0);
  REQUIRE_THAT(ident.rate, WithinAbs(2.0, 1e-6));

  // relaxing both targets can only lower the rate
  rd::RDSolution loose = rd::solve_joint(s, ham, ham, 0.1, 0.3);
  REQUIRE(loose.rate <= j.rate + 1e-9);
}

TEST_CASE("log-loss direct rate is the entropy gap, bitwise") {
  auto cls = src::build_binomial_class_source(10, 6, 0.1);
  for (double d1 : {0.0, 1.0, 2.0, 10.0}) {
    rd::RDSolution s = rd::logloss_r1(cls.p_x, d1);
    REQUIRE(s.rate == std::max(0.0, src::entropy(cls.p_x) - d1));
    REQUIRE_THAT(s.diag.raw_rate, WithinAbs(src::entropy(cls.p_x) - d1, 1e-15));
    REQUIRE(*s.lambda1 == (d1 < src::entropy(cls.p_x) ? 1.0 : 0.0));
  }
}

TEST_CASE("duplicate posterior columns merge to the cheaper representative") {
  Vec p = {0.5, 0.5};
  Mat w(2, 3, 0.0);
  w(0, 0) = 0.2; w(0, 1) = 0.2; w(0, 2) = 0.6;
  w(1, 0) = 0.4; w(1, 1) = 0.4; w(1, 2) = 0.2;
  Mat dt2(2, 3, 0.0);
  dt2(0, 0) = 0.3; dt2(0, 1) = 0.1; dt2(0, 2) = 0.5;
  dt2(1, 0) = 0.2; dt2(1, 1) = 0.9; dt2(1, 2) = 0.4;

  // columns 0 and 1 induce the same posterior (1/3, 2/3); column 0 is the
  // cheaper representative (posterior-weighted cost 0.233 vs 0.633)
  rd::MergedPosteriors m = rd::merge_duplicate_posteriors(p, w, dt2, 1e-9);
  REQUIRE(m.kept_columns == std::vector<std::size_t>{0, 2});
  REQUIRE(m.conditional.cols == 2);
  REQUIRE_THAT(m.conditional(0, 0), WithinAbs(0.4, 1e-12));
  REQUIRE_THAT(m.conditional(1, 0), WithinAbs(0.8, 1e-12));
  REQUIRE_THAT(m.conditional(0, 1), WithinAbs(0.6, 1e-12));
  REQUIRE_THAT(m.conditional(1, 1), WithinAbs(0.2, 1e-12));

  REQUIRE(m.posteriors.size() == 2);
  REQUIRE_THAT(m.posteriors[0][0], WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THAT(m.posteriors[0][1], WithinAbs(2.0 / 3.0, 1e-12));
  REQUIRE_THAT(m.posteriors[1][0], WithinAbs(0.75, 1e-12));

  // merging identical posteriors never moves the mutual information
  REQUIRE_THAT(rd::mutual_information(p, m.conditional),
               WithinAbs(rd::mutual_information(p, w), 1e-12));
}

TEST_CASE("log-loss regime classification") {
  auto ham = src::DistortionSpec::hamming();
  auto ident = testutil::identity_source(4);

  rd::LoglossRegime a = rd::logloss_regime(ident, ham, 1.0, 0.75);
  REQUIRE(a.applicable);
  REQUIRE(a.case_a);
  REQUIRE_THAT(a.h_x, WithinAbs(2.0, 1e-12));
  REQUIRE_THAT(a.r1_raw, WithinAbs(1.0, 1e-12));
  REQUIRE(a.d2_floor <= 1e-12);

  rd::LoglossRegime b = rd::logloss_regime(ident, ham, 1.5, 0.25);
  REQUIRE(b.applicable);
  REQUIRE_FALSE(b.case_a);
  // R2 on a uniform pair source follows the symmetric closed form
  REQUIRE_THAT(b.r2_at_d2, WithinAbs(2.0 - src::binary_entropy(0.25) - 0.25 * std::log2(3.0), 1e-5));

  // a class source with residual randomness: the description cannot carry
  // the whole of X at this level, so the construction does not apply
  auto cls = src::build_binomial_class_source(3, 1, 0.3);
  rd::LoglossRegime n = rd::logloss_regime(cls, ham, 0.2, 0.0);
  REQUIRE_FALSE(n.applicable);
  REQUIRE_THROWS_AS(rd::logloss_joint_achiever(cls, ham, 0.2, 0.0), InfeasibleError);
}

TEST_CASE("log-loss joint achiever hits the rate envelope") {
  auto ham = src::DistortionSpec::hamming();
  auto ident = testutil::identity_source(4);

  SECTION("direct constraint binding") {
    rd::RDSolution s = rd::logloss_joint_achiever(ident, ham, 1.0, 0.75);
    REQUIRE_THAT(s.rate, WithinAbs(1.0, 1e-6));
    REQUIRE(*s.lambda1 == 1.0);
    REQUIRE(*s.lambda2 == 0.0);
    REQUIRE(*s.achieved_d1 <= 1.0 + 1e-6);
    REQUIRE(*s.achieved_d2 <= 0.75 + 1e-6);
    REQUIRE(s.logloss_posteriors.size() == s.conditional.cols);
    for (const Vec& post : s.logloss_posteriors) {
      double sum = 0.0;
      for (double v : post) sum += v;
      REQUIRE_THAT(sum, WithinAbs(1.0, 1e-9));
    }
  }

  SECTION("inference constraint binding") {
    rd::RDSolution s = rd::logloss_joint_achiever(ident, ham, 1.5, 0.25);
    double r2 = 2.0 - src::binary_entropy(0.25) - 0.25 * std::log2(3.0);
    REQUIRE_THAT(s.rate, WithinAbs(r2, 1e-5));
    REQUIRE(*s.lambda1 == 0.0);
    REQUIRE(*s.lambda2 > 0.0);
    REQUIRE(*s.achieved_d1 <= 1.5 + 1e-6);
    REQUIRE(*s.achieved_d2 <= 0.25 + 1e-6);
    // the description keeps H(X) - R bits of uncertainty about X
    REQUIRE_THAT(*s.achieved_d1, WithinAbs(2.0 - s.rate, 1e-6));
  }
}
