#include <catch2/catch_amalgamated.hpp>

#include "jir/simplex.hpp"

using Catch::Matchers::WithinAbs;
using namespace jir;

TEST_CASE("two-variable box") {
  // min -x - y  s.t.  x + y <= 1
  Vec c = {-1.0, -1.0};
  Mat a(1, 2, 1.0);
  Vec b = {1.0};
  LpResult r = solve_lp(c, a, b, Mat(), Vec());
  REQUIRE(r.feasible);
  REQUIRE(r.bounded);
  REQUIRE_THAT(r.objective, WithinAbs(-1.0, 1e-9));
  REQUIRE_THAT(r.x[0] + r.x[1], WithinAbs(1.0, 1e-9));
}

TEST_CASE("lower bound through a flipped inequality") {
  // min x  s.t.  -x <= -3  (x >= 3)
  Vec c = {1.0};
  Mat a(1, 1, -1.0);
  Vec b = {-3.0};
  LpResult r = solve_lp(c, a, b, Mat(), Vec());
  REQUIRE(r.feasible);
  REQUIRE_THAT(r.objective, WithinAbs(3.0, 1e-9));
  REQUIRE_THAT(r.x[0], WithinAbs(3.0, 1e-9));
}

TEST_CASE("equality constraint") {
  // min x - y  s.t.  x + y = 1
  Vec c = {1.0, -1.0};
  Mat aeq(1, 2, 1.0);
  Vec beq = {1.0};
  LpResult r = solve_lp(c, Mat(), Vec(), aeq, beq);
  REQUIRE(r.feasible);
  REQUIRE_THAT(r.objective, WithinAbs(-1.0, 1e-9));
  REQUIRE_THAT(r.x[1], WithinAbs(1.0, 1e-9));
}

TEST_CASE("infeasible system") {
  // x <= -1 with x >= 0
  Vec c = {1.0};
  Mat a(1, 1, 1.0);
  Vec b = {-1.0};
  LpResult r = solve_lp(c, a, b, Mat(), Vec());
  REQUIRE_FALSE(r.feasible);
}

TEST_CASE("unbounded direction") {
  // min -x with no constraint on x
  Vec c = {-1.0};
  LpResult r = solve_lp(c, Mat(), Vec(), Mat(), Vec());
  REQUIRE(r.feasible);
  REQUIRE_FALSE(r.bounded);
}

TEST_CASE("minimum over a probability simplex picks the smallest coefficient") {
  Vec c = {0.7, 0.2, 0.9, 0.4};
  Mat aeq(1, 4, 1.0);
  Vec beq = {1.0};
  LpResult r = solve_lp(c, Mat(), Vec(), aeq, beq);
  REQUIRE(r.feasible);
  REQUIRE_THAT(r.objective, WithinAbs(0.2, 1e-9));
  REQUIRE_THAT(r.x[1], WithinAbs(1.0, 1e-9));
}

TEST_CASE("mixed constraints") {
  // min 2x + 3y  s.t.  x + y = 2,  x <= 1.5
  Vec c = {2.0, 3.0};
  Mat a(1, 2, 0.0);
  a(0, 0) = 1.0;
  Vec b = {1.5};
  Mat aeq(1, 2, 1.0);
  Vec beq = {2.0};
  LpResult r = solve_lp(c, a, b, aeq, beq);
  REQUIRE(r.feasible);
  REQUIRE_THAT(r.objective, WithinAbs(2.0 * 1.5 + 3.0 * 0.5, 1e-9));

  // degenerate duplicate rows keep the same answer
  Mat aeq2(2, 2, 1.0);
  Vec beq2 = {2.0, 2.0};
  LpResult r2 = solve_lp(c, a, b, aeq2, beq2);
  REQUIRE(r2.feasible);
  REQUIRE_THAT(r2.objective, WithinAbs(r.objective, 1e-9));
}

TEST_CASE("shape validation") {
  Vec c = {1.0, 2.0};
  Mat a(1, 3, 1.0);
  Vec b = {1.0};
  REQUIRE_THROWS_AS(solve_lp(c, a, b, Mat(), Vec()), ConfigError);
  Mat a2(1, 2, 1.0);
  Vec b2 = {1.0, 2.0};
  REQUIRE_THROWS_AS(solve_lp(c, a2, b2, Mat(), Vec()), ConfigError);
}
