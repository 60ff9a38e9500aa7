#pragma once

#include "jir/source_model.hpp"

// instances shared across the test binaries

namespace testutil {

using jir::Mat;
using jir::Vec;

// uniform X, Y = X flipped with probability p
inline jir::src::JointSource bsc_source(double p) {
  Mat j(2, 2, 0.0);
  j(0, 0) = (1.0 - p) / 2.0;
  j(0, 1) = p / 2.0;
  j(1, 0) = p / 2.0;
  j(1, 1) = (1.0 - p) / 2.0;
  return jir::src::JointSource(jir::src::Alphabet::numbered(2), jir::src::Alphabet::numbered(2),
                               std::move(j));
}

inline jir::src::ProblemInstance bsc_instance(double p, double D1, double D2,
                                              std::uint64_t M = 1) {
  jir::src::ProblemInstance inst;
  inst.source = bsc_source(p);
  inst.d1 = jir::src::DistortionSpec::hamming();
  inst.d2 = jir::src::DistortionSpec::hamming();
  inst.D1 = D1;
  inst.D2 = D2;
  inst.M = M;
  return inst;
}

// uniform X on n symbols, Y identical to X
inline jir::src::JointSource identity_source(std::size_t n) {
  Mat j(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) j(i, i) = 1.0 / double(n);
  return jir::src::JointSource(jir::src::Alphabet::numbered(n), jir::src::Alphabet::numbered(n),
                               std::move(j));
}

inline jir::src::ProblemInstance identity_instance(std::size_t n, double D1, double D2,
                                                   std::uint64_t M = 1) {
  jir::src::ProblemInstance inst;
  inst.source = identity_source(n);
  inst.d1 = jir::src::DistortionSpec::hamming();
  inst.d2 = jir::src::DistortionSpec::hamming();
  inst.D1 = D1;
  inst.D2 = D2;
  inst.M = M;
  return inst;
}

inline jir::src::ProblemInstance logloss_instance(jir::src::JointSource source, double D1,
                                                  double D2, std::uint64_t M = 1) {
  jir::src::ProblemInstance inst;
  inst.source = std::move(source);
  inst.d1 = jir::src::DistortionSpec::logloss();
  inst.d2 = jir::src::DistortionSpec::hamming();
  inst.D1 = D1;
  inst.D2 = D2;
  inst.M = M;
  return inst;
}

}  // namespace testutil
