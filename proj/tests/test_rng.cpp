#include <doctest.h>

#include <cmath>
#include <vector>

#include "preavg/rng.hpp"

using namespace preavg;

TEST_SUITE_BEGIN("rng");

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Random123 kat_vectors (Salmon et al.)
  auto r = philox4x32::block({0, 0, 0, 0}, {0, 0});
  CHECK(r[0] == 0x6627e8d5u);
  CHECK(r[1] == 0xe169c58du);
  CHECK(r[2] == 0xbc57ac4cu);
  CHECK(r[3] == 0x9b00dbd8u);

  r = philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu});
  CHECK(r[0] == 0x408f276du);
  CHECK(r[1] == 0x41c83b0eu);
  CHECK(r[2] == 0xa20bc7c6u);
  CHECK(r[3] == 0x6d5451fdu);

  r = philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u});
  CHECK(r[0] == 0xd16cfe09u);
  CHECK(r[1] == 0x94fdccebu);
  CHECK(r[2] == 0x5001e420u);
  CHECK(r[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and keyed by (seed, rep, role)") {
  normal_stream a({42, 7}, stream_role::brownian);
  normal_stream b({42, 7}, stream_role::brownian);
  normal_stream c({42, 8}, stream_role::brownian);
  normal_stream d({42, 7}, stream_role::noise);
  bool same_rep = true, diff_rep = false, diff_role = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.next();
    same_rep &= va == b.next();
    diff_rep |= va != c.next();
    // fresh streams to compare draw-by-draw
    (void)d;
  }
  CHECK(same_rep);
  CHECK(diff_rep);
  normal_stream a2({42, 7}, stream_role::brownian);
  normal_stream d2({42, 7}, stream_role::noise);
  for (int i = 0; i < 100; ++i) diff_role |= a2.next() != d2.next();
  CHECK(diff_role);
}

TEST_CASE("normal moments over a million draws") {
  normal_stream s({2024, 0}, stream_role::brownian);
  const long m = 1000000;
  double sum = 0, sum2 = 0, sum3 = 0, sum4 = 0;
  for (long i = 0; i < m; ++i) {
    const double z = s.next();
    sum += z;
    sum2 += z * z;
    sum3 += z * z * z;
    sum4 += z * z * z * z;
  }
  // 5-sigma bands around N(0,1) moments
  CHECK(std::abs(sum / m) < 5.0 / std::sqrt(double(m)));
  CHECK(std::abs(sum2 / m - 1.0) < 5.0 * std::sqrt(2.0 / double(m)));
  CHECK(std::abs(sum3 / m) < 5.0 * std::sqrt(15.0 / double(m)));
  CHECK(std::abs(sum4 / m - 3.0) < 5.0 * std::sqrt(96.0 / double(m)));
}

TEST_SUITE_END();
