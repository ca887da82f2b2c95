#include "mdta2g/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace mdta2g;

TEST(Rng, UniformFollowsDocumentedTransform) {
  Rng rng(42);
  std::mt19937_64 ref(42);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(rng.uniform(), static_cast<double>(ref() >> 11) * 0x1.0p-53);
  }
}

TEST(Rng, UniformIntIsModulo) {
  Rng rng(7);
  std::mt19937_64 ref(7);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(rng.uniform_int(13), ref() % 13);
  EXPECT_THROW(rng.uniform_int(0), std::invalid_argument);
}

TEST(Rng, NormalIsBoxMullerWithSpare) {
  Rng rng(3);
  std::mt19937_64 ref(3);
  for (int i = 0; i < 100; ++i) {
    double u1 = static_cast<double>(ref() >> 11) * 0x1.0p-53;
    while (u1 <= 0.0) u1 = static_cast<double>(ref() >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(ref() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    EXPECT_EQ(rng.normal(), r * std::cos(2.0 * std::numbers::pi * u2));
    EXPECT_EQ(rng.normal(), r * std::sin(2.0 * std::numbers::pi * u2));
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, SerializeRoundTripContinuesStream) {
  Rng a(99);
  a.normal();  // leaves a cached spare
  Rng b;
  b.deserialize(a.serialize());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 8; ++s) {
    for (std::uint64_t i = 0; i < 64; ++i) seen.insert(derive_seed(s, i));
  }
  EXPECT_EQ(seen.size(), 8u * 64u);
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}
