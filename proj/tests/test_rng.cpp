#include <doctest.h>

#include "odtr/rng.hpp"

using namespace odtr;

TEST_CASE("identical keys reproduce the sequence exactly") {
  SeededRng a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct streams differ") {
  SeededRng a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    if (x == b.next_u64()) ++same_ab;
    if (x == c.next_u64()) ++same_ac;
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("uniform01 stays strictly inside (0,1)") {
  SeededRng rng(1, 2);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform_index covers the range") {
  SeededRng rng(5, 0);
  bool seen[7] = {};
  for (int i = 0; i < 1000; ++i) {
    const auto k = rng.uniform_index(7);
    REQUIRE(k < 7);
    seen[k] = true;
  }
  for (bool s : seen) CHECK(s);
}
