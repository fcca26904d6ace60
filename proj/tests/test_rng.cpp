#include <doctest.h>

#include <cmath>

#include "dtx/rng.hpp"

using dtx::Rng;

TEST_SUITE("rng") {
  TEST_CASE("identical seed and stream give identical draws") {
    Rng a(123, 7), b(123, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  }

  TEST_CASE("streams are independent") {
    Rng a(123, 1), b(123, 2);
    int equal = 0;
    for (int i = 0; i < 64; ++i)
      if (a.next_u64() == b.next_u64()) ++equal;
    CHECK(equal == 0);
  }

  TEST_CASE("fork is deterministic and distinct") {
    Rng base(9, 0);
    Rng f1 = base.fork(5);
    Rng f2 = base.fork(5);
    Rng f3 = base.fork(6);
    CHECK(f1.next_u64() == f2.next_u64());
    CHECK(f1.next_u64() != f3.next_u64());
  }

  TEST_CASE("uniform01 stays in range and is roughly centred") {
    Rng r(1, 1);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double u = r.uniform01();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      sum += u;
    }
    CHECK(std::abs(sum / 20000 - 0.5) < 0.01);
  }

  TEST_CASE("uniform_int covers the inclusive range") {
    Rng r(2, 2);
    bool lo = false, hi = false;
    for (int i = 0; i < 2000; ++i) {
      const long v = r.uniform_int(3, 7);
      CHECK(v >= 3);
      CHECK(v <= 7);
      lo |= v == 3;
      hi |= v == 7;
    }
    CHECK(lo);
    CHECK(hi);
  }

  TEST_CASE("normal moments") {
    Rng r(3, 3);
    double sum = 0, sq = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      const double z = r.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sq / n - 1.0) < 0.03);
  }

  TEST_CASE("poisson mean and edge cases") {
    Rng r(4, 4);
    CHECK(r.poisson(0.0) == 0);
    CHECK(r.poisson(-1.0) == 0);
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(r.poisson(4.0));
    CHECK(std::abs(sum / n - 4.0) < 0.1);
  }
}
