#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "meq/rng.hpp"

using meq::RngStream;

TEST_CASE("same seed reproduces the same sequence") {
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds and different split labels diverge") {
  RngStream a(1), b(2);
  CHECK(a.next_u64() != b.next_u64());

  RngStream root(7);
  RngStream env = root.split("env");
  RngStream action = root.split("action");
  CHECK(env.next_u64() != action.next_u64());
  // splitting does not advance the parent
  RngStream root2(7);
  (void)root2.split("env");
  CHECK(root.next_u64() == root2.next_u64());
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
  RngStream r(3);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform_index covers [0,n) roughly evenly") {
  RngStream r(11);
  const int n = 8;
  std::vector<int> counts(n, 0);
  const int draws = 80000;
  for (int i = 0; i < draws; ++i) {
    const auto k = r.uniform_index(n);
    REQUIRE(k < static_cast<std::uint64_t>(n));
    counts[k] += 1;
  }
  const double expected = draws / static_cast<double>(n);
  for (int c : counts) CHECK(std::abs(c - expected) < 5.0 * std::sqrt(expected));
}

TEST_CASE("normal has unit variance and zero mean") {
  RngStream r(5);
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);
}

TEST_CASE("state round trip resumes the stream exactly") {
  RngStream r(9);
  for (int i = 0; i < 123; ++i) (void)r.next_u64();
  const auto key = r.key();
  const auto counter = r.counter();
  std::vector<std::uint64_t> expect;
  for (int i = 0; i < 50; ++i) expect.push_back(r.next_u64());

  RngStream resumed = RngStream::from_state(key, counter);
  for (int i = 0; i < 50; ++i) CHECK(resumed.next_u64() == expect[i]);
}
