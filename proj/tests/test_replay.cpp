#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "meq/replay.hpp"

using namespace meq;

namespace {

Transition numbered(double k, int obs_dim = 3, int act_dim = 2) {
  Transition t;
  t.obs = Eigen::VectorXd::Constant(obs_dim, k);
  t.action = Eigen::VectorXd::Constant(act_dim, -k);
  t.reward = k;
  t.next_obs = Eigen::VectorXd::Constant(obs_dim, k + 0.5);
  t.bootstrap = (static_cast<long>(k) % 2) == 0;
  return t;
}

}  // namespace

TEST_CASE("push grows size until capacity, then overwrites the oldest") {
  ReplayBuffer buf(5, 3, 2);
  for (int i = 0; i < 3; ++i) buf.push(numbered(i));
  CHECK(buf.size() == 3);

  // stored verbatim before any overwrite
  const Transition t1 = buf.get(1);
  CHECK(t1.reward == 1.0);
  CHECK(t1.obs(0) == 1.0);
  CHECK(t1.next_obs(2) == 1.5);
  CHECK(t1.action(1) == -1.0);
  CHECK(t1.bootstrap == false);

  for (int i = 3; i < 6; ++i) buf.push(numbered(i));
  CHECK(buf.size() == 5);
  // slot 0 now holds item 5 (the ring wrapped once)
  CHECK(buf.get(0).reward == 5.0);
  CHECK(buf.get(1).reward == 1.0);
}

TEST_CASE("after >= capacity pushes the stored set is exactly the last capacity items") {
  const std::size_t cap = 16;
  ReplayBuffer buf(cap, 3, 2);
  const int total = 100;
  for (int i = 0; i < total; ++i) buf.push(numbered(i));
  CHECK(buf.size() == cap);
  std::vector<bool> seen(total, false);
  for (std::size_t i = 0; i < cap; ++i) {
    const int k = static_cast<int>(buf.get(i).reward);
    seen[k] = true;
  }
  for (int k = 0; k < total; ++k) {
    CHECK(seen[k] == (k >= total - static_cast<int>(cap)));
  }
}

TEST_CASE("sampling a single-item buffer returns that item") {
  ReplayBuffer buf(4, 3, 2);
  buf.push(numbered(7));
  RngStream rng(1);
  const TransitionBatch b = buf.sample(1, rng);
  CHECK(b.size() == 1);
  CHECK(b.rewards(0) == 7.0);
  CHECK(b.obs(0, 0) == 7.0);
  CHECK(b.bootstrap(0) == 0.0);  // 7 is odd -> terminated
}

TEST_CASE("sampling more than stored is an error") {
  ReplayBuffer buf(4, 3, 2);
  buf.push(numbered(1));
  RngStream rng(2);
  CHECK_THROWS_AS((void)buf.sample(2, rng), std::runtime_error);
}

TEST_CASE("index frequencies over 1e5 draws pass a 5-sigma chi-square check") {
  const int slots = 10;
  ReplayBuffer buf(slots, 3, 2);
  for (int i = 0; i < slots; ++i) buf.push(numbered(i));
  RngStream rng(3);
  std::vector<long> counts(slots, 0);
  const int draws = 100000;
  const int per_batch = 100;
  for (int i = 0; i < draws / per_batch; ++i) {
    const TransitionBatch b = buf.sample(per_batch, rng);
    for (Eigen::Index r = 0; r < b.size(); ++r) counts[static_cast<int>(b.rewards(r))] += 1;
  }
  const double expected = static_cast<double>(draws) / slots;
  double chi2 = 0.0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // df = 9: mean 9, variance 18
  CHECK(chi2 < 9.0 + 5.0 * std::sqrt(18.0));
}

TEST_CASE("same seed gives the same sample sequence") {
  ReplayBuffer buf(64, 3, 2);
  for (int i = 0; i < 64; ++i) buf.push(numbered(i));
  RngStream r1(9), r2(9);
  const TransitionBatch a = buf.sample(32, r1);
  const TransitionBatch b = buf.sample(32, r2);
  CHECK(a.rewards == b.rewards);
  CHECK(a.obs == b.obs);
}

TEST_CASE("f32 storage keeps values within float precision, compute stays double") {
  ReplayBuffer buf(4, 3, 2, StoragePrecision::f32);
  Transition t = numbered(0);
  t.obs(0) = 0.1;  // not exactly representable in binary32
  buf.push(t);
  const Transition out = buf.get(0);
  CHECK(out.obs(0) == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(out.obs(0) != 0.1);  // storage really is 32-bit
}
