#include "meq/replay.hpp"

#include <stdexcept>
#include <string>

namespace meq {

void ReplayBuffer::FieldStore::init(std::size_t n, StoragePrecision p) {
  precision = p;
  if (p == StoragePrecision::f64) {
    d.assign(n, 0.0);
  } else {
    f.assign(n, 0.0f);
  }
}

void ReplayBuffer::FieldStore::set(std::size_t i, double v) {
  if (precision == StoragePrecision::f64) {
    d[i] = v;
  } else {
    f[i] = static_cast<float>(v);
  }
}

double ReplayBuffer::FieldStore::get(std::size_t i) const {
  return precision == StoragePrecision::f64 ? d[i] : static_cast<double>(f[i]);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim,
                           StoragePrecision precision)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  obs_.init(capacity * static_cast<std::size_t>(obs_dim), precision);
  actions_.init(capacity * static_cast<std::size_t>(act_dim), precision);
  rewards_.init(capacity, precision);
  next_obs_.init(capacity * static_cast<std::size_t>(obs_dim), precision);
  bootstrap_.assign(capacity, 1);
}

void ReplayBuffer::push(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_ || t.action.size() != act_dim_) {
    throw std::invalid_argument("ReplayBuffer::push: transition shape mismatch");
  }
  const std::size_t base_obs = head_ * static_cast<std::size_t>(obs_dim_);
  const std::size_t base_act = head_ * static_cast<std::size_t>(act_dim_);
  for (int i = 0; i < obs_dim_; ++i) {
    obs_.set(base_obs + i, t.obs(i));
    next_obs_.set(base_obs + i, t.next_obs(i));
  }
  for (int i = 0; i < act_dim_; ++i) actions_.set(base_act + i, t.action(i));
  rewards_.set(head_, t.reward);
  bootstrap_[head_] = t.bootstrap ? 1 : 0;

  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) size_ += 1;
}

TransitionBatch ReplayBuffer::sample(int n, RngStream& rng) const {
  if (n < 1) throw std::invalid_argument("ReplayBuffer::sample: n must be >= 1");
  if (size_ < static_cast<std::size_t>(n)) {
    throw std::runtime_error("ReplayBuffer::sample: buffer holds " + std::to_string(size_) +
                             " transitions, need " + std::to_string(n));
  }
  TransitionBatch b;
  b.obs.resize(n, obs_dim_);
  b.actions.resize(n, act_dim_);
  b.rewards.resize(n);
  b.next_obs.resize(n, obs_dim_);
  b.bootstrap.resize(n);
  for (int row = 0; row < n; ++row) {
    const std::size_t idx = rng.uniform_index(size_);
    const std::size_t base_obs = idx * static_cast<std::size_t>(obs_dim_);
    const std::size_t base_act = idx * static_cast<std::size_t>(act_dim_);
    for (int i = 0; i < obs_dim_; ++i) {
      b.obs(row, i) = obs_.get(base_obs + i);
      b.next_obs(row, i) = next_obs_.get(base_obs + i);
    }
    for (int i = 0; i < act_dim_; ++i) b.actions(row, i) = actions_.get(base_act + i);
    b.rewards(row) = rewards_.get(idx);
    b.bootstrap(row) = bootstrap_[idx] ? 1.0 : 0.0;
  }
  return b;
}

Transition ReplayBuffer::get(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("ReplayBuffer::get: index past size");
  Transition t;
  t.obs.resize(obs_dim_);
  t.next_obs.resize(obs_dim_);
  t.action.resize(act_dim_);
  const std::size_t base_obs = index * static_cast<std::size_t>(obs_dim_);
  const std::size_t base_act = index * static_cast<std::size_t>(act_dim_);
  for (int i = 0; i < obs_dim_; ++i) {
    t.obs(i) = obs_.get(base_obs + i);
    t.next_obs(i) = next_obs_.get(base_obs + i);
  }
  for (int i = 0; i < act_dim_; ++i) t.action(i) = actions_.get(base_act + i);
  t.reward = rewards_.get(index);
  t.bootstrap = bootstrap_[index] != 0;
  return t;
}

}  // namespace meq
