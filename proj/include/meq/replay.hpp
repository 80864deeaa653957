#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "meq/rng.hpp"

namespace meq {

/// One replay record. bootstrap is false only for crash terminations; timeouts
/// keep it true so critic targets still use the next-state value.
struct Transition {
  Eigen::VectorXd obs;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_obs;
  bool bootstrap = true;
};

/// Column layout: row i of every member describes sample i.
struct TransitionBatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_obs;
  Eigen::ArrayXd bootstrap;  // 1.0 or 0.0 per row

  Eigen::Index size() const { return obs.rows(); }
};

enum class StoragePrecision { f64, f32 };

/// Fixed-capacity ring of transitions over flat preallocated arrays.
/// Sampling is uniform with replacement. Compute is always 64-bit; the
/// f32 flag only halves the storage footprint.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim,
               StoragePrecision precision = StoragePrecision::f64);

  void push(const Transition& t);
  /// Throws std::runtime_error when size() < n.
  TransitionBatch sample(int n, RngStream& rng) const;
  /// Stored record at a ring slot (tests).
  Transition get(std::size_t index) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

 private:
  // Plain array that stores either f64 or f32 behind a fixed-width interface.
  struct FieldStore {
    StoragePrecision precision = StoragePrecision::f64;
    std::vector<double> d;
    std::vector<float> f;

    void init(std::size_t n, StoragePrecision p);
    void set(std::size_t i, double v);
    double get(std::size_t i) const;
  };

  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  FieldStore obs_, actions_, rewards_, next_obs_;
  std::vector<std::uint8_t> bootstrap_;
};

}  // namespace meq
