#ifndef FRUGAL_REPLAY_HPP
#define FRUGAL_REPLAY_HPP

#include <cstddef>
#include <deque>
#include <vector>

#include "frugal/acnomdp.hpp"
#include "frugal/rng.hpp"

namespace frugal {

/// Binary sum tree over a power-of-two number of leaves. Leaves hold
/// nonnegative priorities; every internal node is the sum of its children.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);  // capacity must be a power of two

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  double total() const { return nodes_[1]; }
  double leaf(std::size_t slot) const { return nodes_[capacity_ + slot]; }

  /// Store a priority at the write cursor, overwriting the oldest entry when
  /// full. Returns the slot written.
  std::size_t push(double priority);

  void set(std::size_t slot, double priority);

  /// Walk the tree for the leaf covering the prefix sum q in [0, total).
  std::size_t find_prefix(double q) const;

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> nodes_;  // 1-based heap layout, leaves at [capacity, 2*capacity)
};

struct SampleBatch {
  std::vector<CostedTransition> transitions;
  std::vector<std::size_t> indices;
  std::vector<double> is_weights;  // normalized by the batch max, in (0, 1]
};

/// Proportional prioritized replay over CostedTransitions. Raw priorities are
/// transformed to priority^alpha at insertion; TD-error updates apply the
/// (|delta| + eps_prio)^alpha floor rule.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, double alpha, double eps_prio = 1e-3);

  std::size_t size() const { return tree_.size(); }
  std::size_t capacity() const { return tree_.capacity(); }
  double max_priority() const { return max_priority_; }
  const SumTree& tree() const { return tree_; }

  /// Store with the given raw priority (>= 0). Returns the slot index.
  std::size_t push(const CostedTransition& t, double priority);

  /// Stratified proportional sample with importance weights
  /// w_i = (N * P(i))^-beta normalized by the batch max.
  SampleBatch sample(std::size_t batch_size, double beta, Rng& rng) const;

  void update_priorities(const std::vector<std::size_t>& indices,
                         const std::vector<double>& td_errors);

 private:
  SumTree tree_;
  std::vector<CostedTransition> storage_;
  double alpha_;
  double eps_prio_;
  double max_priority_ = 1.0;
};

/// Collapses runs of consecutive one-step transitions into n-step records:
/// reward sum_i gamma^i r_i, next_obs from the last record, base_steps equal
/// to the span (the learner's discount exponent). Emits the shortened tail as
/// soon as the episode ends.
class NStepAssembler {
 public:
  NStepAssembler(int n, double gamma);

  /// Feed one transition; returns zero or more completed records.
  std::vector<CostedTransition> push(const CostedTransition& t);

  /// Must be called at episode end if the last transition was not
  /// terminal/truncated (it normally is); drains pending records.
  std::vector<CostedTransition> flush();

  int n() const { return n_; }

 private:
  CostedTransition collapse(std::size_t first) const;

  int n_;
  double gamma_;
  std::deque<CostedTransition> window_;
};

}  // namespace frugal

#endif  // FRUGAL_REPLAY_HPP
