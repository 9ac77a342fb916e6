#include "frugal/replay.hpp"

#include <cmath>
#include <stdexcept>

namespace frugal {

namespace {
bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}  // namespace

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
  if (!is_pow2(capacity)) throw std::invalid_argument("SumTree: capacity must be a power of two");
  nodes_.assign(2 * capacity_, 0.0);
}

std::size_t SumTree::push(double priority) {
  const std::size_t slot = cursor_;
  set(slot, priority);
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
  return slot;
}

void SumTree::set(std::size_t slot, double priority) {
  if (slot >= capacity_) throw std::out_of_range("SumTree::set: slot out of range");
  if (priority < 0.0 || !std::isfinite(priority))
    throw std::invalid_argument("SumTree::set: priority must be finite and >= 0");
  std::size_t i = capacity_ + slot;
  nodes_[i] = priority;
  for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

std::size_t SumTree::find_prefix(double q) const {
  std::size_t i = 1;
  while (i < capacity_) {
    const std::size_t left = 2 * i;
    if (q < nodes_[left]) {
      i = left;
    } else {
      q -= nodes_[left];
      i = left + 1;
    }
  }
  return i - capacity_;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha, double eps_prio)
    : tree_([&] {
        std::size_t c = 1;
        while (c < capacity) c <<= 1;
        return c;
      }()),
      alpha_(alpha),
      eps_prio_(eps_prio) {
  if (alpha_ < 0.0) throw std::invalid_argument("ReplayBuffer: alpha must be >= 0");
  if (eps_prio_ <= 0.0) throw std::invalid_argument("ReplayBuffer: eps_prio must be > 0");
  storage_.resize(tree_.capacity());
}

std::size_t ReplayBuffer::push(const CostedTransition& t, double priority) {
  if (priority < 0.0) throw std::invalid_argument("ReplayBuffer::push: negative priority");
  if (priority > max_priority_) max_priority_ = priority;
  const std::size_t slot = tree_.push(std::pow(priority, alpha_));
  storage_[slot] = t;
  return slot;
}

SampleBatch ReplayBuffer::sample(std::size_t batch_size, double beta, Rng& rng) const {
  if (batch_size == 0) throw std::invalid_argument("ReplayBuffer::sample: empty batch");
  if (size() < batch_size)
    throw std::logic_error("ReplayBuffer::sample: fewer stored transitions than batch_size");

  SampleBatch out;
  out.transitions.reserve(batch_size);
  out.indices.reserve(batch_size);
  out.is_weights.reserve(batch_size);

  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch_size);
  const double n = static_cast<double>(size());
  double w_max = 0.0;
  for (std::size_t i = 0; i < batch_size; ++i) {
    double q = (static_cast<double>(i) + rng.uniform01()) * segment;
    if (q >= total) q = std::nextafter(total, 0.0);
    const std::size_t slot = tree_.find_prefix(q);
    const double prob = tree_.leaf(slot) / total;
    const double w = std::pow(n * prob, -beta);
    out.indices.push_back(slot);
    out.transitions.push_back(storage_[slot]);
    out.is_weights.push_back(w);
    if (w > w_max) w_max = w;
  }
  for (auto& w : out.is_weights) w /= w_max;
  return out;
}

void ReplayBuffer::update_priorities(const std::vector<std::size_t>& indices,
                                     const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size())
    throw std::invalid_argument("update_priorities: index/error size mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size())
      throw std::out_of_range("update_priorities: stale index");
    const double raw = std::fabs(td_errors[i]) + eps_prio_;
    if (raw > max_priority_) max_priority_ = raw;
    tree_.set(indices[i], std::pow(raw, alpha_));
  }
}

NStepAssembler::NStepAssembler(int n, double gamma) : n_(n), gamma_(gamma) {
  if (n_ < 1) throw std::invalid_argument("NStepAssembler: n must be >= 1");
}

CostedTransition NStepAssembler::collapse(std::size_t first) const {
  CostedTransition out = window_[first];
  double disc = std::pow(gamma_, out.base_steps);
  for (std::size_t i = first + 1; i < window_.size(); ++i) {
    const auto& t = window_[i];
    out.reward += disc * t.reward;
    disc *= std::pow(gamma_, t.base_steps);
    out.base_steps += t.base_steps;
    out.measured_count += t.measured_count;
  }
  const auto& last = window_.back();
  out.next_obs = last.next_obs;
  out.terminal = last.terminal;
  out.truncated = last.truncated;
  return out;
}

std::vector<CostedTransition> NStepAssembler::push(const CostedTransition& t) {
  std::vector<CostedTransition> ready;
  if (n_ == 1) {  // identity transform
    ready.push_back(t);
    return ready;
  }
  window_.push_back(t);
  if (t.terminal || t.truncated) {
    for (std::size_t i = 0; i < window_.size(); ++i) ready.push_back(collapse(i));
    window_.clear();
  } else if (static_cast<int>(window_.size()) == n_) {
    ready.push_back(collapse(0));
    window_.pop_front();
  }
  return ready;
}

std::vector<CostedTransition> NStepAssembler::flush() {
  std::vector<CostedTransition> ready;
  for (std::size_t i = 0; i < window_.size(); ++i) ready.push_back(collapse(i));
  window_.clear();
  return ready;
}

}  // namespace frugal
