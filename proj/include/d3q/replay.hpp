#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "d3q/errors.hpp"

namespace d3q {

// (s, a, r, s', t) plus the user response template that followed a, which the
// world model learns to predict. `session` ties tuples to the dialogue they
// came from so gated buffers can be audited per session.
struct Experience {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool terminal = false;
  bool timeout = false;  // cut by the turn limit
  int user_template = 0;
  std::uint64_t session = 0;
};

enum class Provenance { real, simulated };

// One dialogue session as the discriminator sees it.
struct EpisodeRecord {
  std::vector<Eigen::VectorXd> features;  // concat(state, one-hot action) per turn
  Provenance provenance = Provenance::real;
  double episode_return = 0.0;
  bool success = false;
  std::uint64_t session = 0;
  std::vector<Experience> tuples;

  std::size_t turns() const { return features.size(); }
};

// FIFO ring with a fixed capacity. Oldest entries are evicted first.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  void push(T item) {
    if (capacity_ == 0) return;
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(item));
  }

  const T& operator[](std::size_t i) const { return items_[i]; }
  const T& front() const { return items_.front(); }
  const T& back() const { return items_.back(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // Uniform sampling with replacement.
  template <class Rng>
  std::vector<const T*> sample(Rng& rng, std::size_t n) const {
    if (items_.empty()) throw EmptyBuffer("sampling from an empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<const T*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[pick(rng)]);
    return out;
  }

  void clear() { items_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
};

// FIFO store of whole sessions, bounded by session count.
class SessionBuffer {
 public:
  explicit SessionBuffer(std::size_t capacity_sessions = 0) : capacity_(capacity_sessions) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t sessions() const { return items_.size(); }
  std::size_t turns() const { return turns_; }
  bool empty() const { return items_.empty(); }

  void push(EpisodeRecord ep) {
    turns_ += ep.turns();
    items_.push_back(std::move(ep));
    while (items_.size() > capacity_) {
      turns_ -= items_.front().turns();
      items_.pop_front();
    }
  }

  const EpisodeRecord& operator[](std::size_t i) const { return items_[i]; }
  const EpisodeRecord& back() const { return items_.back(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // The most recent n sessions, oldest first.
  std::vector<const EpisodeRecord*> recent(std::size_t n) const {
    std::vector<const EpisodeRecord*> out;
    const std::size_t start = items_.size() > n ? items_.size() - n : 0;
    for (std::size_t i = start; i < items_.size(); ++i) out.push_back(&items_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t turns_ = 0;
  std::deque<EpisodeRecord> items_;
};

}  // namespace d3q
