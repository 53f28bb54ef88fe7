#pragma once

#include <cstddef>
#include <vector>

#include "racerl/binio.hpp"

namespace racerl {

// One replay record: observation vectors, action index, reward, terminal flag.
struct Transition {
  std::vector<double> state;
  std::vector<double> next_state;
  int action = 0;
  double reward = 0.0;
  bool done = false;
};

/**
 * Sum tree over transition priorities for O(log N) proportional sampling.
 *
 * Complete binary tree in a flat array:
 *   - node 1 is the root (total priority)
 *   - internal node i has children 2i and 2i+1
 *   - leaves live at [capacity, 2*capacity)
 *
 * Each node also tracks the max priority of its subtree, so the max over the
 * stored transitions stays exact as slots are overwritten. Writes recompute
 * the sums along the root path instead of propagating deltas, which keeps
 * internal nodes consistent with a brute-force re-summation.
 *
 * Slots are written round-robin: once full, push() overwrites the oldest.
 */
class SumTree {
 public:
  explicit SumTree(size_t capacity);  // must be a power of two

  // Writes the slot at the cursor and returns its leaf index. priority >= 0.
  size_t push(Transition transition, double priority);

  void update(size_t leaf, double priority);

  double total() const { return sum_[1]; }
  double max_priority() const { return max_[1]; }
  size_t size() const { return size_; }
  size_t capacity() const { return capacity_; }

  double priority_of(size_t leaf) const;
  const Transition& at(size_t leaf) const;

  // Raw node values (1-indexed, internal nodes in [1, capacity)), for
  // consistency checks against an external re-summation.
  double node_sum(size_t node) const { return sum_[node]; }
  double node_max(size_t node) const { return max_[node]; }

  struct SampleRef {
    size_t leaf = 0;
    double priority = 0.0;
  };
  // Leaf whose cumulative priority interval contains prefix; requires
  // 0 <= prefix < total().
  SampleRef sample(double prefix) const;

  // Bit-exact snapshot, including internal node values and the ring cursor,
  // so a restored tree samples identically to the original.
  void serialize(BinWriter& w) const;
  static SumTree deserialize(BinReader& r);

 private:
  void refresh_path(size_t node);
  void check_leaf(size_t leaf) const;

  size_t capacity_;
  size_t size_ = 0;
  size_t write_ = 0;
  std::vector<double> sum_;  // 1-indexed, 2 * capacity entries
  std::vector<double> max_;
  std::vector<Transition> data_;
};

}  // namespace racerl
