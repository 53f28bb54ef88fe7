#include "racerl/sum_tree.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace racerl {

namespace {

bool is_power_of_two(size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SumTree::SumTree(size_t capacity)
    : capacity_(capacity),
      sum_(2 * capacity, 0.0),
      max_(2 * capacity, 0.0),
      data_(capacity) {
  if (!is_power_of_two(capacity)) {
    throw std::invalid_argument("sum tree: capacity must be a power of two");
  }
}

void SumTree::check_leaf(size_t leaf) const {
  if (leaf >= capacity_) {
    throw std::out_of_range("sum tree: leaf " + std::to_string(leaf) + " out of range");
  }
}

void SumTree::refresh_path(size_t node) {
  while (node > 1) {
    node /= 2;
    sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
    max_[node] = std::max(max_[2 * node], max_[2 * node + 1]);
  }
}

size_t SumTree::push(Transition transition, double priority) {
  if (priority < 0.0) throw std::invalid_argument("sum tree: negative priority");
  const size_t leaf = write_;
  data_[leaf] = std::move(transition);
  sum_[capacity_ + leaf] = priority;
  max_[capacity_ + leaf] = priority;
  refresh_path(capacity_ + leaf);
  write_ = (write_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  return leaf;
}

void SumTree::update(size_t leaf, double priority) {
  check_leaf(leaf);
  if (priority < 0.0) throw std::invalid_argument("sum tree: negative priority");
  sum_[capacity_ + leaf] = priority;
  max_[capacity_ + leaf] = priority;
  refresh_path(capacity_ + leaf);
}

double SumTree::priority_of(size_t leaf) const {
  check_leaf(leaf);
  return sum_[capacity_ + leaf];
}

const Transition& SumTree::at(size_t leaf) const {
  check_leaf(leaf);
  return data_[leaf];
}

SumTree::SampleRef SumTree::sample(double prefix) const {
  if (!(prefix >= 0.0 && prefix < total())) {
    throw std::out_of_range("sum tree: prefix outside [0, total)");
  }
  size_t node = 1;
  while (node < capacity_) {
    const size_t left = 2 * node;
    if (prefix < sum_[left]) {
      node = left;
    } else {
      prefix -= sum_[left];
      node = left + 1;
    }
  }
  const size_t leaf = node - capacity_;
  return {leaf, sum_[node]};
}

void SumTree::serialize(BinWriter& w) const {
  w.u64(capacity_);
  w.u64(size_);
  w.u64(write_);
  for (double v : sum_) w.f64(v);
  for (double v : max_) w.f64(v);
  for (const Transition& t : data_) {
    w.u64(t.state.size());
    for (double x : t.state) w.f64(x);
    w.u64(t.next_state.size());
    for (double x : t.next_state) w.f64(x);
    w.u32(static_cast<uint32_t>(t.action));
    w.f64(t.reward);
    w.u8(t.done ? 1 : 0);
  }
}

SumTree SumTree::deserialize(BinReader& r) {
  const uint64_t capacity = r.u64();
  if (!is_power_of_two(capacity)) {
    throw FormatError("sum tree: capacity is not a power of two", r.offset());
  }
  SumTree tree(capacity);
  tree.size_ = r.u64();
  tree.write_ = r.u64();
  if (tree.size_ > capacity || tree.write_ >= capacity) {
    throw FormatError("sum tree: counters out of range", r.offset());
  }
  for (double& v : tree.sum_) v = r.f64();
  for (double& v : tree.max_) v = r.f64();
  for (Transition& t : tree.data_) {
    t.state.resize(r.u64());
    for (double& x : t.state) x = r.f64();
    t.next_state.resize(r.u64());
    for (double& x : t.next_state) x = r.f64();
    t.action = static_cast<int>(r.u32());
    t.reward = r.f64();
    t.done = r.u8() != 0;
  }
  return tree;
}

}  // namespace racerl
