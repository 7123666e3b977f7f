#include "bpi/order_tree.hpp"

#include <stdexcept>

#include "bpi/rng.hpp"

namespace bpi {

void OrderTree::update(std::int32_t n) {
  Node& node = nodes_[n];
  node.size = 1 + size_of(node.left) + size_of(node.right);
}

void OrderTree::split(std::int32_t t, std::size_t k, std::int32_t& left, std::int32_t& right) {
  if (t == kNil) {
    left = right = kNil;
    return;
  }
  if (size_of(nodes_[t].left) < k) {
    std::int32_t r = kNil;
    split(nodes_[t].right, k - size_of(nodes_[t].left) - 1, r, right);
    nodes_[t].right = r;
    update(t);
    left = t;
  } else {
    std::int32_t l = kNil;
    split(nodes_[t].left, k, left, l);
    nodes_[t].left = l;
    update(t);
    right = t;
  }
}

std::int32_t OrderTree::merge(std::int32_t a, std::int32_t b) {
  if (a == kNil) return b;
  if (b == kNil) return a;
  if (nodes_[a].priority > nodes_[b].priority) {
    nodes_[a].right = merge(nodes_[a].right, b);
    update(a);
    return a;
  }
  nodes_[b].left = merge(a, nodes_[b].left);
  update(b);
  return b;
}

std::int32_t OrderTree::allocate(std::int64_t id) {
  // Priorities come from a counter hash, so the shape is deterministic.
  Node node{id, splitmix64(++counter_)};
  if (!free_.empty()) {
    const std::int32_t slot = free_.back();
    free_.pop_back();
    nodes_[slot] = node;
    return slot;
  }
  nodes_.push_back(node);
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

void OrderTree::insert(std::size_t position, std::int64_t id) {
  if (position > size()) throw std::out_of_range("OrderTree::insert position");
  std::int32_t left = kNil;
  std::int32_t right = kNil;
  split(root_, position, left, right);
  root_ = merge(merge(left, allocate(id)), right);
}

std::int64_t OrderTree::at(std::size_t position) const {
  if (position >= size()) throw std::out_of_range("OrderTree::at position");
  std::int32_t n = root_;
  for (;;) {
    const std::size_t ls = size_of(nodes_[n].left);
    if (position < ls) {
      n = nodes_[n].left;
    } else if (position == ls) {
      return nodes_[n].id;
    } else {
      position -= ls + 1;
      n = nodes_[n].right;
    }
  }
}

std::int64_t OrderTree::erase(std::size_t position) {
  if (position >= size()) throw std::out_of_range("OrderTree::erase position");
  std::int32_t left = kNil;
  std::int32_t mid = kNil;
  std::int32_t right = kNil;
  split(root_, position, left, mid);
  split(mid, 1, mid, right);
  const std::int64_t id = nodes_[mid].id;
  free_.push_back(mid);
  root_ = merge(left, right);
  return id;
}

std::vector<std::int64_t> OrderTree::to_vector() const {
  std::vector<std::int64_t> out;
  out.reserve(size());
  std::vector<std::int32_t> stack;
  std::int32_t n = root_;
  while (n != kNil || !stack.empty()) {
    while (n != kNil) {
      stack.push_back(n);
      n = nodes_[n].left;
    }
    n = stack.back();
    stack.pop_back();
    out.push_back(nodes_[n].id);
    n = nodes_[n].right;
  }
  return out;
}

}  // namespace bpi
