#pragma once

#include <cstdint>
#include <vector>

namespace bpi {

/// Implicit treap: a sequence of ids with O(log n) insert, erase and
/// lookup by position. Positions are 0-based ranks from the left.
class OrderTree {
 public:
  std::size_t size() const { return root_ == kNil ? 0 : nodes_[root_].size; }
  bool empty() const { return size() == 0; }

  void insert(std::size_t position, std::int64_t id);
  std::int64_t at(std::size_t position) const;
  /// Removes and returns the id at `position`.
  std::int64_t erase(std::size_t position);
  std::vector<std::int64_t> to_vector() const;

 private:
  static constexpr std::int32_t kNil = -1;

  struct Node {
    std::int64_t id;
    std::uint64_t priority;
    std::int32_t left = kNil;
    std::int32_t right = kNil;
    std::size_t size = 1;
  };

  std::size_t size_of(std::int32_t n) const { return n == kNil ? 0 : nodes_[n].size; }
  void update(std::int32_t n);
  // Splits t into the first `k` elements and the rest.
  void split(std::int32_t t, std::size_t k, std::int32_t& left, std::int32_t& right);
  std::int32_t merge(std::int32_t a, std::int32_t b);
  std::int32_t allocate(std::int64_t id);

  std::vector<Node> nodes_;
  std::vector<std::int32_t> free_;
  std::int32_t root_ = kNil;
  std::uint64_t counter_ = 0;
};

}  // namespace bpi
