#pragma once

// Add/delete proposal over subsets of a contiguous candidate range
// [first, first + universe), with an optional size cap. One element is added or
// removed per move; at a boundary (empty set, or size at the cap) the only
// feasible move is taken with probability 1 and the Hastings ratio accounts for it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "dagreg/distributions.hpp"
#include "dagreg/rng.hpp"

namespace dagreg {

struct SubsetMove {
  bool add = false;
  std::size_t element = 0;
  double log_hastings = 0.0;  // log q(old | new) - log q(new | old)
};

class AddDeleteKernel {
 public:
  AddDeleteKernel(std::size_t first, std::size_t universe, std::size_t cap)
      : first_(first), universe_(universe), limit_(std::min(cap, universe)) {}

  double add_probability(std::size_t size) const {
    const bool can_add = size < limit_;
    const bool can_delete = size > 0;
    if (can_add && can_delete) return 0.5;
    return can_add ? 1.0 : 0.0;
  }
  double delete_probability(std::size_t size) const {
    const bool can_add = size < limit_;
    const bool can_delete = size > 0;
    if (can_add && can_delete) return 0.5;
    return can_delete ? 1.0 : 0.0;
  }

  /// Log proposal probability of moving from a set of size `size` to one that
  /// differs by the given move.
  double log_forward(std::size_t size, bool add) const {
    if (add) return std::log(add_probability(size)) - std::log(double(universe_ - size));
    return std::log(delete_probability(size)) - std::log(double(size));
  }

  /// nullopt when no move is feasible (empty universe or zero cap).
  std::optional<SubsetMove> propose(Rng& rng, const std::vector<std::size_t>& current) const {
    const std::size_t size = current.size();
    const double p_add = add_probability(size);
    if (p_add == 0.0 && size == 0) return std::nullopt;

    SubsetMove move;
    move.add = p_add == 1.0 || (p_add > 0.0 && rng.uniform() < p_add);
    if (move.add) {
      // rejection sampling among non-members
      for (;;) {
        const std::size_t cand = first_ + draw_index(rng, universe_);
        if (!std::binary_search(current.begin(), current.end(), cand)) {
          move.element = cand;
          break;
        }
      }
      move.log_hastings = log_forward(size + 1, false) - log_forward(size, true);
    } else {
      move.element = current[draw_index(rng, size)];
      move.log_hastings = log_forward(size - 1, true) - log_forward(size, false);
    }
    return move;
  }

  static void apply(std::vector<std::size_t>& set, const SubsetMove& move) {
    auto it = std::lower_bound(set.begin(), set.end(), move.element);
    if (move.add) {
      set.insert(it, move.element);
    } else {
      set.erase(it);
    }
  }

 private:
  std::size_t first_;
  std::size_t universe_;
  std::size_t limit_;
};

}  // namespace dagreg
