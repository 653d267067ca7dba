#pragma once

#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "cfregret/types.hpp"

namespace cfregret {

/// Actions and feedback of every user up to the end of the last completed
/// step, plus the reverse index "who rated item i".
///
/// Only the engine appends. Recommenders receive a const reference, so what
/// they see is always the history as of the end of the previous step.
class History {
 public:
  explicit History(std::uint32_t n_users, std::uint32_t reserve_steps = 0)
      : actions_(n_users), feedback_(n_users) {
    for (auto& a : actions_) a.reserve(reserve_steps);
    for (auto& f : feedback_) f.reserve(reserve_steps);
    item_head_.push_back(kNil);
    item_count_.push_back(0);
  }

  std::uint32_t n_users() const noexcept { return static_cast<std::uint32_t>(actions_.size()); }
  std::uint32_t steps() const noexcept { return steps_; }

  std::span<const ItemId> actions(UserId u) const { return actions_.at(u); }
  std::span<const Rating> feedback(UserId u) const { return feedback_.at(u); }

  bool has_rated(UserId u, ItemId i) const {
    if (i >= item_head_.size()) return false;
    if (item_count_[i] <= kScanLimit) {
      for (auto e = item_head_[i]; e != kNil; e = entries_[e].next) {
        if (entries_[e].user == u) return true;
      }
      return false;
    }
    return pairs_.contains(pair_key(u, i));
  }

  std::size_t rater_count(ItemId i) const {
    return i < item_count_.size() ? item_count_[i] : 0;
  }

  /// Users that rated item i, ascending.
  std::vector<UserId> raters(ItemId i) const {
    std::vector<UserId> out;
    if (i >= item_head_.size()) return out;
    out.reserve(item_count_[i]);
    for (auto e = item_head_[i]; e != kNil; e = entries_[e].next) out.push_back(entries_[e].user);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Engine-only mutation. The caller has already checked has_rated.
  void record(UserId u, ItemId i, Rating r) {
    actions_[u].push_back(i);
    feedback_[u].push_back(r);
    if (i >= item_head_.size()) {
      item_head_.resize(i + 1, kNil);
      item_count_.resize(i + 1, 0);
    }
    entries_.push_back({u, item_head_[i]});
    item_head_[i] = static_cast<std::uint32_t>(entries_.size() - 1);
    const auto count = ++item_count_[i];
    if (count == kScanLimit + 1) {
      for (auto e = item_head_[i]; e != kNil; e = entries_[e].next) {
        pairs_.insert(pair_key(entries_[e].user, i));
      }
    } else if (count > kScanLimit + 1) {
      pairs_.insert(pair_key(u, i));
    }
  }

  void end_step() { ++steps_; }

 private:
  // Lists at most this long are scanned; longer ones are mirrored into pairs_.
  static constexpr std::uint32_t kScanLimit = 8;
  static constexpr std::uint32_t kNil = ~std::uint32_t{0};

  struct Entry {
    UserId user;
    std::uint32_t next;
  };

  static std::uint64_t pair_key(UserId u, ItemId i) noexcept { return (i << 20) | u; }

  std::vector<std::vector<ItemId>> actions_;
  std::vector<std::vector<Rating>> feedback_;
  std::vector<std::uint32_t> item_head_;
  std::vector<std::uint32_t> item_count_;
  std::vector<Entry> entries_;
  absl::flat_hash_set<std::uint64_t> pairs_;
  std::uint32_t steps_ = 0;
};

}  // namespace cfregret
