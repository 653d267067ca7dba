#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cfregret/recommender.hpp"
#include "cfregret/types.hpp"

namespace cfregret {

struct UserUserParams {
  std::uint32_t horizon = 1;
  std::uint32_t n_users = 1;
  std::uint64_t n_user_types = 1;
  double epsilon = 1.0;
  std::uint32_t r = 0;
};

/// r = ceil(2 log2(q_U^2 / eps)), with eps = 1/N unless given.
inline UserUserParams user_user_params(std::uint32_t horizon, std::uint32_t n_users,
                                       std::uint64_t n_user_types,
                                       std::optional<double> epsilon = std::nullopt) {
  if (horizon == 0 || n_users == 0 || n_user_types == 0) {
    throw ConfigError("user-user needs T, N, q_U >= 1");
  }
  UserUserParams p;
  p.horizon = horizon;
  p.n_users = n_users;
  p.n_user_types = n_user_types;
  p.epsilon = epsilon.value_or(1.0 / n_users);
  if (!(p.epsilon > 0.0 && p.epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  const double q = static_cast<double>(n_user_types);
  p.r = static_cast<std::uint32_t>(std::ceil(2.0 * std::log2(q * q / p.epsilon)));
  return p;
}

struct NoisyPartitionParams {
  double gamma = 0.0;
  double lambda = 2.0 / 3.0;
  double epsilon = 1.0;
  std::uint32_t r = 0;
};

/// lambda = (2/3)(1-2g)^2 and r = ceil(4/(1-2g)^2 * log2(N^2 / (2 eps))).
inline NoisyPartitionParams noisy_partition_params(std::uint32_t n_users, double gamma,
                                                   std::optional<double> epsilon = std::nullopt) {
  if (!(gamma >= 0.0 && gamma < 0.5)) throw ConfigError("gamma must lie in [0, 1/2)");
  NoisyPartitionParams p;
  p.gamma = gamma;
  const double margin = (1.0 - 2.0 * gamma) * (1.0 - 2.0 * gamma);
  p.lambda = (2.0 / 3.0) * margin;
  p.epsilon = epsilon.value_or(1.0 / n_users);
  const double n = static_cast<double>(n_users);
  p.r = static_cast<std::uint32_t>(std::ceil(4.0 / margin * std::log2(n * n / (2.0 * p.epsilon))));
  return p;
}

struct UserPartition {
  std::vector<std::uint32_t> labels;              // per user
  std::vector<std::vector<UserId>> groups;        // members ascending

  std::size_t group_count() const noexcept { return groups.size(); }
};

// Builds groups from labels that are dense in [0, k).
inline UserPartition partition_from_labels(std::vector<std::uint32_t> labels) {
  UserPartition p;
  p.labels = std::move(labels);
  for (UserId u = 0; u < p.labels.size(); ++u) {
    const auto k = p.labels[u];
    if (k >= p.groups.size()) p.groups.resize(k + 1);
    p.groups[k].push_back(u);
  }
  return p;
}

/// Equivalence classes of identical rating vectors, labelled in first-seen
/// order. This is the fewest-groups partition in which every group agrees on
/// every item, since agreement has to be exact within a group.
inline UserPartition partition_by_equality(std::span<const std::vector<Rating>> vectors) {
  std::map<std::vector<Rating>, std::uint32_t> seen;
  std::vector<std::uint32_t> labels(vectors.size());
  for (UserId u = 0; u < vectors.size(); ++u) {
    auto [it, inserted] = seen.try_emplace(vectors[u], static_cast<std::uint32_t>(seen.size()));
    labels[u] = it->second;
  }
  return partition_from_labels(std::move(labels));
}

/// Symmetric boolean relation on [0, n).
class Adjacency {
 public:
  explicit Adjacency(std::uint32_t n) : n_(n), bits_(std::size_t{n} * n, 0) {}

  std::uint32_t size() const noexcept { return n_; }
  bool operator()(std::uint32_t a, std::uint32_t b) const { return bits_[std::size_t{a} * n_ + b]; }
  void set(std::uint32_t a, std::uint32_t b, bool on = true) {
    bits_[std::size_t{a} * n_ + b] = on;
    bits_[std::size_t{b} * n_ + a] = on;
  }

 private:
  std::uint32_t n_;
  std::vector<std::uint8_t> bits_;
};

/// Returns the connected components if every one of them is a clique, and
/// nullopt otherwise. Components are labelled by their smallest member.
inline std::optional<UserPartition> clique_partition_check(const Adjacency& adj) {
  const std::uint32_t n = adj.size();
  constexpr auto kNone = ~std::uint32_t{0};
  std::vector<std::uint32_t> labels(n, kNone);
  std::vector<std::uint32_t> stack;
  std::uint32_t next = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (labels[s] != kNone) continue;
    std::vector<std::uint32_t> members;
    labels[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      members.push_back(a);
      for (std::uint32_t b = 0; b < n; ++b) {
        if (b != a && adj(a, b) && labels[b] == kNone) {
          labels[b] = next;
          stack.push_back(b);
        }
      }
    }
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        if (!adj(members[x], members[y])) return std::nullopt;
      }
    }
    ++next;
  }
  return partition_from_labels(std::move(labels));
}

/// True when users share a group exactly when they share a true type.
inline bool partition_matches(const UserPartition& p, std::span<const TypeId> true_types) {
  if (p.labels.size() != true_types.size()) return false;
  std::map<std::uint32_t, TypeId> label_to_type;
  std::map<TypeId, std::uint32_t> type_to_label;
  for (std::size_t u = 0; u < true_types.size(); ++u) {
    auto [a, new_a] = label_to_type.try_emplace(p.labels[u], true_types[u]);
    auto [b, new_b] = type_to_label.try_emplace(true_types[u], p.labels[u]);
    if (a->second != true_types[u] || b->second != p.labels[u]) return false;
  }
  return true;
}

/// User-user collaborative filtering.
///
/// Steps 1..r broadcast one fresh item to everybody. The resulting rating
/// vectors are partitioned, either by exact equality or, in the noisy
/// variant, by thresholded agreement followed by a clique-consistency check.
/// Afterwards each user exploits the lowest-id unrated item liked by its
/// group, and otherwise explores a fresh item; liked explorations are shared
/// with the group.
class UserUserRecommender final : public Recommender {
 public:
  explicit UserUserRecommender(const UserUserParams& params,
                               std::optional<NoisyPartitionParams> noisy = std::nullopt)
      : params_(params), noisy_(noisy), r_(noisy ? noisy->r : params.r) {
    phase1_.resize(params_.n_users);
    for (auto& v : phase1_) v.reserve(r_);
    cursor_.assign(params_.n_users, 0);
  }

  std::uint32_t r() const noexcept { return r_; }
  const UserUserParams& params() const noexcept { return params_; }
  bool partitioned() const noexcept { return partition_.has_value(); }
  const UserPartition& partition() const { return partition_.value(); }
  // More equality classes than q_U; possible only under noise or misuse.
  bool type_overflow() const noexcept { return type_overflow_; }
  // Noisy variant only: the agreement graph was not a union of cliques.
  bool clique_fallback() const noexcept { return clique_fallback_; }

  std::size_t exploit_set_size(std::uint32_t group) const { return sets_.at(group).size(); }
  std::vector<ItemId> exploit_set(std::uint32_t group) const {
    std::vector<ItemId> out;
    for (const auto& e : sets_.at(group)) out.push_back(e.item);
    return out;
  }

  void step(std::uint32_t t, const History&, ItemSource& items,
            std::span<Recommendation> out) override {
    if (t <= r_) {
      const ItemId i = items.fresh();
      for (auto& rec : out) rec = {i, Action::Explore};
      return;
    }
    if (!partition_) build_partition();
    for (UserId u = 0; u < out.size(); ++u) {
      const auto& set = sets_[partition_->labels[u]];
      auto& c = cursor_[u];
      while (c < set.size() && set[c].explorer == u) ++c;
      if (c < set.size()) {
        out[u] = {set[c++].item, Action::Exploit};
      } else {
        out[u] = {items.fresh(), Action::Explore};
      }
    }
  }

  void observe(std::uint32_t t, std::span<const Recommendation> recs,
               std::span<const Rating> feedback) override {
    if (t <= r_) {
      for (UserId u = 0; u < feedback.size(); ++u) phase1_[u].push_back(feedback[u]);
      if (t == r_) build_partition();
      return;
    }
    for (UserId u = 0; u < recs.size(); ++u) {
      if (recs[u].action == Action::Explore && feedback[u] == Rating::Like) {
        sets_[partition_->labels[u]].push_back({recs[u].item, u});
      }
    }
  }

 private:
  struct Liked {
    ItemId item;
    UserId explorer;
  };

  void build_partition() {
    partition_ = noisy_ ? noisy_partition() : partition_by_equality(phase1_);
    type_overflow_ = partition_->group_count() > params_.n_user_types;
    sets_.assign(partition_->group_count(), {});
    phase1_.clear();
    phase1_.shrink_to_fit();
  }

  UserPartition noisy_partition() {
    const std::uint32_t n = params_.n_users;
    const std::size_t words = (r_ + 63) / 64;
    // Bit set for a dislike; agreement sum = r - 2 * popcount(a ^ b).
    std::vector<std::uint64_t> packed(std::size_t{n} * words, 0);
    for (UserId u = 0; u < n; ++u) {
      for (std::uint32_t s = 0; s < r_; ++s) {
        if (phase1_[u][s] == Rating::Dislike) packed[u * words + s / 64] |= std::uint64_t{1} << (s % 64);
      }
    }
    const double threshold = noisy_->lambda * r_;
    Adjacency g{n};
    for (UserId u = 0; u < n; ++u) {
      for (UserId v = u + 1; v < n; ++v) {
        int diff = 0;
        for (std::size_t w = 0; w < words; ++w) {
          diff += std::popcount(packed[u * words + w] ^ packed[v * words + w]);
        }
        if (static_cast<double>(static_cast<int>(r_) - 2 * diff) >= threshold) g.set(u, v);
      }
    }
    if (auto p = clique_partition_check(g)) return *std::move(p);
    clique_fallback_ = true;
    return partition_from_labels(std::vector<std::uint32_t>(n, 0));
  }

  UserUserParams params_;
  std::optional<NoisyPartitionParams> noisy_;
  std::uint32_t r_;
  std::vector<std::vector<Rating>> phase1_;
  std::optional<UserPartition> partition_;
  std::vector<std::vector<Liked>> sets_;
  std::vector<std::size_t> cursor_;
  bool type_overflow_ = false;
  bool clique_fallback_ = false;
};

}  // namespace cfregret
