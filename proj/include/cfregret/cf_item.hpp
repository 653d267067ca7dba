#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "cfregret/recommender.hpp"
#include "cfregret/rng.hpp"
#include "cfregret/types.hpp"

namespace cfregret {

struct ItemItemParams {
  std::uint32_t horizon = 1;
  std::uint32_t n_users = 1;
  std::uint64_t n_item_types = 1;
  double epsilon = 1.0;
  std::uint32_t r = 1;
  std::uint64_t ell = 1;
  std::uint64_t m_pool = 1;
  double pool_factor = 64.0;
};

struct ItemItemOverrides {
  std::optional<double> pool_factor;   // the 64 in M = ceil(64 q_I T / ell)
  std::optional<std::uint64_t> ell;
  std::optional<std::uint32_t> r;
};

/// eps = 1/(2 q_I N), r = ceil(2 log2(q_I/eps)),
/// ell = min{ceil(18 log2 T + sqrt(330 q_I r T / N)), q_I} (at least 1),
/// M = ceil(64 q_I T / ell).
inline ItemItemParams item_item_params(std::uint32_t horizon, std::uint32_t n_users,
                                       std::uint64_t n_item_types,
                                       const ItemItemOverrides& over = {}) {
  if (horizon == 0 || n_users == 0 || n_item_types == 0) {
    throw ConfigError("item-item needs T, N, q_I >= 1");
  }
  ItemItemParams p;
  p.horizon = horizon;
  p.n_users = n_users;
  p.n_item_types = n_item_types;
  const double t = horizon, n = n_users, q = static_cast<double>(n_item_types);
  p.epsilon = 1.0 / (2.0 * q * n);
  p.r = over.r.value_or(static_cast<std::uint32_t>(std::ceil(2.0 * std::log2(q / p.epsilon))));
  if (p.r == 0) throw ConfigError("item-item r must be positive");
  if (over.ell) {
    p.ell = *over.ell;
  } else {
    const double raw = std::ceil(18.0 * std::log2(t) + std::sqrt(330.0 * q * p.r * t / n));
    p.ell = static_cast<std::uint64_t>(std::min(raw, q));
  }
  p.ell = std::max<std::uint64_t>(p.ell, 1);
  p.pool_factor = over.pool_factor.value_or(64.0);
  if (!(p.pool_factor > 0.0)) throw ConfigError("pool_factor must be positive");
  p.m_pool = static_cast<std::uint64_t>(std::ceil(p.pool_factor * q * t / static_cast<double>(p.ell)));
  return p;
}

/// Assignment of r distinct raters to each of n_items items.
///
/// One random user permutation is repeated once per step and cut into
/// consecutive blocks of r slots, block k going to item k. Every user holds
/// exactly one slot per step, and since r <= N a block never contains the
/// same position of the permutation twice, so its users are distinct. Each
/// item's rater set is a fixed set of permutation positions and therefore a
/// uniform r-subset of the users. Slots past the last block are spare.
class PreliminarySchedule {
 public:
  PreliminarySchedule(std::uint64_t n_items, std::uint32_t r, std::uint32_t n_users, Rng& rng)
      : n_items_(n_items), r_(r), n_(n_users), perm_(n_users), pos_(n_users) {
    if (r == 0 || r > n_users) throw ConfigError("schedule needs 1 <= r <= N");
    std::iota(perm_.begin(), perm_.end(), UserId{0});
    std::shuffle(perm_.begin(), perm_.end(), rng);
    for (std::uint32_t j = 0; j < n_; ++j) pos_[perm_[j]] = j;
    steps_ = (n_items_ * r_ + n_ - 1) / n_;
  }

  std::uint64_t steps() const noexcept { return steps_; }
  std::uint64_t n_items() const noexcept { return n_items_; }
  std::uint32_t r() const noexcept { return r_; }

  // Slot of user u at 0-based step s; slot / r is the item index.
  std::uint64_t slot(std::uint64_t s, UserId u) const { return s * n_ + pos_[u]; }

  std::optional<std::uint64_t> item_at(std::uint64_t s, UserId u) const {
    const auto idx = slot(s, u) / r_;
    if (idx < n_items_) return idx;
    return std::nullopt;
  }

  UserId user_of_slot(std::uint64_t slot) const { return perm_[slot % n_]; }

  std::vector<UserId> raters(std::uint64_t idx) const {
    std::vector<UserId> out;
    out.reserve(r_);
    for (std::uint64_t k = 0; k < r_; ++k) out.push_back(user_of_slot(idx * r_ + k));
    return out;
  }

  bool is_rater(std::uint64_t idx, UserId u) const {
    // At most one slot of the block is congruent to pos_[u] modulo N.
    const std::uint64_t first = idx * r_;
    const std::uint64_t off = (pos_[u] + n_ - first % n_) % n_;
    return off < r_;
  }

 private:
  std::uint64_t n_items_;
  std::uint32_t r_;
  std::uint32_t n_;
  std::vector<UserId> perm_;
  std::vector<std::uint32_t> pos_;
  std::uint64_t steps_ = 0;
};

/// Item-item collaborative filtering with a fixed horizon.
///
/// Two pools of M fresh items are rated by r random users each, ell
/// representatives drawn from the second pool are broadcast, and the items of
/// both pools that agree with a representative on all common raters are
/// clustered with it. Each user then exploits the first-pool clusters whose
/// representative it liked, lowest id first.
class ItemItemRecommender final : public Recommender {
 public:
  enum class Phase { Preliminary, Cluster, Exploit };
  static constexpr std::int32_t kUnclustered = -1;

  ItemItemRecommender(const ItemItemParams& params, std::uint64_t seed)
      : params_(params), rng_(make_rng(seed, 0x11)) {
    r_eff_ = std::min<std::uint32_t>(params_.r, params_.n_users);
  }

  const ItemItemParams& params() const noexcept { return params_; }
  std::uint32_t effective_r() const noexcept { return r_eff_; }
  Phase phase() const noexcept { return phase_; }
  // Steps spent before exploitation began (valid once Phase::Exploit is reached).
  std::uint64_t t0() const noexcept { return t0_; }
  bool pool_exhausted() const noexcept { return pool_exhausted_; }
  const PreliminarySchedule& schedule() const { return schedule_.value(); }

  ItemId pool1_item(std::uint64_t idx) const { return base_ + idx; }
  ItemId pool2_item(std::uint64_t idx) const { return base_ + params_.m_pool + idx; }
  const std::vector<ItemId>& reps() const noexcept { return reps_; }
  Rating rep_rating(std::size_t j, UserId u) const { return rep_ratings_.at(j).at(u); }

  std::vector<ItemId> s1(std::size_t j) const { return cluster_members(cluster1_, j, 0); }
  std::vector<ItemId> s2(std::size_t j) const { return cluster_members(cluster2_, j, params_.m_pool); }

  // Cluster index of a first-pool item, or kUnclustered.
  std::int32_t cluster_of(ItemId i) const {
    if (i < base_ || i >= base_ + params_.m_pool) return kUnclustered;
    return cluster1_[i - base_];
  }

  /// R_u: union of S1_j over representatives u liked, ascending ids.
  std::vector<ItemId> exploit_set(UserId u) const {
    std::vector<ItemId> out;
    for (std::uint64_t idx = 0; idx < params_.m_pool; ++idx) {
      const auto j = cluster1_[idx];
      if (j != kUnclustered && rep_ratings_[j][u] == Rating::Like) out.push_back(pool1_item(idx));
    }
    return out;
  }

  void step(std::uint32_t, const History&, ItemSource& items,
            std::span<Recommendation> out) override {
    if (!schedule_) start(items);
    if (phase_ == Phase::Preliminary && step_in_phase_ == schedule_->steps()) enter_cluster();
    if (phase_ == Phase::Cluster && !cluster_continues()) enter_exploit();

    const auto n = static_cast<UserId>(out.size());
    switch (phase_) {
      case Phase::Preliminary:
        for (UserId u = 0; u < n; ++u) {
          const auto idx = schedule_->item_at(step_in_phase_, u);
          out[u] = {idx ? base_ + *idx : items.fresh(), Action::Explore};
        }
        break;
      case Phase::Cluster: {
        // Representative drawn uniformly from what is left of the second pool.
        const auto pick = uniform_below<std::size_t>(rng_, remaining2_.size());
        current_rep_ = remaining2_[pick];
        const ItemId rep = pool2_item(current_rep_);
        for (UserId u = 0; u < n; ++u) {
          const bool rated = schedule_->is_rater(params_.m_pool + current_rep_, u);
          out[u] = {rated ? items.fresh() : rep, Action::Explore};
        }
        break;
      }
      case Phase::Exploit:
        for (UserId u = 0; u < n; ++u) {
          auto& c = cursor_[u];
          while (c < params_.m_pool && !exploitable(u, c)) ++c;
          if (c < params_.m_pool) {
            out[u] = {pool1_item(c++), Action::Exploit};
          } else {
            out[u] = {items.fresh(), Action::Explore};
          }
        }
        break;
    }
  }

  void observe(std::uint32_t, std::span<const Recommendation>,
               std::span<const Rating> feedback) override {
    const auto n = static_cast<UserId>(feedback.size());
    switch (phase_) {
      case Phase::Preliminary:
        for (UserId u = 0; u < n; ++u) {
          const auto slot = schedule_->slot(step_in_phase_, u);
          if (slot < pool_ratings_.size()) pool_ratings_[slot] = feedback[u];
        }
        break;
      case Phase::Cluster:
        absorb_representative(feedback);
        break;
      case Phase::Exploit:
        break;
    }
    ++step_in_phase_;
  }

 private:
  void start(ItemSource& items) {
    const std::uint64_t m = params_.m_pool;
    base_ = items.fresh();
    for (std::uint64_t k = 1; k < 2 * m; ++k) {
      // Pools are minted back to back, so ids are contiguous.
      if (items.fresh() != base_ + k) throw std::logic_error("item source is not contiguous");
    }
    schedule_.emplace(2 * m, r_eff_, params_.n_users, rng_);
    pool_ratings_.assign(2 * m * r_eff_, Rating::Like);
    cluster1_.assign(m, kUnclustered);
    cluster2_.assign(m, kUnclustered);
    remaining1_.resize(m);
    remaining2_.resize(m);
    std::iota(remaining1_.begin(), remaining1_.end(), std::uint64_t{0});
    std::iota(remaining2_.begin(), remaining2_.end(), std::uint64_t{0});
  }

  bool cluster_continues() const { return reps_.size() < params_.ell && !remaining2_.empty(); }

  void enter_cluster() {
    phase_ = Phase::Cluster;
    t0_ += step_in_phase_;
    step_in_phase_ = 0;
  }

  void enter_exploit() {
    phase_ = Phase::Exploit;
    pool_exhausted_ = reps_.size() < params_.ell;
    t0_ += step_in_phase_;
    step_in_phase_ = 0;
    cursor_.assign(params_.n_users, 0);
  }

  void absorb_representative(std::span<const Rating> feedback) {
    const std::uint64_t rep_idx = params_.m_pool + current_rep_;
    std::vector<Rating> rep(feedback.begin(), feedback.end());
    for (std::uint64_t k = 0; k < r_eff_; ++k) {
      const auto slot = rep_idx * r_eff_ + k;
      rep[schedule_->user_of_slot(slot)] = pool_ratings_[slot];
    }
    const auto j = static_cast<std::int32_t>(reps_.size());
    reps_.push_back(pool2_item(current_rep_));
    rep_ratings_.push_back(std::move(rep));

    // Every user has now rated the representative, so the common raters of
    // item i and rep_j are exactly the r raters of i.
    const auto& ratings = rep_ratings_.back();
    auto agrees = [&](std::uint64_t idx) {
      for (std::uint64_t k = 0; k < r_eff_; ++k) {
        const auto slot = idx * r_eff_ + k;
        if (pool_ratings_[slot] != ratings[schedule_->user_of_slot(slot)]) return false;
      }
      return true;
    };
    std::erase_if(remaining1_, [&](std::uint64_t idx) {
      if (!agrees(idx)) return false;
      cluster1_[idx] = j;
      return true;
    });
    std::erase_if(remaining2_, [&](std::uint64_t idx) {
      if (!agrees(params_.m_pool + idx)) return false;
      cluster2_[idx] = j;
      return true;
    });
  }

  bool exploitable(UserId u, std::uint64_t idx) const {
    const auto j = cluster1_[idx];
    return j != kUnclustered && rep_ratings_[j][u] == Rating::Like && !schedule_->is_rater(idx, u);
  }

  std::vector<ItemId> cluster_members(const std::vector<std::int32_t>& cl, std::size_t j,
                                      std::uint64_t offset) const {
    std::vector<ItemId> out;
    for (std::uint64_t idx = 0; idx < cl.size(); ++idx) {
      if (cl[idx] == static_cast<std::int32_t>(j)) out.push_back(base_ + offset + idx);
    }
    return out;
  }

  ItemItemParams params_;
  Rng rng_;
  std::uint32_t r_eff_ = 1;
  Phase phase_ = Phase::Preliminary;
  std::uint64_t step_in_phase_ = 0;
  std::uint64_t t0_ = 0;
  bool pool_exhausted_ = false;

  ItemId base_ = kNoItem;
  std::optional<PreliminarySchedule> schedule_;
  std::vector<Rating> pool_ratings_;  // indexed by schedule slot
  std::vector<std::int32_t> cluster1_, cluster2_;
  std::vector<std::uint64_t> remaining1_, remaining2_;
  std::uint64_t current_rep_ = 0;
  std::vector<ItemId> reps_;
  std::vector<std::vector<Rating>> rep_ratings_;
  std::vector<std::uint64_t> cursor_;
};

}  // namespace cfregret
