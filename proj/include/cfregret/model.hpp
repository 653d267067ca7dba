#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfregret/rng.hpp"
#include "cfregret/types.hpp"

namespace cfregret {

enum class ModelMode { Generic, UserStructureOnly, ItemStructureOnly };

inline std::string_view to_string(ModelMode m) {
  switch (m) {
    case ModelMode::Generic: return "Generic";
    case ModelMode::UserStructureOnly: return "UserStructureOnly";
    case ModelMode::ItemStructureOnly: return "ItemStructureOnly";
  }
  return "?";
}

inline ModelMode parse_model_mode(std::string_view s) {
  if (s == "Generic") return ModelMode::Generic;
  if (s == "UserStructureOnly") return ModelMode::UserStructureOnly;
  if (s == "ItemStructureOnly") return ModelMode::ItemStructureOnly;
  throw ConfigError("unknown model mode '" + std::string(s) + "'");
}

struct ModelParams {
  std::uint32_t n_users = 1;
  std::uint64_t n_user_types = 1;
  // Derived as 2^n_user_types in UserStructureOnly mode when left at 0.
  std::uint64_t n_item_types = 1;
  double noise = 0.0;
  ModelMode mode = ModelMode::Generic;
  std::uint64_t seed = 0;
};

// Largest q_U for which 2^q_U item types still fit a TypeId.
inline constexpr std::uint64_t kMaxUserStructureTypes = 62;
// Users are packed into 20 bits in the history's pair index.
inline constexpr std::uint32_t kMaxUsers = 1u << 20;

/// Checks the parameter invariants and fills in the mode-derived counts.
/// Throws ConfigError on violation.
inline ModelParams normalized(ModelParams p) {
  if (p.n_users == 0) throw ConfigError("n_users must be positive");
  if (p.n_users >= kMaxUsers) throw ConfigError("n_users must be below 2^20");
  if (!(p.noise >= 0.0 && p.noise < 0.5)) {
    throw ConfigError("noise must lie in [0, 1/2)");
  }
  switch (p.mode) {
    case ModelMode::Generic:
      if (p.n_user_types == 0 || p.n_item_types == 0) {
        throw ConfigError("type counts must be positive");
      }
      if (p.n_user_types > p.n_users) {
        throw ConfigError("n_user_types exceeds n_users; replace q_U by N instead");
      }
      break;
    case ModelMode::UserStructureOnly: {
      if (p.n_user_types == 0 || p.n_user_types > kMaxUserStructureTypes) {
        throw ConfigError("UserStructureOnly needs 1 <= n_user_types <= 62");
      }
      const std::uint64_t q_i = std::uint64_t{1} << p.n_user_types;
      if (p.n_item_types != 0 && p.n_item_types != q_i) {
        throw ConfigError("UserStructureOnly requires n_item_types == 2^n_user_types");
      }
      p.n_item_types = q_i;
      break;
    }
    case ModelMode::ItemStructureOnly:
      if (p.n_user_types != 0 && p.n_user_types != p.n_users) {
        throw ConfigError("ItemStructureOnly requires n_user_types == n_users");
      }
      if (p.n_item_types == 0) throw ConfigError("n_item_types must be positive");
      p.n_user_types = p.n_users;
      break;
  }
  return p;
}

/// Non-fatal note for type counts below log2(N); the analysis assumes both
/// counts grow at least logarithmically in N.
inline std::optional<std::string> small_type_count_warning(const ModelParams& p) {
  const double log_n = std::log2(static_cast<double>(p.n_users));
  std::string msg;
  if (static_cast<double>(p.n_user_types) < log_n) msg += "n_user_types < log2(N); ";
  if (static_cast<double>(p.n_item_types) < log_n) msg += "n_item_types < log2(N); ";
  if (msg.empty()) return std::nullopt;
  return "warning: " + msg + "guarantees assume type counts of order log N or more";
}

struct Feedback {
  Rating value = Rating::Like;
  bool noisy_flip = false;
};

class PreferenceModel;

/// Read access to the latent state. Only baselines and verifiers hold one;
/// collaborative filtering recommenders never receive it.
class OracleView {
 public:
  TypeId user_type(UserId u) const;
  // Assigns the item's type on first query, exactly as rating it would.
  TypeId item_type(ItemId i) const;
  Rating preference(TypeId user_type, TypeId item_type) const;
  const ModelParams& params() const;

 private:
  friend class PreferenceModel;
  explicit OracleView(PreferenceModel& m) : model_(&m) {}
  PreferenceModel* model_;
};

/// The latent preference world: user types, lazily typed items, the
/// preference matrix, and (optionally noisy) feedback.
///
/// Item types are drawn on first use from a dedicated stream, so two models
/// with equal parameters agree on every identical query sequence. The noise
/// sign of a (user, item) pair is a hash of (seed, user, item), which makes
/// repeated queries return the same realized value without storing it.
class PreferenceModel {
 public:
  static constexpr TypeId kUnassigned = ~TypeId{0};

  explicit PreferenceModel(const ModelParams& params)
      : params_(normalized(params)),
        item_rng_(make_rng(params_.seed, 2)),
        noise_key_(mix64(params_.seed, 3)) {
    const auto n = params_.n_users;
    user_types_.resize(n);
    if (params_.mode == ModelMode::ItemStructureOnly) {
      for (UserId u = 0; u < n; ++u) user_types_[u] = u;
    } else {
      Rng rng = make_rng(params_.seed, 0);
      for (auto& t : user_types_) t = uniform_below<TypeId>(rng, params_.n_user_types);
    }
    if (params_.mode != ModelMode::UserStructureOnly) {
      Rng rng = make_rng(params_.seed, 1);
      const std::uint64_t cells = params_.n_user_types * params_.n_item_types;
      xi_.resize(cells);
      std::uint64_t bits = 0;
      for (std::uint64_t c = 0; c < cells; ++c) {
        if (c % 64 == 0) bits = rng();
        xi_[c] = (bits >> (c % 64)) & 1 ? Rating::Like : Rating::Dislike;
      }
    }
    item_types_.push_back(kUnassigned);  // id 0 is never issued
  }

  const ModelParams& params() const noexcept { return params_; }
  std::uint32_t n_users() const noexcept { return params_.n_users; }
  ItemId issued_items() const noexcept { return next_item_ - 1; }

  ItemId fresh_item() {
    const ItemId id = next_item_++;
    TypeId t = kUnassigned;
    if (!sparse_item_types_.empty()) {
      if (auto it = sparse_item_types_.find(id); it != sparse_item_types_.end()) {
        t = it->second;
        sparse_item_types_.erase(it);
      }
    }
    item_types_.push_back(t);
    return id;
  }

  Feedback rate(UserId u, ItemId i) {
    if (u >= params_.n_users) throw std::out_of_range("user id out of range");
    const Rating base = xi(user_types_[u], item_type(i));
    if (params_.noise > 0.0 && to_unit(mix64(noise_key_, u, i)) < params_.noise) {
      return {flip(base), true};
    }
    return {base, false};
  }

  OracleView oracle_view() { return OracleView{*this}; }

 private:
  friend class OracleView;

  Rating xi(TypeId k, TypeId j) const {
    if (params_.mode == ModelMode::UserStructureOnly) {
      // Column j enumerates sign patterns: bit k of j set means type k likes it.
      return (j >> k) & 1 ? Rating::Like : Rating::Dislike;
    }
    return xi_[k * params_.n_item_types + j];
  }

  TypeId item_type(ItemId i) {
    if (i == kNoItem) throw std::out_of_range("item id 0 is never issued");
    if (i < item_types_.size()) {
      TypeId& t = item_types_[i];
      if (t == kUnassigned) t = draw_item_type();
      return t;
    }
    // Ids beyond the counter are legal but rare; keep them out of the dense table.
    auto [it, inserted] = sparse_item_types_.try_emplace(i, kUnassigned);
    if (inserted) it->second = draw_item_type();
    return it->second;
  }

  TypeId draw_item_type() { return uniform_below<TypeId>(item_rng_, params_.n_item_types); }

  ModelParams params_;
  std::vector<TypeId> user_types_;
  std::vector<Rating> xi_;
  std::vector<TypeId> item_types_;
  std::unordered_map<ItemId, TypeId> sparse_item_types_;
  Rng item_rng_;
  std::uint64_t noise_key_;
  ItemId next_item_ = 1;
};

inline TypeId OracleView::user_type(UserId u) const { return model_->user_types_.at(u); }
inline TypeId OracleView::item_type(ItemId i) const { return model_->item_type(i); }
inline Rating OracleView::preference(TypeId k, TypeId j) const { return model_->xi(k, j); }
inline const ModelParams& OracleView::params() const { return model_->params_; }

}  // namespace cfregret
