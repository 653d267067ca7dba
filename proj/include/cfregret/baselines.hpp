#pragma once

#include <cstdint>
#include <span>

#include "cfregret/model.hpp"
#include "cfregret/recommender.hpp"

namespace cfregret {

// Recommends a fresh item to every user at every step, ignoring feedback.
class RandomRecommender final : public Recommender {
 public:
  void step(std::uint32_t, const History&, ItemSource& items,
            std::span<Recommendation> out) override {
    for (auto& r : out) r = {items.fresh(), Action::Explore};
  }
  void observe(std::uint32_t, std::span<const Recommendation>, std::span<const Rating>) override {}
};

/// Zero-regret reference: looks up latent types and only recommends fresh
/// items of a type the user's type likes. Redraws at most q_I times per user
/// per step, then falls back to the last draw.
class OmniscientRecommender final : public Recommender {
 public:
  explicit OmniscientRecommender(OracleView oracle) : oracle_(oracle) {}

  void step(std::uint32_t, const History&, ItemSource& items,
            std::span<Recommendation> out) override {
    const std::uint64_t cap = oracle_.params().n_item_types;
    for (UserId u = 0; u < out.size(); ++u) {
      const TypeId k = oracle_.user_type(u);
      ItemId pick = items.fresh();
      for (std::uint64_t tries = 1;
           tries < cap && oracle_.preference(k, oracle_.item_type(pick)) != Rating::Like; ++tries) {
        pick = items.fresh();
      }
      if (oracle_.preference(k, oracle_.item_type(pick)) != Rating::Like) ++fallbacks_;
      out[u] = {pick, Action::Exploit};
    }
  }
  void observe(std::uint32_t, std::span<const Recommendation>, std::span<const Rating>) override {}

  // Number of recommendations made without finding a liked type.
  std::uint64_t fallbacks() const noexcept { return fallbacks_; }

 private:
  OracleView oracle_;
  std::uint64_t fallbacks_ = 0;
};

}  // namespace cfregret
