#pragma once

#include <cstdint>
#include <span>

#include "cfregret/history.hpp"
#include "cfregret/types.hpp"

namespace cfregret {

// Source of never-before-issued items. Recommenders mint exploration items
// through this and nothing else of the model.
class ItemSource {
 public:
  virtual ~ItemSource() = default;
  virtual ItemId fresh() = 0;
};

/// An online recommendation algorithm.
///
/// At step t (1-based) the engine calls step() once, which must fill one
/// recommendation per user, then observe() with the realized feedback for
/// the whole step. step() may depend only on the history, the recommender's
/// own state and its own randomness.
class Recommender {
 public:
  virtual ~Recommender() = default;

  virtual void step(std::uint32_t t, const History& history, ItemSource& items,
                    std::span<Recommendation> out) = 0;

  virtual void observe(std::uint32_t t, std::span<const Recommendation> recs,
                       std::span<const Rating> feedback) = 0;
};

}  // namespace cfregret
