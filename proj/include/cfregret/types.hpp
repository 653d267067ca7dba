#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfregret {

// Users are 0-based indices into [0, N). Items are positive integers issued by
// a per-model counter; id 0 is never issued.
using UserId = std::uint32_t;
using ItemId = std::uint64_t;
using TypeId = std::uint64_t;

inline constexpr ItemId kNoItem = 0;

// Like/dislike feedback. The underlying value is the +1/-1 sign so
// that agreement sums are plain integer products.
enum class Rating : std::int8_t { Dislike = -1, Like = 1 };

constexpr int sign(Rating r) noexcept { return static_cast<int>(r); }
constexpr Rating flip(Rating r) noexcept {
  return r == Rating::Like ? Rating::Dislike : Rating::Like;
}

// Recommender-supplied label for a single recommendation.
enum class Action : std::uint8_t { Unknown, Explore, Exploit };

struct Recommendation {
  ItemId item = kNoItem;
  Action action = Action::Unknown;
};

// Thrown for invalid parameters anywhere in the library. The CLI maps this to
// exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace cfregret
