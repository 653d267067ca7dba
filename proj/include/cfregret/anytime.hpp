#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "cfregret/recommender.hpp"

namespace cfregret {

enum class AnytimeSchedule { PowersOfTwo, DoubleExponential };

inline std::string_view to_string(AnytimeSchedule s) {
  return s == AnytimeSchedule::PowersOfTwo ? "PowersOfTwo" : "DoubleExponential";
}

inline AnytimeSchedule parse_anytime_schedule(std::string_view s) {
  if (s == "PowersOfTwo") return AnytimeSchedule::PowersOfTwo;
  if (s == "DoubleExponential") return AnytimeSchedule::DoubleExponential;
  throw ConfigError("unknown anytime schedule '" + std::string(s) + "'");
}

// Length of epoch k (0-based): 2^(k+1), or 2^(2^(k+1)). Saturates at 2^32 - 1,
// which is longer than any horizon the engine accepts.
inline std::uint64_t epoch_length(AnytimeSchedule s, std::uint32_t k) {
  constexpr std::uint64_t kCap = std::numeric_limits<std::uint32_t>::max();
  const std::uint64_t exponent = s == AnytimeSchedule::PowersOfTwo
                                     ? std::uint64_t{k} + 1
                                     : (k + 1 >= 6 ? 64 : std::uint64_t{1} << (k + 1));
  return exponent >= 32 ? kCap : std::uint64_t{1} << exponent;
}

/// Doubling-trick wrapper: runs a freshly built fixed-horizon recommender
/// on each epoch. Only the inner state restarts; the history, and with it
/// the at-most-once rule, carries across epochs.
class AnytimeRecommender final : public Recommender {
 public:
  using Factory = std::function<std::unique_ptr<Recommender>(std::uint32_t horizon, std::uint32_t epoch)>;

  AnytimeRecommender(Factory factory, AnytimeSchedule schedule)
      : factory_(std::move(factory)), schedule_(schedule) {}

  std::uint32_t epoch() const noexcept { return epoch_; }
  // Global step at which the current epoch started (1-based).
  std::uint64_t epoch_start() const noexcept { return start_; }

  void step(std::uint32_t t, const History& history, ItemSource& items,
            std::span<Recommendation> out) override {
    if (!inner_ || t >= start_ + length_) {
      if (inner_) {
        start_ += length_;
        ++epoch_;
      } else {
        start_ = t;
      }
      length_ = epoch_length(schedule_, epoch_);
      inner_ = factory_(static_cast<std::uint32_t>(length_), epoch_);
    }
    inner_->step(local(t), history, items, out);
  }

  void observe(std::uint32_t t, std::span<const Recommendation> recs,
               std::span<const Rating> feedback) override {
    inner_->observe(local(t), recs, feedback);
  }

 private:
  std::uint32_t local(std::uint32_t t) const { return static_cast<std::uint32_t>(t - start_ + 1); }

  Factory factory_;
  AnytimeSchedule schedule_;
  std::unique_ptr<Recommender> inner_;
  std::uint32_t epoch_ = 0;
  std::uint64_t start_ = 1;
  std::uint64_t length_ = 0;
};

}  // namespace cfregret
