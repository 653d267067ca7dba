#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfregret/history.hpp"
#include "cfregret/model.hpp"
#include "cfregret/recommender.hpp"

namespace cfregret {

/// A recommender proposed an item the user had already rated. This is always
/// an algorithm bug; the trial is aborted rather than repaired.
class RepeatRecommendation : public std::logic_error {
 public:
  RepeatRecommendation(UserId user, ItemId item, std::uint32_t t)
      : std::logic_error("repeat recommendation: user " + std::to_string(user) + ", item " +
                         std::to_string(item) + ", step " + std::to_string(t)),
        user(user),
        item(item),
        t(t) {}

  UserId user;
  ItemId item;
  std::uint32_t t;
};

struct TrialResult {
  std::uint32_t horizon = 0;
  // Per step, number of users whose recommendation was disliked.
  std::vector<std::uint32_t> disliked_per_step;
  // Counts by recommender-supplied label; Unknown labels land in neither.
  std::vector<std::uint32_t> explore_per_step;
  std::vector<std::uint32_t> exploit_per_step;
  std::vector<std::uint32_t> disliked_explore_per_step;
  std::vector<std::uint32_t> disliked_exploit_per_step;

  std::uint64_t total_disliked() const {
    std::uint64_t s = 0;
    for (auto d : disliked_per_step) s += d;
    return s;
  }
};

namespace detail {

class ModelItemSource final : public ItemSource {
 public:
  explicit ModelItemSource(PreferenceModel& m) : model_(&m) {}
  ItemId fresh() override { return model_->fresh_item(); }

 private:
  PreferenceModel* model_;
};

}  // namespace detail

/// Runs `horizon` synchronous steps of `rec` against `model`, appending to
/// `history`. Every user gets exactly one item per step and feedback for the
/// whole step is delivered together at its end.
inline TrialResult run_trial(PreferenceModel& model, Recommender& rec, History& history,
                             std::uint32_t horizon) {
  if (horizon == 0) throw ConfigError("horizon must be at least 1");
  const std::uint32_t n = model.n_users();
  if (history.n_users() != n) throw ConfigError("history and model disagree on N");

  TrialResult res;
  res.horizon = horizon;
  res.disliked_per_step.assign(horizon, 0);
  res.explore_per_step.assign(horizon, 0);
  res.exploit_per_step.assign(horizon, 0);
  res.disliked_explore_per_step.assign(horizon, 0);
  res.disliked_exploit_per_step.assign(horizon, 0);

  detail::ModelItemSource items{model};
  std::vector<Recommendation> recs(n);
  std::vector<Rating> fb(n);

  const std::uint32_t t_begin = history.steps();
  for (std::uint32_t s = 0; s < horizon; ++s) {
    const std::uint32_t t = t_begin + s + 1;
    std::fill(recs.begin(), recs.end(), Recommendation{});
    rec.step(t, history, items, recs);

    for (UserId u = 0; u < n; ++u) {
      const ItemId i = recs[u].item;
      if (i == kNoItem || history.has_rated(u, i)) throw RepeatRecommendation(u, i, t);
    }
    for (UserId u = 0; u < n; ++u) {
      const Recommendation& r = recs[u];
      fb[u] = model.rate(u, r.item).value;
      history.record(u, r.item, fb[u]);
      const bool bad = fb[u] == Rating::Dislike;
      res.disliked_per_step[s] += bad;
      if (r.action == Action::Explore) {
        ++res.explore_per_step[s];
        res.disliked_explore_per_step[s] += bad;
      } else if (r.action == Action::Exploit) {
        ++res.exploit_per_step[s];
        res.disliked_exploit_per_step[s] += bad;
      }
    }
    history.end_step();
    rec.observe(t, recs, fb);
  }
  return res;
}

inline TrialResult run_trial(PreferenceModel& model, Recommender& rec, std::uint32_t horizon) {
  History history{model.n_users(), horizon};
  return run_trial(model, rec, history, horizon);
}

}  // namespace cfregret
