#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cfregret/cf_item.hpp"
#include "cfregret/engine.hpp"

namespace cfregret {
namespace {

ModelParams generic(std::uint32_t n, std::uint64_t qu, std::uint64_t qi, double noise = 0.0,
                    std::uint64_t seed = 1) {
  ModelParams p;
  p.n_users = n;
  p.n_user_types = qu;
  p.n_item_types = qi;
  p.noise = noise;
  p.seed = seed;
  return p;
}

std::uint32_t ceil_two_log2(std::uint64_t x) {
  const unsigned __int128 target = static_cast<unsigned __int128>(x) * x;
  std::uint32_t r = 0;
  while ((static_cast<unsigned __int128>(1) << r) < target) ++r;
  return r;
}

TEST(ItemItemParams, FigureTwoSetting) {
  const auto p = item_item_params(1000, 600, 60);
  EXPECT_DOUBLE_EQ(p.epsilon, 1.0 / 72000);
  EXPECT_EQ(p.r, 45u);
  EXPECT_EQ(p.r, ceil_two_log2(2 * 600 * 60 * 60));
  EXPECT_EQ(p.ell, 60u);
  EXPECT_EQ(p.m_pool, 64000u);
}

TEST(ItemItemParams, InvariantsHoldOnAGrid) {
  for (std::uint32_t t : {1u, 2u, 13u, 100u, 5000u}) {
    for (std::uint32_t n : {1u, 50u, 600u, 5000u}) {
      for (std::uint64_t q : {1u, 7u, 60u, 1000u}) {
        const auto p = item_item_params(t, n, q);
        EXPECT_EQ(p.r, ceil_two_log2(2 * n * q * q));
        EXPECT_GE(p.ell, 1u);
        EXPECT_LE(p.ell, q);
        EXPECT_GE(static_cast<double>(p.m_pool), 64.0 * q * t / p.ell - 1e-9);
        EXPECT_LT(static_cast<double>(p.m_pool), 64.0 * q * t / p.ell + 1.0);
      }
    }
  }
}

TEST(ItemItemParams, OverridesApply) {
  ItemItemOverrides o;
  o.pool_factor = 2.0;
  o.ell = 5;
  o.r = 7;
  const auto p = item_item_params(100, 50, 10, o);
  EXPECT_EQ(p.r, 7u);
  EXPECT_EQ(p.ell, 5u);
  EXPECT_EQ(p.m_pool, 400u);
  o.pool_factor = 0.0;
  EXPECT_THROW(item_item_params(100, 50, 10, o), ConfigError);
}

TEST(PreliminarySchedule, FullRankMeansEveryoneRatesEverything) {
  Rng rng{1};
  PreliminarySchedule s{12, 8, 8, rng};
  EXPECT_EQ(s.steps(), 12u);
  for (std::uint64_t idx = 0; idx < 12; ++idx) {
    auto raters = s.raters(idx);
    std::sort(raters.begin(), raters.end());
    EXPECT_EQ(raters, (std::vector<UserId>{0, 1, 2, 3, 4, 5, 6, 7}));
  }
}

TEST(PreliminarySchedule, SingleItemLeavesSpareSlots) {
  Rng rng{2};
  PreliminarySchedule s{1, 3, 6, rng};
  EXPECT_EQ(s.steps(), 1u);
  int assigned = 0;
  for (UserId u = 0; u < 6; ++u) assigned += s.item_at(0, u).has_value();
  EXPECT_EQ(assigned, 3);
}

TEST(PreliminarySchedule, EveryItemHasRDistinctRaters) {
  Rng rng{3};
  for (int round = 0; round < 200; ++round) {
    const std::uint32_t n = 1 + uniform_below<std::uint32_t>(rng, 50);
    const std::uint32_t r = 1 + uniform_below<std::uint32_t>(rng, n);
    const std::uint64_t items = 1 + uniform_below<std::uint64_t>(rng, 40);
    PreliminarySchedule s{items, r, n, rng};
    std::vector<std::vector<UserId>> seen(items);
    for (std::uint64_t step = 0; step < s.steps(); ++step) {
      for (UserId u = 0; u < n; ++u) {
        if (auto idx = s.item_at(step, u)) seen[*idx].push_back(u);
      }
    }
    for (std::uint64_t idx = 0; idx < items; ++idx) {
      std::set<UserId> distinct(seen[idx].begin(), seen[idx].end());
      ASSERT_EQ(seen[idx].size(), r);
      ASSERT_EQ(distinct.size(), r);
      auto listed = s.raters(idx);
      std::sort(listed.begin(), listed.end());
      ASSERT_EQ(listed, std::vector<UserId>(distinct.begin(), distinct.end()));
      for (UserId u = 0; u < n; ++u) ASSERT_EQ(s.is_rater(idx, u), distinct.count(u) == 1);
    }
    EXPECT_LE(s.steps(), items * r / n + 1);
  }
}

TEST(PreliminarySchedule, RaterSetsAreUniformSubsets) {
  const std::uint32_t n = 100, r = 10, runs = 500;
  Rng rng{4};
  std::vector<int> single(n, 0);
  int pair01 = 0, pair_far = 0;
  for (std::uint32_t k = 0; k < runs; ++k) {
    PreliminarySchedule s{5, r, n, rng};
    const auto raters = s.raters(3);
    std::set<UserId> set(raters.begin(), raters.end());
    for (auto u : set) ++single[u];
    pair01 += set.count(0) && set.count(1);
    pair_far += set.count(17) && set.count(93);
  }
  const double p2 = r * (r - 1.0) / (n * (n - 1.0));
  const double s2 = std::sqrt(p2 * (1 - p2) / runs);
  EXPECT_NEAR(pair01 / double(runs), p2, 3 * s2);
  EXPECT_NEAR(pair_far / double(runs), p2, 3 * s2);
  // Pooled single-user inclusion over all users.
  double chi2 = 0;
  const double expected = runs * double(r) / n;
  for (int c : single) chi2 += (c - expected) * (c - expected) / expected;
  // Inclusion counts sum to runs * r exactly, so there are 99 degrees of
  // freedom; each is scaled by (1 - r/N) relative to a multinomial.
  EXPECT_LT(chi2, 148.23);
}

// Runs a trial long enough to reach exploitation.
struct Run {
  std::unique_ptr<PreferenceModel> model;
  std::unique_ptr<ItemItemRecommender> rec;
  std::unique_ptr<History> history;
  TrialResult result;
};

Run run_item_item(const ModelParams& mp, std::uint32_t horizon, const ItemItemOverrides& o,
                  std::uint64_t seed = 5) {
  Run run;
  run.model = std::make_unique<PreferenceModel>(mp);
  run.rec = std::make_unique<ItemItemRecommender>(
      item_item_params(horizon, mp.n_users, mp.n_item_types, o), seed);
  run.history = std::make_unique<History>(mp.n_users, horizon);
  run.result = run_trial(*run.model, *run.rec, *run.history, horizon);
  return run;
}

ItemItemOverrides small_pools(double factor = 0.5) {
  ItemItemOverrides o;
  o.pool_factor = factor;
  return o;
}

TEST(ItemItem, SingleItemTypeClustersTheWholeFirstPool) {
  auto run = run_item_item(generic(50, 5, 1, 0.0, 2), 300, small_pools(0.1));
  const auto& rec = *run.rec;
  ASSERT_EQ(rec.phase(), ItemItemRecommender::Phase::Exploit);
  ASSERT_EQ(rec.reps().size(), 1u);
  const auto m = rec.params().m_pool;
  EXPECT_EQ(rec.s1(0).size(), m);
  for (UserId u = 0; u < 50; ++u) {
    const auto ru = rec.exploit_set(u);
    EXPECT_TRUE(ru.empty() || ru.size() == m);
  }
}

TEST(ItemItem, PhaseAccountingStaysWithinTheBudget) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto run = run_item_item(generic(300, 50, 20, 0.0, seed), 2000, small_pools(1.0), seed);
    const auto& rec = *run.rec;
    ASSERT_EQ(rec.phase(), ItemItemRecommender::Phase::Exploit);
    const auto& p = rec.params();
    const auto bound = (2 * p.m_pool * rec.effective_r() + p.n_users - 1) / p.n_users + p.ell;
    EXPECT_LE(rec.t0(), bound);
  }
}

TEST(ItemItem, ClusterStateIsConsistent) {
  auto run = run_item_item(generic(300, 50, 20, 0.0, 7), 2000, small_pools(1.0), 7);
  const auto& rec = *run.rec;
  ASSERT_EQ(rec.phase(), ItemItemRecommender::Phase::Exploit);
  const auto& reps = rec.reps();
  EXPECT_EQ(std::set<ItemId>(reps.begin(), reps.end()).size(), reps.size());

  std::set<ItemId> seen2;
  for (std::size_t j = 0; j < reps.size(); ++j) {
    const auto s2 = rec.s2(j);
    // A representative agrees with itself.
    EXPECT_TRUE(std::find(s2.begin(), s2.end(), reps[j]) != s2.end());
    for (auto i : s2) EXPECT_TRUE(seen2.insert(i).second) << "S2 sets overlap at " << i;
  }
  for (UserId u = 0; u < 300; ++u) {
    std::set<ItemId> expected;
    for (std::size_t j = 0; j < reps.size(); ++j) {
      if (rec.rep_rating(j, u) == Rating::Like) {
        for (auto i : rec.s1(j)) expected.insert(i);
      }
    }
    const auto ru = rec.exploit_set(u);
    EXPECT_EQ(std::set<ItemId>(ru.begin(), ru.end()), expected);
  }
}

TEST(ItemItem, RepresentativeRatingsAreTheRealRatings) {
  auto run = run_item_item(generic(200, 30, 15, 0.0, 9), 1500, small_pools(1.0), 9);
  const auto& rec = *run.rec;
  for (std::size_t j = 0; j < rec.reps().size(); ++j) {
    for (UserId u = 0; u < 200; ++u) {
      EXPECT_EQ(rec.rep_rating(j, u), run.model->rate(u, rec.reps()[j]).value);
    }
  }
}

TEST(ItemItem, DislikedExploitsComeOnlyFromMisclassifiedItems) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto run = run_item_item(generic(300, 50, 20, 0.0, seed), 2000, small_pools(1.0), seed);
    const auto& rec = *run.rec;
    auto o = run.model->oracle_view();
    for (UserId u = 0; u < 300; ++u) {
      const auto acts = run.history->actions(u);
      const auto fb = run.history->feedback(u);
      for (std::size_t s = rec.t0(); s < acts.size(); ++s) {
        const auto j = rec.cluster_of(acts[s]);
        if (j == ItemItemRecommender::kUnclustered || fb[s] == Rating::Like) continue;
        EXPECT_NE(o.item_type(acts[s]), o.item_type(rec.reps()[j]));
      }
    }
  }
}

TEST(ItemItem, MisclassificationIsRare) {
  // Clustered first-pool items whose type differs from their representative's.
  // About 10^4 items at N = 600, q_I = 60 with the full rank r = 45.
  int misclassified = 0, clustered = 0;
  for (std::uint64_t seed = 1; clustered < 10'000; ++seed) {
    auto run = run_item_item(generic(600, 100, 60, 0.0, seed), 600, small_pools(2.0), seed);
    const auto& rec = *run.rec;
    ASSERT_EQ(rec.phase(), ItemItemRecommender::Phase::Exploit);
    auto o = run.model->oracle_view();
    for (std::uint64_t idx = 0; idx < rec.params().m_pool; ++idx) {
      const ItemId i = rec.pool1_item(idx);
      const auto j = rec.cluster_of(i);
      if (j == ItemItemRecommender::kUnclustered) continue;
      ++clustered;
      misclassified += o.item_type(i) != o.item_type(rec.reps()[j]);
    }
  }
  // Expected at most 2 eps per item, about 0.3 per 10^4 items.
  EXPECT_LE(misclassified, 3) << "out of " << clustered;
}

TEST(ItemItem, ShortHorizonIsAllExploration) {
  const std::uint32_t n = 100;
  auto run = run_item_item(generic(n, 20, 30, 0.0, 3), 50, {});
  EXPECT_EQ(run.rec->phase(), ItemItemRecommender::Phase::Preliminary);
  std::uint64_t bad = 0;
  for (std::uint32_t s = 0; s < 50; ++s) {
    EXPECT_EQ(run.result.explore_per_step[s], n);
    bad += run.result.disliked_per_step[s];
  }
  EXPECT_NEAR(static_cast<double>(bad) / (50.0 * n), 0.5, 0.05);
}

TEST(ItemItem, RankLargerThanUsersIsClamped) {
  ItemItemOverrides o;
  o.pool_factor = 0.5;
  auto run = run_item_item(generic(20, 5, 8, 0.0, 1), 200, o);
  EXPECT_GT(run.rec->params().r, 20u);
  EXPECT_EQ(run.rec->effective_r(), 20u);
}

TEST(ItemItem, EmptyExploitSetMeansFreshItems) {
  // A user that liked no representative gets only fresh explorations.
  auto run = run_item_item(generic(200, 40, 3, 0.0, 6), 800, small_pools(0.5), 6);
  const auto& rec = *run.rec;
  ASSERT_EQ(rec.phase(), ItemItemRecommender::Phase::Exploit);
  bool found = false;
  for (UserId u = 0; u < 200; ++u) {
    if (!rec.exploit_set(u).empty()) continue;
    found = true;
    const auto acts = run.history->actions(u);
    for (std::size_t s = rec.t0(); s < acts.size(); ++s) {
      EXPECT_EQ(rec.cluster_of(acts[s]), ItemItemRecommender::kUnclustered);
      EXPECT_EQ(run.history->rater_count(acts[s]), 1u);
    }
  }
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace cfregret
