#include <gtest/gtest.h>

#include "support.hpp"

using namespace ownnorm;
using namespace testing_support;

namespace {

World small_world(bool percept = true) {
  WorldConfig wc;
  wc.percept_prediction = percept;
  World w(Vocabulary::builtin(), ActionRegistry::builtin(), wc);
  w.add_agent("alexis");
  w.add_agent("blake");
  w.set_clock(100);
  w.add_object(object("o1", 0.5, 0.0, "red", {{"alexis", 99}}));
  w.add_object(object("o2", 0.55, 0.05, "red", {{"alexis", 98}}));
  w.add_object(object("o3", -0.5, 0.0, "blue", {{"blake", 97}}));
  w.add_object(object("o4", 0.0, -0.5, "green"));
  return w;
}

}  // namespace

TEST(Claims, JointAndDisclaim) {
  auto w = small_world();
  w.record_claim({"o1", "alexis", 1.0, false});
  w.record_claim({"o1", "blake", 1.0, false});
  EXPECT_DOUBLE_EQ(w.ownership_prior("o1", "alexis"), 1.0);
  EXPECT_DOUBLE_EQ(w.ownership_prior("o1", "blake"), 1.0);
  w.record_claim({"o1", "alexis", 0.0, false});
  EXPECT_DOUBLE_EQ(w.ownership_prior("o1", "alexis"), 0.0);
}

TEST(Claims, ExclusiveZeroesOthersAndDropsTheirPermissions) {
  auto w = small_world();
  w.record_claim({"o1", "alexis", 1.0, false});
  w.record_permission({"trash", "o1", 1.0, "alexis"});
  w.record_permission({"collect", "o1", 1.0, "robot"});
  w.record_claim({"o1", "blake", 1.0, true});
  EXPECT_DOUBLE_EQ(w.ownership_prior("o1", "alexis"), 0.0);
  EXPECT_DOUBLE_EQ(w.ownership_prior("o1", "blake"), 1.0);
  EXPECT_FALSE(w.permission("trash", "o1"));
  EXPECT_TRUE(w.permission("collect", "o1"));
}

TEST(Claims, Validation) {
  auto w = small_world();
  EXPECT_THROW(w.record_claim({"nope", "alexis", 1.0, false}), std::invalid_argument);
  EXPECT_THROW(w.record_claim({"o1", "nobody", 1.0, false}), std::invalid_argument);
  EXPECT_THROW(w.record_claim({"o1", "alexis", 1.5, false}), std::invalid_argument);
}

TEST(Permissions, UpsertKeepsOneEntry) {
  auto w = small_world();
  w.record_permission(Permission::forbid("trash", "o2"));
  ASSERT_TRUE(w.permission("trash", "o2"));
  EXPECT_EQ(w.permission("trash", "o2")->polarity(), Polarity::forbid);
  w.record_permission(Permission::allow("pickUp", "o3"));
  EXPECT_EQ(w.permission("pickUp", "o3")->polarity(), Polarity::allow);
  w.record_permission(Permission::allow("trash", "o2"));
  EXPECT_EQ(w.permissions().size(), 2u);
  EXPECT_EQ(w.permission("trash", "o2")->polarity(), Polarity::allow);
  EXPECT_THROW(w.record_permission({"juggle", "o2", 1.0, {}}), std::invalid_argument);
}

TEST(Prior, DefaultsAndPrediction) {
  auto w = small_world();
  EXPECT_DOUBLE_EQ(w.ownership_prior("o3", "alexis"), kDefaultOwnershipPrior);
  w.record_claim({"o1", "alexis", 1.0, false});
  w.record_claim({"o3", "alexis", 0.0, false});
  // The world's cached prediction must equal a standalone model trained on
  // the same claims.
  std::vector<TrainingPoint> data{{w.object("o1"), 1.0, Provenance::claim}, {w.object("o3"), 0.0, Provenance::claim}};
  auto reference = KlrModel::train("alexis", data, w.clock(), w.palette());
  EXPECT_DOUBLE_EQ(w.ownership_prior("o2", "alexis"), reference.predict(w.object("o2")));
  EXPECT_GT(w.ownership_prior("o2", "alexis"), 0.5);
  EXPECT_DOUBLE_EQ(w.ownership_prior("o2", "blake"), kDefaultOwnershipPrior);
}

TEST(Prior, PerceptPredictionCanBeDisabled) {
  auto w = small_world(false);
  w.record_claim({"o1", "alexis", 1.0, false});
  EXPECT_DOUBLE_EQ(w.ownership_prior("o2", "alexis"), kDefaultOwnershipPrior);
}

TEST(Objects, Validation) {
  auto w = small_world();
  EXPECT_THROW(w.add_object(object("o1", 0, 0, "red")), std::invalid_argument);
  EXPECT_THROW(w.add_object(object("o9", 0, 0, "purple")), std::invalid_argument);
  EXPECT_THROW(w.add_agent("alexis"), std::invalid_argument);
  EXPECT_THROW(w.add_agent("red"), std::invalid_argument);
  EXPECT_THROW(w.set_clock(-1), std::invalid_argument);
}

TEST(Property, RandomOperationSequences) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  const std::vector<std::string> ids{"o1", "o2", "o3", "o4"}, agents{"alexis", "blake"},
      actions{"pickUp", "collect", "trash"};
  for (int run = 0; run < 30; ++run) {
    auto w = small_world();
    for (int step = 0; step < 40; ++step) {
      const auto& o = ids[rng() % ids.size()];
      const auto& a = agents[rng() % agents.size()];
      if (rng() % 2) {
        double p = prob(rng) < 0.3 ? std::round(prob(rng)) : prob(rng);
        w.record_claim({o, a, p, rng() % 5 == 0});
        if (auto c = w.claimed(o, a)) EXPECT_DOUBLE_EQ(w.ownership_prior(o, a), *c);
      } else {
        w.record_permission({actions[rng() % 3], o, prob(rng), a});
      }
      std::set<std::pair<std::string, std::string>> keys;
      for (const auto& p : w.permissions()) EXPECT_TRUE(keys.insert({p.action, p.object}).second);
      for (const auto& oid : ids)
        for (const auto& ag : agents) {
          double v = w.ownership_prior(oid, ag);
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
        }
    }
  }
}
