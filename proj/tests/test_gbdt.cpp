#include <gtest/gtest.h>

#include "esmr/gbdt.hpp"
#include "esmr/types.hpp"
#include "testing.hpp"

using namespace esmr;

namespace {

struct Split {
  Matrix train, valid;
  std::vector<int> ytrain, yvalid;
};

// Label is 1 iff x0 + x1 > 0, optionally shuffled to break the link.
Split toy(std::size_t n, bool shuffle, std::uint64_t seed) {
  oracle::Cases gen(seed);
  Split s;
  s.train.cols = s.valid.cols = 3;
  std::vector<int> labels;
  std::vector<std::array<double, 3>> xs;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 3> x = {gen.real(-1, 1), gen.real(-1, 1), gen.real(-1, 1)};
    xs.push_back(x);
    labels.push_back(x[0] + x[1] > 0.0 ? 1 : 0);
  }
  if (shuffle) std::shuffle(labels.begin(), labels.end(), std::mt19937_64(gen.seed()));
  for (std::size_t i = 0; i < n; ++i) {
    Matrix& m = i % 4 == 0 ? s.valid : s.train;
    auto& y = i % 4 == 0 ? s.yvalid : s.ytrain;
    m.data.insert(m.data.end(), xs[i].begin(), xs[i].end());
    ++m.rows;
    y.push_back(labels[i]);
  }
  return s;
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{0.5, 0.7}, std::vector<int>{1, 1}), Error);
}

TEST(Auc, MatchesPairCountingOracle) {
  oracle::Cases gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    const int n = gen.integer(2, 60);
    for (int i = 0; i < n; ++i) {
      s.push_back(static_cast<double>(gen.integer(0, 8)));  // plenty of ties
      y.push_back(i < 2 ? i : gen.integer(0, 1));
    }
    double wins = 0.0, pairs = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (y[static_cast<std::size_t>(i)] != 1 || y[static_cast<std::size_t>(j)] != 0) continue;
        pairs += 1.0;
        const double a = s[static_cast<std::size_t>(i)], b = s[static_cast<std::size_t>(j)];
        wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
      }
    }
    EXPECT_NEAR(roc_auc(s, y), wins / pairs, 1e-12);
  }
}

TEST(Gbdt, SeparableDataIsPerfect) {
  const Split s = toy(4000, false, 2);
  const GbdtReport r = train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, GbdtConfig{});
  EXPECT_GE(r.validation_auc, 0.995);
  EXPECT_GT(r.rounds, 0);
  EXPECT_EQ(r.model.trees.size(), static_cast<std::size_t>(r.rounds));
}

TEST(Gbdt, ShuffledLabelsAreChance) {
  const Split s = toy(8000, true, 3);
  const GbdtReport r = train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, GbdtConfig{});
  std::vector<double> p;
  for (std::size_t i = 0; i < s.valid.rows; ++i) p.push_back(r.model.predict_proba(s.valid.row(i)));
  EXPECT_NEAR(roc_auc(p, s.yvalid), 0.5, 0.05);
}

TEST(Gbdt, KeepsTheBestPrefix) {
  const Split s = toy(3000, false, 4);
  const GbdtReport r = train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, GbdtConfig{});
  ASSERT_FALSE(r.auc_history.empty());
  const double best = *std::max_element(r.auc_history.begin(), r.auc_history.end());
  EXPECT_DOUBLE_EQ(r.validation_auc, best);
  std::vector<double> p;
  for (std::size_t i = 0; i < s.valid.rows; ++i) p.push_back(r.model.predict_proba(s.valid.row(i)));
  EXPECT_NEAR(roc_auc(p, s.yvalid), r.validation_auc, 1e-12);
}

TEST(Gbdt, SingleClassIsAnError) {
  Split s = toy(400, false, 5);
  std::fill(s.ytrain.begin(), s.ytrain.end(), 1);
  EXPECT_THROW(train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, GbdtConfig{}), Error);
}

TEST(Gbdt, ProbabilitiesStayInsideUnitInterval) {
  const Split s = toy(3000, false, 6);
  GbdtConfig cfg;
  cfg.learning_rate = 1.0;
  const GbdtReport r = train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, cfg);
  for (std::size_t i = 0; i < s.train.rows; ++i) {
    const double p = r.model.predict_proba(s.train.row(i));
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(Gbdt, ThreadsDoNotChangeTheModel) {
  const Split s = toy(3000, false, 7);
  GbdtConfig one, many;
  many.threads = 3;
  const auto a = train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, one);
  const auto b = train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, many);
  EXPECT_EQ(a.model.to_json(), b.model.to_json());
}

TEST(Gbdt, JsonRoundTrip) {
  const Split s = toy(2000, false, 8);
  const auto r = train_gbdt(s.train, s.ytrain, s.valid, s.yvalid, {"a", "b", "c"}, GbdtConfig{});
  const Gbdt back = Gbdt::from_json(r.model.to_json());
  for (std::size_t i = 0; i < s.valid.rows; ++i) {
    EXPECT_EQ(back.predict_logit(s.valid.row(i)), r.model.predict_logit(s.valid.row(i)));
  }
  EXPECT_EQ(back.feature_names, r.model.feature_names);
}
