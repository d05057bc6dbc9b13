#include <gtest/gtest.h>

#include <cmath>

#include "pknn/pknn.hpp"
#include "oracle.hpp"

using namespace pknn;

namespace {

/// Same joint for every order; the class terms are fixed offsets scaled by beta.
struct TiedModel {
  std::size_t orders = 2;
  int class_count() const { return 2; }
  std::size_t max_order() const { return orders; }
  void log_joint(std::size_t, double beta, std::span<double> out) const {
    out[0] = -0.3 * beta;
    out[1] = -0.5 * beta;
  }
};

/// Likelihood that ignores beta and the test label.
struct ConstantModel {
  int class_count() const { return 3; }
  std::size_t max_order() const { return 4; }
  void log_joint(std::size_t k, double, std::span<double> out) const {
    for (auto& v : out) v = -static_cast<double>(k);
  }
};

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST(OrderPosterior, SingleOrder) {
  const auto d = test::fixture4();
  KoreaConfig cfg;
  cfg.k_max = 1;
  const auto op = order_posterior(d, std::vector<double>{0.5, 0.0}, cfg);
  ASSERT_EQ(op.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(op.weights[0], 1.0);
  EXPECT_EQ(op.k_star, 1u);
}

TEST(OrderPosterior, EqualOrdersTieToLowest) {
  const auto op = make_order_posterior({-3.0, -3.0}, std::vector<LaplaceFit>(2));
  EXPECT_DOUBLE_EQ(op.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(op.weights[1], 0.5);
  EXPECT_EQ(op.k_star, 1u);

  KoreaConfig cfg;
  const auto from_model = order_posterior(TiedModel{}, cfg);
  EXPECT_DOUBLE_EQ(from_model.weights[0], 0.5);
  EXPECT_EQ(from_model.k_star, 1u);
}

TEST(OrderPosterior, AllZeroMassThrows) {
  EXPECT_THROW(make_order_posterior({-INFINITY, -INFINITY}, std::vector<LaplaceFit>(2)), NumericalError);
  EXPECT_THROW(make_order_posterior({}, {}), InputError);
}

TEST(OrderPosterior, KMaxBounds) {
  const auto d = test::fixture4();
  KoreaConfig cfg;
  cfg.k_max = 4;
  EXPECT_THROW(order_posterior(d, std::vector<double>{0.5, 0.0}, cfg), InputError);
  cfg.k_max = 3;
  EXPECT_NO_THROW(order_posterior(d, std::vector<double>{0.5, 0.0}, cfg));
  EXPECT_EQ(default_k_max(4), 3u);
  EXPECT_EQ(default_k_max(200), 25u);
}

TEST(OrderPosterior, FixtureMatchesQuadrature) {
  const auto d = test::fixture4();
  for (const auto& y : {std::vector<double>{0.5, 0.0}, std::vector<double>{2.0, 2.0}}) {
    KoreaConfig cfg;
    cfg.k_max = 3;
    const auto op = order_posterior(d, y, cfg);
    const auto q = test::quadrature_oracle(d, y, 3, cfg.rule, cfg.prior, cfg.beta_max);
    EXPECT_LE(total_variation(op.weights, q.order_posterior), 0.05);
  }
}

TEST(OrderPosterior, SmallFixturesMatchQuadrature) {
  for (std::size_t f = 0; f < 20; ++f) {
    const auto fx = test::small_fixture(f);
    KoreaConfig cfg;
    cfg.k_max = fx.k_max;
    cfg.rule = fx.rule;
    const auto op = order_posterior(fx.train, fx.y, cfg);
    const auto q = test::quadrature_oracle(fx.train, fx.y, fx.k_max, fx.rule, cfg.prior, cfg.beta_max);
    EXPECT_LE(total_variation(op.weights, q.order_posterior), 0.05) << "fixture " << f;
  }
}

TEST(Quadrature, RefinementIsConverged) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.5, 0.0};
  const GammaPrior prior;
  const auto a = test::quadrature_oracle(d, y, 3, NeighbourRule::Asymmetric, prior, 20.0, 2000);
  const auto b = test::quadrature_oracle(d, y, 3, NeighbourRule::Asymmetric, prior, 20.0, 4000);
  EXPECT_LT(total_variation(a.order_posterior, b.order_posterior), 1e-6);
  EXPECT_LT(total_variation(a.class_posterior, b.class_posterior), 1e-6);
}

TEST(BetaMarginalMoments, Mixtures) {
  LaplaceFit f1;
  f1.mode = 2.5;
  f1.variance = 0.7;
  auto one = make_order_posterior({0.0}, {f1});
  const auto m1 = beta_marginal_moments(one);
  EXPECT_DOUBLE_EQ(m1.mean, 2.5);
  EXPECT_DOUBLE_EQ(m1.variance, 0.7);

  LaplaceFit a, b;
  a.mode = 1.0;
  b.mode = 3.0;
  const auto two = beta_marginal_moments(make_order_posterior({0.0, 0.0}, {a, b}));
  EXPECT_DOUBLE_EQ(two.mean, 2.0);
  EXPECT_DOUBLE_EQ(two.variance, 1.0);

  a.mode = 2.0;
  a.variance = 1.0;
  b.mode = 4.0;
  b.variance = 1.0;
  const auto w = beta_marginal_moments(make_order_posterior({std::log(0.25), std::log(0.75)}, {a, b}));
  EXPECT_NEAR(w.mean, 3.5, 1e-14);
  EXPECT_NEAR(w.variance, 1.75, 1e-14);
}

TEST(BetaGrid, Examples) {
  EXPECT_EQ(build_beta_grid(5.0, 2.0, 10.0).points, (std::vector<double>{1, 3, 5, 7, 9}));
  EXPECT_EQ(build_beta_grid(1.0, 5.0, 10.0).points, (std::vector<double>{1, 6}));
  EXPECT_EQ(build_beta_grid(0.5, 10.0, 5.0).points, (std::vector<double>{0.5}));
  EXPECT_EQ(build_beta_grid(-3.0, 0.5, 5.0).points, (std::vector<double>{0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5}));
  EXPECT_EQ(build_beta_grid(-100.0, 1.0, 5.0).points, (std::vector<double>{1e-6}));
  EXPECT_EQ(build_beta_grid(40.0, 100.0, 5.0).points, (std::vector<double>{5.0}));
  EXPECT_THROW(build_beta_grid(1.0, 0.0, 5.0), InputError);
  const auto g = build_beta_grid(10.0, 0.01, 20.0);
  EXPECT_EQ(g.points.size(), 129u);
  EXPECT_TRUE(std::is_sorted(g.points.begin(), g.points.end()));
}

TEST(Classify, SingleCellEqualsConditionalPosterior) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.5, 0.0};
  KoreaConfig cfg;
  cfg.k_max = 1;
  cfg.grid_override = std::vector<double>{3.7};
  const auto r = classify(d, y, cfg);
  const auto p = conditional_class_posterior(d, y, {3.7, 1}, cfg.rule);
  EXPECT_NEAR(r.class_probs[0], p[0], 1e-14);
  EXPECT_NEAR(r.class_probs[1], p[1], 1e-14);
  EXPECT_DOUBLE_EQ(r.mixture_weights[0], 1.0);
}

TEST(Classify, ConstantLikelihoodGivesUniform) {
  KoreaConfig cfg;
  const auto r = classify(ConstantModel{}, cfg);
  for (double p : r.class_probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.label_mean, 1.0, 1e-12);
  EXPECT_NEAR(r.label_variance, 2.0 / 3.0, 1e-12);
}

TEST(Classify, FixtureMatchesQuadrature) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.5, 0.0};
  KoreaConfig cfg;
  cfg.k_max = 3;
  const auto r = classify(d, y, cfg);
  const auto q = test::quadrature_oracle(d, y, 3, cfg.rule, cfg.prior, cfg.beta_max);
  EXPECT_LE(total_variation(r.class_probs, q.class_posterior), 0.05);
  EXPECT_LE(total_variation(r.order.weights, q.order_posterior), 0.05);
}

TEST(Classify, Normalization) {
  const auto data = load_csv(std::string(PKNN_DATA_DIR) + "/iris.csv");
  const std::vector<std::size_t> rows{0, 1, 2, 50, 51, 52, 100, 101, 102, 103, 60, 10};
  const auto train = data.subset(rows);
  for (auto rule : {NeighbourRule::Asymmetric, NeighbourRule::BoltzmannSymmetric, NeighbourRule::Boltzmann2}) {
    KoreaConfig cfg;
    cfg.rule = rule;
    const auto r = classify(train, data.point(75), cfg);
    EXPECT_NEAR(sum(r.class_probs), 1.0, 1e-12);
    EXPECT_NEAR(sum(r.order.weights), 1.0, 1e-12);
    EXPECT_NEAR(sum(r.mixture_weights), 1.0, 1e-12);
    EXPECT_GE(r.label_variance, 0.0);
    EXPECT_EQ(r.mixture_weights.size(), r.grid.points.size() * r.order.k_max);
    for (double b : r.grid.points) {
      EXPECT_GT(b, 0.0);
      EXPECT_LE(b, cfg.beta_max);
    }
  }
}

TEST(Classify, OptimalUsesMapOrderAtItsMode) {
  const auto d = test::fixture4();
  const std::vector<double> y{2.0, 2.0};
  KoreaConfig cfg;
  cfg.k_max = 3;
  const auto r = classify(d, y, cfg);
  const auto p = conditional_class_posterior(d, y, {r.order.fit(r.order.k_star).mode, r.order.k_star}, cfg.rule);
  EXPECT_NEAR(r.optimal_probs[0], p[0], 1e-12);
  EXPECT_EQ(r.predicted_optimal(), PredictiveResult::argmax(p));
}

TEST(Classify, Deterministic) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.7, 0.2};
  KoreaConfig cfg;
  const auto a = classify(d, y, cfg);
  const auto b = classify(d, y, cfg);
  EXPECT_EQ(a.class_probs, b.class_probs);
  EXPECT_EQ(a.mixture_weights, b.mixture_weights);
  EXPECT_EQ(a.order.weights, b.order.weights);
}

TEST(Classify, UntruncatedGaussianOption) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.5, 0.0};
  KoreaConfig cfg;
  cfg.truncated_gaussian = false;
  const auto r = classify(d, y, cfg);
  EXPECT_NEAR(sum(r.class_probs), 1.0, 1e-12);
  EXPECT_NEAR(sum(r.order.weights), 1.0, 1e-12);
}

TEST(ClassifyBatch, Contract) {
  const auto d = test::fixture4();
  KoreaConfig cfg;
  EXPECT_TRUE(classify_batch(d, std::vector<FeatureVector>{}, cfg).empty());

  const std::vector<FeatureVector> tests{{0.5, 0.0}, {2.0, 2.0}, {0.0, 1.0}};
  const auto one = classify_batch(d, std::vector<FeatureVector>{tests[0]}, cfg);
  ASSERT_TRUE(one[0].result);
  EXPECT_EQ(one[0].result->class_probs, classify(d, tests[0], cfg).class_probs);

  const auto fwd = classify_batch(d, tests, cfg);
  const auto rev = classify_batch(d, std::vector<FeatureVector>{tests[2], tests[1], tests[0]}, cfg);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(fwd[i].result->class_probs, rev[2 - i].result->class_probs);

  const auto mixed = classify_batch(d, std::vector<FeatureVector>{tests[0], FeatureVector{1.0}, tests[1]}, cfg);
  EXPECT_TRUE(mixed[0].result);
  EXPECT_FALSE(mixed[1].result);
  EXPECT_FALSE(mixed[1].error.empty());
  EXPECT_TRUE(mixed[2].result);
}
