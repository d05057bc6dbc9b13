#include <gtest/gtest.h>

#include "pknn/pknn.hpp"
#include "oracle.hpp"

using namespace pknn;

TEST(Knn, FixtureMajority) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.4, 0.1};
  EXPECT_EQ(knn_classify(d, y, {3, NeighbourRule::Asymmetric}), 0);
  EXPECT_EQ(knn_classify(d, y, {1, NeighbourRule::Asymmetric}), 0);
  EXPECT_EQ(knn_classify(d, std::vector<double>{2.5, 2.5}, {1, NeighbourRule::Asymmetric}), 1);
}

TEST(Knn, RuleScoresOnFixture) {
  // k = 1 around (0.4, 0.1): the test point is the nearest neighbour of
  // sites 0, 1 and 2; site 3 points to site 2.
  const auto d = test::fixture4();
  const std::vector<double> y{0.4, 0.1};
  const KnnVoter v(NeighbourIndex(d), d.labels(), d.class_count(), y);
  EXPECT_EQ(v.scores(1, NeighbourRule::Asymmetric), (std::vector<int>{1, 0}));
  EXPECT_EQ(v.scores(1, NeighbourRule::BoltzmannSymmetric), (std::vector<int>{3, 1}));
  EXPECT_EQ(v.scores(1, NeighbourRule::Boltzmann2), (std::vector<int>{2, 1}));
}

TEST(Knn, VoteTieGoesToLowestClass) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.0, 0.7};
  const KnnVoter v(NeighbourIndex(d), d.labels(), d.class_count(), y);
  EXPECT_EQ(v.scores(2, NeighbourRule::Asymmetric), (std::vector<int>{1, 1}));
  EXPECT_EQ(v.vote(2, NeighbourRule::Asymmetric), 0);
}

TEST(Knn, CoincidentAndEquidistantPoints) {
  const auto d = test::fixture4();
  EXPECT_EQ(knn_classify(d, std::vector<double>{3.0, 3.0}, {1, NeighbourRule::Asymmetric}), 1);
  EXPECT_EQ(knn_classify(d, std::vector<double>{0.0, 0.75}, {1, NeighbourRule::Asymmetric}), 0);
}

TEST(Knn, FullNeighbourhoodIsGlobalMajority) {
  const auto d = test::fixture4();
  for (auto rule : {NeighbourRule::Asymmetric, NeighbourRule::BoltzmannSymmetric, NeighbourRule::Boltzmann2}) {
    EXPECT_EQ(knn_classify(d, std::vector<double>{5.0, 5.0}, {4, rule}), 0);
  }
}

TEST(Knn, Errors) {
  const auto d = test::fixture4();
  EXPECT_THROW(knn_classify(d, std::vector<double>{0.0}, {1, NeighbourRule::Asymmetric}), InputError);
  EXPECT_THROW(knn_classify(d, std::vector<double>{0.0, 0.0}, {0, NeighbourRule::Asymmetric}), InputError);
  EXPECT_THROW(knn_classify(d, std::vector<double>{0.0, 0.0}, {5, NeighbourRule::Asymmetric}), InputError);
}

TEST(Knn, IrisLeaveOneOutIsAccurate) {
  const auto data = load_csv(std::string(PKNN_DATA_DIR) + "/iris.csv");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < data.size(); ++j)
      if (j != i) rows.push_back(j);
    const auto train = data.subset(rows);
    if (knn_classify(train, data.point(i), {5, NeighbourRule::Asymmetric}) == data.labels()[i]) ++correct;
  }
  EXPECT_GE(correct, 140u);
}
