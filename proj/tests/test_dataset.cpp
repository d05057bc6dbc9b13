#include <gtest/gtest.h>

#include <sstream>

#include "pknn/pknn.hpp"
#include "oracle.hpp"

using namespace pknn;

namespace {

std::vector<std::vector<std::size_t>> one_based(const NeighbourGraph& g) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& l : g.neighbours) {
    std::vector<std::size_t> v;
    for (auto j : l) v.push_back(j + 1);
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST(Distance, Euclidean) {
  const std::vector<double> a{0, 0}, b{3, 4};
  EXPECT_DOUBLE_EQ(euclidean_distance(a, b), 5.0);
  const std::vector<double> c{1, 2, 3};
  EXPECT_THROW(euclidean_distance(a, c), InputError);
}

TEST(Dataset, RejectsBadInput) {
  EXPECT_THROW(LabeledDataset({}, {}, 2), InputError);
  EXPECT_THROW(LabeledDataset({{0.0}, {1.0}}, {0}, 2), InputError);
  EXPECT_THROW(LabeledDataset({{0.0}, {1.0, 2.0}}, {0, 1}, 2), InputError);
  EXPECT_THROW(LabeledDataset({{0.0}, {1.0}}, {0, 2}, 2), InputError);
  EXPECT_THROW(LabeledDataset({{0.0}, {1.0}}, {0, -1}, 2), InputError);
}

TEST(Dataset, SubsetAndAppend) {
  const auto d = test::fixture4();
  const std::vector<std::size_t> rows{3, 0};
  const auto s = d.subset(rows);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.label(0), 1);
  EXPECT_EQ(s.point(0)[0], 3.0);
  const auto w = d.with_point({5.0, 5.0}, 0);
  EXPECT_EQ(w.size(), 5u);
  EXPECT_EQ(w.label(4), 0);
}

TEST(NeighbourGraph, AsymmetricFixture) {
  const auto g = build_neighbour_graph(test::fixture4(), 1, NeighbourRule::Asymmetric);
  const std::vector<std::vector<std::size_t>> want{{2}, {1}, {1}, {3}};
  EXPECT_EQ(one_based(g), want);
}

TEST(NeighbourGraph, Boltzmann2Fixture) {
  const auto g = build_neighbour_graph(test::fixture4(), 1, NeighbourRule::Boltzmann2);
  const std::vector<std::vector<std::size_t>> want{{2, 3}, {1}, {1, 4}, {3}};
  EXPECT_EQ(one_based(g), want);
}

TEST(NeighbourGraph, SymmetricKeepsIncoming) {
  const auto g = build_neighbour_graph(test::fixture4(), 1, NeighbourRule::BoltzmannSymmetric);
  const std::vector<std::vector<std::size_t>> want{{2}, {1}, {1}, {3}};
  EXPECT_EQ(one_based(g), want);
  ASSERT_EQ(g.incoming.size(), 4u);
  EXPECT_EQ(g.incoming[0], (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(g.incoming[2], (std::vector<std::size_t>{3}));
  EXPECT_TRUE(g.incoming[3].empty());
}

TEST(NeighbourGraph, KOutOfRange) {
  const auto d = test::fixture4();
  EXPECT_THROW(build_neighbour_graph(d, 0, NeighbourRule::Asymmetric), InputError);
  EXPECT_THROW(build_neighbour_graph(d, 4, NeighbourRule::Asymmetric), InputError);
  EXPECT_NO_THROW(build_neighbour_graph(d, 3, NeighbourRule::Asymmetric));
}

TEST(NeighbourGraph, InsertTestPointFixture) {
  const auto d = test::fixture4();
  const auto g = build_neighbour_graph(d, 1, NeighbourRule::Asymmetric);
  const std::vector<double> y{0.1, 0.0};
  const auto h = insert_test_point(g, d, y);
  const std::vector<std::vector<std::size_t>> want{{5}, {5}, {1}, {3}, {1}};
  EXPECT_EQ(one_based(h), want);
}

TEST(NeighbourGraph, TiesBreakByIndex) {
  const LabeledDataset d({{0.0}, {1.0}, {-1.0}}, {0, 1, 0}, 2);
  const auto g = build_neighbour_graph(d, 1, NeighbourRule::Asymmetric);
  EXPECT_EQ(g.neighbours[0], (std::vector<std::size_t>{1}));
}

TEST(NeighbourIndex, IncrementalMatchesRebuild) {
  const auto d = test::fixture4();
  const std::vector<double> y{0.7, 1.1};
  const NeighbourIndex a(d);
  const auto inc = a.with_point(y);
  const NeighbourIndex full(d.with_point(y, 0));
  for (std::size_t k = 1; k <= 4; ++k) {
    for (auto rule : {NeighbourRule::Asymmetric, NeighbourRule::BoltzmannSymmetric, NeighbourRule::Boltzmann2}) {
      EXPECT_EQ(inc.graph(k, rule), full.graph(k, rule));
    }
  }
}

TEST(Rule, ParseRoundTrip) {
  for (auto rule : {NeighbourRule::Asymmetric, NeighbourRule::BoltzmannSymmetric, NeighbourRule::Boltzmann2}) {
    EXPECT_EQ(parse_rule(to_string(rule)), rule);
  }
  EXPECT_THROW(parse_rule("mutual"), InputError);
}

TEST(Csv, ParsesLabelsInOrderOfAppearance) {
  std::istringstream in("a,b,class\n1,2,x\n3,4,y\n5,6,x\n");
  const auto d = parse_csv(in);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.class_count(), 2);
  EXPECT_EQ(d.labels(), (std::vector<Label>{0, 1, 0}));
  EXPECT_EQ(d.class_names()[1], "y");
}

TEST(Csv, NamedLabelColumn) {
  std::istringstream in("class,a\nx,1\ny,2\n");
  CsvOptions o;
  o.label_column = "class";
  const auto d = parse_csv(in, o);
  EXPECT_EQ(d.dim(), 1u);
  EXPECT_EQ(d.point(1)[0], 2.0);
}

TEST(Csv, ReportsBadRows) {
  std::istringstream ragged("a,b,class\n1,2,x\n3,y\n");
  EXPECT_THROW(parse_csv(ragged), InputError);
  std::istringstream nonnum("a,b,class\n1,2,x\n3,abc,y\n");
  try {
    parse_csv(nonnum, {}, "t.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), IoError);
}

TEST(Csv, BundledDatasets) {
  const std::string dir = PKNN_DATA_DIR;
  struct Expect { const char* name; std::size_t n, d; int c; };
  for (const auto& e : {Expect{"iris", 150, 4, 3}, Expect{"wine", 178, 13, 3}, Expect{"crabs", 200, 5, 4},
                        Expect{"fglass", 214, 9, 4}}) {
    const auto data = load_csv(dir + "/" + e.name + ".csv");
    EXPECT_EQ(data.size(), e.n) << e.name;
    EXPECT_EQ(data.dim(), e.d) << e.name;
    EXPECT_EQ(data.class_count(), e.c) << e.name;
  }
}

TEST(Standardizer, TrainingStatistics) {
  const std::vector<FeatureVector> pts{{1.0, 5.0}, {3.0, 5.0}};
  const Standardizer s(pts);
  const auto z = s.apply(FeatureVector{3.0, 7.0});
  EXPECT_NEAR(z[0], 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(z[1], 2.0);
}
