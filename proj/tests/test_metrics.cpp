#include <gtest/gtest.h>

#include <cmath>

#include "pknn/pknn.hpp"

using namespace pknn;

namespace {

DensityGrid g(std::vector<double> v) { return DensityGrid::vector(std::move(v)); }

}  // namespace

TEST(FMeasure, Examples) {
  const std::vector<Label> truth{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(f_measure(truth, truth, 2), 1.0);
  EXPECT_DOUBLE_EQ(f_measure(std::vector<Label>{1, 1, 0, 0}, truth, 2), 0.0);
  EXPECT_NEAR(f_measure(std::vector<Label>{0, 1, 1, 1}, truth, 2), (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
  EXPECT_NEAR(f_measure(std::vector<Label>{0, 1, 1, 1}, truth, 2, FAverage::Micro), 0.75, 1e-15);
}

TEST(FMeasure, AbsentClassesSkipped) {
  const std::vector<Label> truth{0, 0, 0};
  EXPECT_DOUBLE_EQ(f_measure(truth, truth, 3), 1.0);
  EXPECT_NEAR(f_measure(std::vector<Label>{0, 0, 2}, truth, 3), 0.8, 1e-15);
}

TEST(FMeasure, Errors) {
  EXPECT_THROW(f_measure(std::vector<Label>{0}, std::vector<Label>{0, 1}, 2), InputError);
  EXPECT_THROW(f_measure(std::vector<Label>{}, std::vector<Label>{}, 2), InputError);
  EXPECT_THROW(f_measure(std::vector<Label>{2}, std::vector<Label>{0}, 2), InputError);
}

TEST(Rmse, Examples) {
  EXPECT_DOUBLE_EQ(density_rmse(g({0.3, 0.7}), g({0.3, 0.7})), 0.0);
  EXPECT_DOUBLE_EQ(density_rmse(g({1, 0}), g({0, 1})), 1.0);
  EXPECT_DOUBLE_EQ(density_rmse(g({0.5, 0.5}), g({0.25, 0.75})), 0.25);
  EXPECT_THROW(density_rmse(g({1.0}), g({0.5, 0.5})), InputError);
  EXPECT_THROW(density_rmse(DensityGrid({1, 0}, 1, 2), g({1, 0})), InputError);
}

TEST(Kld, Examples) {
  EXPECT_NEAR(density_kld(g({0.3, 0.7}), g({0.3, 0.7})), 0.0, 1e-15);
  EXPECT_NEAR(density_kld(g({1, 0}), g({0.5, 0.5})), std::log(2.0), 1e-9);
  EXPECT_NEAR(density_kld(g({0.5, 0.5}), g({0.25, 0.75})), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-9);
  EXPECT_NEAR(density_kld(g({0.5, 0.5}), g({0.25, 0.75})), 0.1438, 5e-5);
  EXPECT_THROW(density_kld(g({0.5, 0.6}), g({0.5, 0.5})), InputError);
  EXPECT_THROW(density_kld(g({0.5, 0.5}), g({0.5, 0.5}), 0.0), InputError);
}

TEST(Kld, EmptyBinsStayFinite) {
  const double v = density_kld(g({0.5, 0.5}), g({1.0, 0.0}));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 10.0);
}

TEST(Psnr, Examples) {
  EXPECT_EQ(density_psnr(g({0.3, 0.7}), g({0.3, 0.7})), kPsnrCap);
  EXPECT_NEAR(density_psnr(g({0.9, 0.1}), g({1.0, 0.0})), 20.0, 1e-9);
  EXPECT_NEAR(density_psnr(g({1.8, 0.2}), g({2.0, 0.0})), 20.0, 1e-9);
}

TEST(Ssim, Examples) {
  EXPECT_NEAR(density_ssim(g({0.2, 0.3, 0.5}), g({0.2, 0.3, 0.5})), 1.0, 1e-15);
  EXPECT_LT(density_ssim(g({0.2, 0.3, 0.5}), g({0.3, 0.4, 0.6})), 1.0);
  // Equal means, p constant: the expression reduces to c2 / (var_q + c2).
  const double c2 = (0.03 * 0.75) * (0.03 * 0.75);
  EXPECT_NEAR(density_ssim(g({0.5, 0.5}), g({0.25, 0.75})), c2 / (0.0625 + c2), 1e-15);
  EXPECT_NEAR(density_ssim(g({0.0, 0.0}), g({0.0, 0.0})), 1.0, 1e-15);
}

TEST(NearestCell, Assignment) {
  const std::vector<double> axis{1.0, 2.0, 4.0};
  EXPECT_EQ(nearest_cell(axis, -5.0), 0u);
  EXPECT_EQ(nearest_cell(axis, 1.4), 0u);
  EXPECT_EQ(nearest_cell(axis, 1.5), 0u);
  EXPECT_EQ(nearest_cell(axis, 1.6), 1u);
  EXPECT_EQ(nearest_cell(axis, 3.5), 2u);
  EXPECT_EQ(nearest_cell(axis, 40.0), 2u);
  EXPECT_THROW(nearest_cell(std::vector<double>{}, 1.0), InputError);
}

TEST(DensityGrid, Shape) {
  EXPECT_THROW(DensityGrid({1, 2, 3}, 2, 2), InputError);
  EXPECT_TRUE(g({0.25, 0.75}).normalized());
  EXPECT_FALSE(g({0.25, 0.8}).normalized());
}
