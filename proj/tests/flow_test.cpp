#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "freqforest/flow.hpp"
#include "oracles.hpp"

namespace ff = freqforest;
using ff::DirectionBin;
using ff::Subregion;

namespace {

void expect_rect(const ff::Rect& r, double x, double y, double w, double h) {
  EXPECT_DOUBLE_EQ(r.x, x);
  EXPECT_DOUBLE_EQ(r.y, y);
  EXPECT_DOUBLE_EQ(r.w, w);
  EXPECT_DOUBLE_EQ(r.h, h);
}

}  // namespace

TEST(PartitionBbox, SquareBox) {
  const auto l = ff::partition_bbox({0, 0, 100, 100, 0});
  expect_rect(l[Subregion::Head], 0, 0, 100, 20);
  expect_rect(l[Subregion::LeftTorsoArm], 0, 20, 50, 40);
  expect_rect(l[Subregion::RightTorsoArm], 50, 20, 50, 40);
  expect_rect(l[Subregion::LeftLeg], 0, 60, 50, 40);
  expect_rect(l[Subregion::RightLeg], 50, 60, 50, 40);
}

TEST(PartitionBbox, TranslatedBox) {
  const auto l = ff::partition_bbox({10, 20, 50, 100, 0});
  expect_rect(l[Subregion::Head], 10, 20, 50, 20);
  expect_rect(l[Subregion::LeftTorsoArm], 10, 40, 25, 40);
  expect_rect(l[Subregion::RightTorsoArm], 35, 40, 25, 40);
  expect_rect(l[Subregion::LeftLeg], 10, 80, 25, 40);
  expect_rect(l[Subregion::RightLeg], 35, 80, 25, 40);
}

TEST(PartitionBbox, DegenerateBoxThrows) {
  EXPECT_THROW(ff::partition_bbox({0, 0, 0, 50, 0}), ff::ArgumentError);
  EXPECT_THROW(ff::partition_bbox({0, 0, 10, -1, 0}), ff::ArgumentError);
}

TEST(PartitionBbox, AreasSumAndPixelsTileTheBox) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pos(0, 30), size(1, 40);
  for (int i = 0; i < 200; ++i) {
    const ff::BoundingBox b{pos(rng), pos(rng), size(rng), size(rng), 0};
    const auto l = ff::partition_bbox(b);
    double area = 0;
    for (const auto& r : l.rects) area += r.area();
    EXPECT_NEAR(area, b.w * b.h, 1e-9 * b.w * b.h);

    // Rounded pixel spans are disjoint and cover exactly the rounded box.
    std::vector<int> owner(80 * 80, 0);
    for (const auto& r : l.rects) {
      const auto s = ff::pixel_span(r, 80, 80);
      for (std::size_t y = s.y0; y < s.y1; ++y)
        for (std::size_t x = s.x0; x < s.x1; ++x) ++owner[y * 80 + x];
    }
    const auto box = ff::pixel_span({b.x, b.y, b.w, b.h}, 80, 80);
    for (std::size_t y = 0; y < 80; ++y) {
      for (std::size_t x = 0; x < 80; ++x) {
        const bool inside = x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1;
        ASSERT_EQ(owner[y * 80 + x], inside ? 1 : 0);
      }
    }
  }
}

TEST(BinDirection, Examples) {
  EXPECT_EQ(ff::bin_direction(1, 0), DirectionBin::Right);
  EXPECT_EQ(ff::bin_direction(1, -std::sqrt(3.0)), DirectionBin::UpperRight);
  EXPECT_EQ(ff::bin_direction(0, 0), std::nullopt);
}

TEST(BinDirection, ImageYAxisPointsDown) {
  EXPECT_EQ(ff::bin_direction(0, -1), DirectionBin::UpperLeft);  // 90 degrees: counter-clockwise bin
  EXPECT_EQ(ff::bin_direction(-1, 0), DirectionBin::Left);
  EXPECT_EQ(ff::bin_direction(-0.2, 1), DirectionBin::LowerLeft);  // about 259 degrees
  EXPECT_EQ(ff::bin_direction(0, 1), DirectionBin::LowerRight);     // 270 opens the next bin
  EXPECT_EQ(ff::bin_direction(1, 1), DirectionBin::LowerRight);  // 315 degrees
  EXPECT_EQ(ff::bin_direction(1, 0.01), DirectionBin::Right);    // just below 360
}

TEST(BinDirection, ArcsAroundEachBoundary) {
  for (int b = 0; b < 6; ++b) {
    const double deg = 30.0 + 60.0 * b;
    for (double eps : {-1e-7, 1e-7}) {
      const double rad = (deg + eps) * std::numbers::pi / 180.0;
      const int expected = eps < 0 ? b : (b + 1) % 6;
      EXPECT_EQ(static_cast<int>(*ff::bin_direction(std::cos(rad), -std::sin(rad))), expected) << deg + eps;
    }
  }
}

TEST(FlowStats, UniformField) {
  ff::FlowField field(40, 40, {2, 0});
  const auto s = ff::flow_stats(field, ff::partition_bbox({5, 5, 30, 30, 0}));
  for (const auto& r : s.regions) {
    EXPECT_DOUBLE_EQ(r[DirectionBin::Right].proportion, 1.0);
    EXPECT_DOUBLE_EQ(r[DirectionBin::Right].mean_magnitude, 2.0);
    for (int b = 1; b < 6; ++b) {
      EXPECT_EQ(r.bins[b].proportion, 0.0);
      EXPECT_EQ(r.bins[b].mean_magnitude, 0.0);
    }
  }
  EXPECT_DOUBLE_EQ(s.mean_magnitude, 2.0);
}

TEST(FlowStats, TwoOpposedVectors) {
  // A 2x1 field whose box is exactly one head-sized region: use a layout with
  // a single non-empty rectangle.
  ff::FlowField field(2, 1);
  field.at(0, 0) = {1, 0};
  field.at(1, 0) = {-1, 0};
  ff::SubregionLayout layout;
  layout[Subregion::Head] = {0, 0, 2, 1};
  const auto s = ff::flow_stats(field, layout);
  const auto& head = s[Subregion::Head];
  EXPECT_DOUBLE_EQ(head[DirectionBin::Right].proportion, 0.5);
  EXPECT_DOUBLE_EQ(head[DirectionBin::Right].mean_magnitude, 1.0);
  EXPECT_DOUBLE_EQ(head[DirectionBin::Left].proportion, 0.5);
  EXPECT_DOUBLE_EQ(head[DirectionBin::Left].mean_magnitude, 1.0);
  for (auto b : {DirectionBin::UpperRight, DirectionBin::UpperLeft, DirectionBin::LowerLeft, DirectionBin::LowerRight}) {
    EXPECT_EQ(head[b].proportion, 0.0);
  }
  const auto features = ff::flow_frame_features(s);
  EXPECT_DOUBLE_EQ(features[0], 1.0);  // head.prop_horizontal
  EXPECT_DOUBLE_EQ(features[3], 1.0);  // head.mag_horizontal (pooled)
}

TEST(FlowStats, ZeroFieldAndZeroVectors) {
  ff::FlowField field(20, 20);
  const auto layout = ff::partition_bbox({0, 0, 20, 20, 0});
  const auto s = ff::flow_stats(field, layout);
  for (const auto& r : s.regions)
    for (const auto& b : r.bins) {
      EXPECT_EQ(b.proportion, 0.0);
      EXPECT_EQ(b.mean_magnitude, 0.0);
    }
  EXPECT_EQ(s.mean_magnitude, 0.0);

  // Zero vectors are skipped for proportions but count toward the box mean.
  field.at(0, 0) = {3, 0};
  const auto s2 = ff::flow_stats(field, layout);
  EXPECT_DOUBLE_EQ(s2[Subregion::Head][DirectionBin::Right].proportion, 1.0);
  EXPECT_DOUBLE_EQ(s2.mean_magnitude, 3.0 / 400.0);
}

TEST(FlowStats, ClipsPartiallyOutsideAndRejectsFullyOutside) {
  ff::FlowField field(10, 10, {0, 1});
  const auto partial = ff::flow_stats(field, ff::partition_bbox({-5, -5, 10, 10, 0}));
  EXPECT_EQ(partial.box_pixels, 25u);
  EXPECT_DOUBLE_EQ(partial.mean_magnitude, 1.0);
  EXPECT_THROW(ff::flow_stats(field, ff::partition_bbox({20, 20, 5, 5, 0})), ff::DomainError);
}

TEST(FlowStats, MatchesPixelEnumeration) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0, 2);
  std::uniform_real_distribution<double> pos(-4, 16), size(2, 22);
  for (int trial = 0; trial < 100; ++trial) {
    ff::FlowField field(20, 20);
    for (auto& v : field.vectors) v = (rng() % 5 == 0) ? ff::FlowVector{0, 0} : ff::FlowVector{nd(rng), nd(rng)};
    const ff::BoundingBox box{pos(rng), pos(rng), size(rng), size(rng), 0};
    const auto layout = ff::partition_bbox(box);
    const auto ref = oracle::enumerate_flow(field, layout);
    if (ref.box_pixels == 0) {
      EXPECT_THROW(ff::flow_stats(field, layout), ff::DomainError);
      continue;
    }
    const auto s = ff::flow_stats(field, layout);
    for (std::size_t r = 0; r < 5; ++r) {
      EXPECT_EQ(s.regions[r].nonzero, ref.nonzero[r]);
      for (std::size_t b = 0; b < 6; ++b) {
        EXPECT_EQ(s.regions[r].bins[b].count, ref.count[r][b]);
        const double mean = ref.count[r][b] ? ref.mag_sum[r][b] / static_cast<double>(ref.count[r][b]) : 0.0;
        EXPECT_NEAR(s.regions[r].bins[b].mean_magnitude, mean, 1e-9);
      }
    }
    EXPECT_NEAR(s.mean_magnitude, ref.box_mag_sum / static_cast<double>(ref.box_pixels), 1e-9);
  }
}

TEST(FlowStats, ScalingPreservesProportions) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0, 1);
  ff::FlowField field(16, 16);
  for (auto& v : field.vectors) v = {nd(rng), nd(rng)};
  const auto layout = ff::partition_bbox({1, 1, 14, 14, 0});
  const auto base = ff::flow_stats(field, layout);
  for (double c : {0.5, 2.0, 8.0}) {
    ff::FlowField scaled = field;
    for (auto& v : scaled.vectors) v = {c * v.u, c * v.v};
    const auto s = ff::flow_stats(scaled, layout);
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t b = 0; b < 6; ++b) {
        EXPECT_EQ(s.regions[r].bins[b].proportion, base.regions[r].bins[b].proportion);
        EXPECT_NEAR(s.regions[r].bins[b].mean_magnitude, c * base.regions[r].bins[b].mean_magnitude, 1e-9);
      }
  }
}

TEST(FlowFeatureSeries, CatalogAndShape) {
  const auto names = ff::flow_feature_names();
  ASSERT_EQ(names.size(), 31u);
  EXPECT_EQ(names.front(), "head.prop_horizontal");
  EXPECT_EQ(names.back(), "box.mag_mean");

  std::vector<ff::FlowField> flows(40, ff::FlowField(20, 30, {1, 0}));
  std::vector<ff::BoundingBox> boxes(40, ff::BoundingBox{2, 2, 16, 25, 0});
  const auto set = ff::flow_feature_series(flows, boxes);
  ASSERT_EQ(set.size(), 31u);
  for (const auto& s : set) EXPECT_EQ(s.values.size(), 40u);
  EXPECT_EQ(set[0].name, "head.prop_horizontal");
  for (double v : set[0].values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(FlowFeatureSeries, Errors) {
  std::vector<ff::FlowField> flows(10, ff::FlowField(8, 8));
  std::vector<ff::BoundingBox> boxes(9, ff::BoundingBox{0, 0, 8, 8, 0});
  EXPECT_THROW(ff::flow_feature_series(flows, boxes), ff::ArgumentError);
  EXPECT_THROW(ff::flow_feature_series(std::vector<ff::FlowField>{}, std::vector<ff::BoundingBox>{}), ff::ArgumentError);
}
