#pragma once

// Directional optical-flow statistics over the five body subregions of an
// annotated bounding box, and the 31 per-frame flow feature series.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqforest/errors.hpp"
#include "freqforest/spectral.hpp"

namespace freqforest {

// Image coordinates: (x, y) is the top-left corner and y grows downward.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  std::size_t frame = 0;
};

struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct FlowVector {
  double u = 0.0;
  double v = 0.0;
};

// Dense per-pixel displacement, row-major.
struct FlowField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<FlowVector> vectors;

  FlowField() = default;
  FlowField(std::size_t w, std::size_t h, FlowVector fill = {}) : width(w), height(h), vectors(w * h, fill) {}

  FlowVector& at(std::size_t px, std::size_t py) { return vectors[py * width + px]; }
  const FlowVector& at(std::size_t px, std::size_t py) const { return vectors[py * width + px]; }
};

enum class Subregion : std::size_t { Head = 0, LeftTorsoArm, RightTorsoArm, LeftLeg, RightLeg };
inline constexpr std::size_t kSubregionCount = 5;

// Counter-clockwise order starting at "right"; a +60 degree rotation maps
// bin i to bin (i + 1) % 6.
enum class DirectionBin : std::size_t { Right = 0, UpperRight, UpperLeft, Left, LowerLeft, LowerRight };
inline constexpr std::size_t kDirectionBinCount = 6;

inline constexpr std::array<std::string_view, kSubregionCount> kSubregionNames = {
    "head", "left_torso_arm", "right_torso_arm", "left_leg", "right_leg"};

inline constexpr std::array<std::string_view, kDirectionBinCount> kDirectionBinNames = {
    "right", "upper_right", "upper_left", "left", "lower_left", "lower_right"};

inline std::string_view to_string(Subregion r) { return kSubregionNames[static_cast<std::size_t>(r)]; }
inline std::string_view to_string(DirectionBin b) { return kDirectionBinNames[static_cast<std::size_t>(b)]; }

struct SubregionLayout {
  std::array<Rect, kSubregionCount> rects{};

  const Rect& operator[](Subregion r) const { return rects[static_cast<std::size_t>(r)]; }
  Rect& operator[](Subregion r) { return rects[static_cast<std::size_t>(r)]; }
};

// Head takes the top fifth at full width; the torso/arm and leg rows take
// two fifths each and are split into image-left and image-right halves.
inline SubregionLayout partition_bbox(const BoundingBox& box) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) {
    throw ArgumentError("partition_bbox: bounding box needs positive width and height");
  }
  const double head_h = box.h / 5.0;
  const double row_h = 2.0 * box.h / 5.0;
  const double half_w = box.w / 2.0;
  const double torso_y = box.y + head_h;
  const double legs_y = torso_y + row_h;

  SubregionLayout layout;
  layout[Subregion::Head] = {box.x, box.y, box.w, head_h};
  layout[Subregion::LeftTorsoArm] = {box.x, torso_y, half_w, row_h};
  layout[Subregion::RightTorsoArm] = {box.x + half_w, torso_y, half_w, row_h};
  layout[Subregion::LeftLeg] = {box.x, legs_y, half_w, row_h};
  layout[Subregion::RightLeg] = {box.x + half_w, legs_y, half_w, row_h};
  return layout;
}

// Angle of a flow vector in degrees, [0, 360), measured with y pointing up.
inline double flow_angle_degrees(double u, double v) {
  double deg = std::atan2(-v, u) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

// 60-degree half-open arcs centered on 0, 60, ..., 300 degrees. The zero
// vector has no direction and yields nullopt.
inline std::optional<DirectionBin> bin_direction(double u, double v) {
  if (u == 0.0 && v == 0.0) return std::nullopt;
  const double shifted = flow_angle_degrees(u, v) + 30.0;
  auto index = static_cast<std::size_t>(std::floor(shifted / 60.0));
  return static_cast<DirectionBin>(index % kDirectionBinCount);
}

inline double flow_magnitude(const FlowVector& f) { return std::sqrt(f.u * f.u + f.v * f.v); }

// Integer pixel span [begin, end) of a rectangle after rounding its edges to
// the nearest integer and clipping to the field.
struct PixelSpan {
  std::size_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  bool empty() const noexcept { return x0 >= x1 || y0 >= y1; }
  std::size_t count() const noexcept { return empty() ? 0 : (x1 - x0) * (y1 - y0); }
};

inline PixelSpan pixel_span(const Rect& r, std::size_t width, std::size_t height) {
  auto clamp_edge = [](double edge, std::size_t limit) -> std::size_t {
    const double rounded = std::round(edge);
    if (rounded <= 0.0) return 0;
    if (rounded >= static_cast<double>(limit)) return limit;
    return static_cast<std::size_t>(rounded);
  };
  return {clamp_edge(r.x, width), clamp_edge(r.x + r.w, width), clamp_edge(r.y, height),
          clamp_edge(r.y + r.h, height)};
}

struct BinStats {
  std::size_t count = 0;
  double magnitude_sum = 0.0;
  double proportion = 0.0;
  double mean_magnitude = 0.0;
};

struct SubregionStats {
  std::array<BinStats, kDirectionBinCount> bins{};
  std::size_t pixels = 0;
  std::size_t nonzero = 0;

  const BinStats& operator[](DirectionBin b) const { return bins[static_cast<std::size_t>(b)]; }
};

struct FlowStats {
  std::array<SubregionStats, kSubregionCount> regions{};
  std::size_t box_pixels = 0;
  // Mean magnitude over every pixel in the box, zero vectors included.
  double mean_magnitude = 0.0;

  const SubregionStats& operator[](Subregion r) const { return regions[static_cast<std::size_t>(r)]; }
};

inline FlowStats flow_stats(const FlowField& flow, const SubregionLayout& layout) {
  FlowStats stats;
  double box_magnitude = 0.0;
  for (std::size_t r = 0; r < kSubregionCount; ++r) {
    SubregionStats& region = stats.regions[r];
    const PixelSpan span = pixel_span(layout.rects[r], flow.width, flow.height);
    region.pixels = span.count();
    if (span.empty()) continue;
    for (std::size_t py = span.y0; py < span.y1; ++py) {
      for (std::size_t px = span.x0; px < span.x1; ++px) {
        const FlowVector& f = flow.at(px, py);
        const double mag = flow_magnitude(f);
        box_magnitude += mag;
        const auto bin = bin_direction(f.u, f.v);
        if (!bin) continue;
        BinStats& b = region.bins[static_cast<std::size_t>(*bin)];
        ++b.count;
        b.magnitude_sum += mag;
        ++region.nonzero;
      }
    }
    if (region.nonzero == 0) continue;
    for (BinStats& b : region.bins) {
      b.proportion = static_cast<double>(b.count) / static_cast<double>(region.nonzero);
      b.mean_magnitude = b.count ? b.magnitude_sum / static_cast<double>(b.count) : 0.0;
    }
  }
  for (const auto& region : stats.regions) stats.box_pixels += region.pixels;
  if (stats.box_pixels == 0) throw DomainError("flow_stats: bounding box lies entirely outside the flow field");
  stats.mean_magnitude = box_magnitude / static_cast<double>(stats.box_pixels);
  return stats;
}

// Per-subregion feature kinds. Each pairs two opposite direction bins.
enum class FlowFeatureKind : std::size_t {
  PropHorizontal = 0,
  PropDiagRising,
  PropDiagFalling,
  MagHorizontal,
  MagDiagRising,
  MagDiagFalling
};
inline constexpr std::size_t kFlowFeatureKinds = 6;
inline constexpr std::size_t kFlowFeatureCount = kSubregionCount * kFlowFeatureKinds + 1;

inline constexpr std::array<std::string_view, kFlowFeatureKinds> kFlowFeatureKindNames = {
    "prop_horizontal", "prop_diag_rising", "prop_diag_falling",
    "mag_horizontal",  "mag_diag_rising",  "mag_diag_falling"};

inline constexpr std::string_view kBoxMeanMagnitudeName = "box.mag_mean";

// "<subregion>.<kind>" for the 30 subregion features, then box.mag_mean.
inline std::vector<std::string> flow_feature_names() {
  std::vector<std::string> names;
  names.reserve(kFlowFeatureCount);
  for (auto region : kSubregionNames) {
    for (auto kind : kFlowFeatureKindNames) names.push_back(std::string(region) + "." + std::string(kind));
  }
  names.emplace_back(kBoxMeanMagnitudeName);
  return names;
}

namespace detail {

inline std::array<DirectionBin, 2> opposite_pair(std::size_t axis) {
  switch (axis) {
    case 0: return {DirectionBin::Right, DirectionBin::Left};
    case 1: return {DirectionBin::UpperRight, DirectionBin::LowerLeft};
    default: return {DirectionBin::LowerRight, DirectionBin::UpperLeft};
  }
}

}  // namespace detail

// The 31 scalar features of one frame, in flow_feature_names() order.
inline std::array<double, kFlowFeatureCount> flow_frame_features(const FlowStats& stats) {
  std::array<double, kFlowFeatureCount> out{};
  std::size_t i = 0;
  for (const SubregionStats& region : stats.regions) {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const auto [a, b] = detail::opposite_pair(axis);
      out[i + axis] = region[a].proportion + region[b].proportion;
      // Pooled over the vectors of both bins.
      const std::size_t count = region[a].count + region[b].count;
      out[i + 3 + axis] = count ? (region[a].magnitude_sum + region[b].magnitude_sum) / static_cast<double>(count) : 0.0;
    }
    i += kFlowFeatureKinds;
  }
  out[i] = stats.mean_magnitude;
  return out;
}

inline SeriesSet flow_feature_series(std::span<const FlowField> flows, std::span<const BoundingBox> boxes) {
  if (flows.empty()) throw ArgumentError("flow_feature_series: no frames");
  if (flows.size() != boxes.size()) {
    throw ArgumentError("flow_feature_series: " + std::to_string(flows.size()) + " flow frames but " +
                        std::to_string(boxes.size()) + " boxes");
  }
  SeriesSet set;
  for (auto& name : flow_feature_names()) set.push_back({std::move(name), TimeSeries(flows.size())});
  for (std::size_t t = 0; t < flows.size(); ++t) {
    const auto values = flow_frame_features(flow_stats(flows[t], partition_bbox(boxes[t])));
    for (std::size_t f = 0; f < kFlowFeatureCount; ++f) set[f].values[t] = values[f];
  }
  return set;
}

}  // namespace freqforest
