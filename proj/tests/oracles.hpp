#pragma once

// Independent reference implementations used only by the tests. None of them
// share code paths with the library routines they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "freqforest/flow.hpp"
#include "freqforest/forest.hpp"

namespace oracle {

// O(L^2) direct summation in long double.
inline std::vector<double> direct_power_spectrum(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      // reduce k*t mod n before forming the angle
      const long double angle = -2.0L * std::numbers::pi_v<long double> *
                                static_cast<long double>((k * t) % n) / static_cast<long double>(n);
      re += x[t] * std::cos(angle);
      im += x[t] * std::sin(angle);
    }
    p[k] = static_cast<double>(re * re + im * im);
  }
  return p;
}

struct PixelCounts {
  std::array<std::array<std::size_t, 6>, 5> count{};
  std::array<std::array<double, 6>, 5> mag_sum{};
  std::array<std::size_t, 5> nonzero{};
  double box_mag_sum = 0.0;
  std::size_t box_pixels = 0;
};

// Bin index from the arc definition, written independently of bin_direction:
// walk the six arc intervals explicitly.
inline int arc_bin(double u, double v) {
  double deg = std::atan2(-v, u) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  if (deg >= 330.0 || deg < 30.0) return 0;
  if (deg < 90.0) return 1;
  if (deg < 150.0) return 2;
  if (deg < 210.0) return 3;
  if (deg < 270.0) return 4;
  return 5;
}

// Visits every pixel of the field and asks each rectangle whether it owns
// the pixel under the rounded-edge rule.
inline PixelCounts enumerate_flow(const freqforest::FlowField& field, const freqforest::SubregionLayout& layout) {
  PixelCounts out;
  for (std::size_t py = 0; py < field.height; ++py) {
    for (std::size_t px = 0; px < field.width; ++px) {
      for (std::size_t r = 0; r < 5; ++r) {
        const auto& rect = layout.rects[r];
        const double x0 = std::round(rect.x), x1 = std::round(rect.x + rect.w);
        const double y0 = std::round(rect.y), y1 = std::round(rect.y + rect.h);
        const double fx = static_cast<double>(px), fy = static_cast<double>(py);
        if (!(fx >= x0 && fx < x1 && fy >= y0 && fy < y1)) continue;
        const auto& f = field.at(px, py);
        const double mag = std::sqrt(f.u * f.u + f.v * f.v);
        ++out.box_pixels;
        out.box_mag_sum += mag;
        if (f.u == 0.0 && f.v == 0.0) continue;
        const int b = arc_bin(f.u, f.v);
        ++out.count[r][b];
        out.mag_sum[r][b] += mag;
        ++out.nonzero[r];
      }
    }
  }
  return out;
}

// Exact k nearest items among the given leaf members (stable on ties).
inline std::vector<freqforest::Neighbor> leaf_knn(const freqforest::FrequencyTree& tree, std::size_t leaf,
                                                  const std::vector<double>& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t idx : tree.nodes()[leaf].items) {
    const auto& v = tree.items()[idx].vector;
    long double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (static_cast<long double>(v[i]) - q[i]) * (v[i] - q[i]);
    d.emplace_back(static_cast<double>(std::sqrt(s)), idx);
  }
  std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<freqforest::Neighbor> out;
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) {
    const auto& it = tree.items()[d[i].second];
    out.push_back({it.clip_id, it.label, d[i].first});
  }
  return out;
}

}  // namespace oracle
