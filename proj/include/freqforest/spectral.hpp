#pragma once

// Frequency-domain features of scalar time series: smoothing, segment
// recycling, the one-sided power spectrum and fixed-length spectral features.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freqforest/errors.hpp"

namespace freqforest {

using TimeSeries = std::vector<double>;

// P_k = |X_k|^2 for k = 0 .. floor(L/2).
using PowerSpectrum = std::vector<double>;

inline constexpr std::size_t kDefaultComponents = 25;
inline constexpr std::size_t kDefaultSmoothingWindow = 5;

// A per-frame scalar series tagged with the feature it measures.
struct NamedSeries {
  std::string name;
  TimeSeries values;
};

using SeriesSet = std::vector<NamedSeries>;

struct FrequencyFeature {
  std::string name;
  // P_1 .. P_n; components[k - 1] holds P_k.
  std::vector<double> components;

  std::size_t size() const noexcept { return components.size(); }
};

namespace detail {

inline void require_finite(std::span<const double> series, const char* op) {
  for (double v : series) {
    if (!std::isfinite(v)) throw DomainError(std::string(op) + ": series contains a non-finite value");
  }
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform, n must be a power of two.
// inverse=true computes the unscaled inverse.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles evaluated directly; a running product drifts for long inputs.
    std::vector<std::complex<double>> twiddle(half);
    for (std::size_t j = 0; j < half; ++j) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(len);
      twiddle[j] = {std::cos(angle), std::sin(angle)};
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + half] * twiddle[j];
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

// Forward DFT of a real series of any length. Powers of two go straight to
// radix-2; other lengths use Bluestein's chirp-z reformulation.
inline std::vector<std::complex<double>> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (is_power_of_two(n)) {
    std::vector<std::complex<double>> a(x.begin(), x.end());
    fft_radix2(a, false);
    return a;
  }

  // chirp[t] = exp(-i*pi*t^2/n); t^2 is reduced mod 2n in integers so the
  // angle stays small and exact.
  std::vector<std::complex<double>> chirp(n);
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::uint64_t sq = (static_cast<std::uint64_t>(t) * t) % two_n;
    const double angle = -std::numbers::pi * static_cast<double>(sq) / static_cast<double>(n);
    chirp[t] = {std::cos(angle), std::sin(angle)};
  }

  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;

  std::vector<std::complex<double>> a(m), b(m);
  for (std::size_t t = 0; t < n; ++t) a[t] = x[t] * chirp[t];
  b[0] = std::conj(chirp[0]);
  for (std::size_t t = 1; t < n; ++t) {
    b[t] = std::conj(chirp[t]);
    b[m - t] = std::conj(chirp[t]);
  }

  fft_radix2(a, false);
  fft_radix2(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_radix2(a, true);

  std::vector<std::complex<double>> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
  return out;
}

}  // namespace detail

// Centered moving average. Near the ends the window shrinks symmetrically,
// so index i averages [max(0, i-r), min(L-1, i+r)] with r = (window-1)/2.
inline TimeSeries smooth(std::span<const double> series, std::size_t window = kDefaultSmoothingWindow) {
  if (series.empty()) throw DomainError("smooth: empty series");
  if (window == 0 || window % 2 == 0) {
    throw ArgumentError("smooth: window must be a positive odd integer, got " + std::to_string(window));
  }
  const std::size_t n = series.size();
  const std::size_t radius = (window - 1) / 2;
  TimeSeries out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= radius ? i - radius : 0;
    const std::size_t hi = std::min(n - 1, i + radius);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += series[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// Tiles whole copies of a short series until it is at least min_len long.
inline TimeSeries recycle(std::span<const double> series, std::size_t min_len) {
  if (series.empty()) throw DomainError("recycle: empty series");
  const std::size_t n = series.size();
  if (n >= min_len) return TimeSeries(series.begin(), series.end());
  const std::size_t copies = (min_len + n - 1) / n;
  TimeSeries out;
  out.reserve(n * copies);
  for (std::size_t c = 0; c < copies; ++c) out.insert(out.end(), series.begin(), series.end());
  return out;
}

// Unnormalized one-sided power spectrum |X_k|^2, k = 0 .. floor(L/2).
inline PowerSpectrum power_spectrum(std::span<const double> series) {
  if (series.empty()) throw DomainError("power_spectrum: empty series");
  detail::require_finite(series, "power_spectrum");
  const auto coeffs = detail::dft(series);
  PowerSpectrum power(series.size() / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(coeffs[k]);
  return power;
}

// First n non-DC spectrum components (P_1 .. P_n) of the series recycled to
// at least 2n samples.
inline FrequencyFeature frequency_feature(std::span<const double> series, std::size_t n = kDefaultComponents,
                                          std::string name = {}) {
  if (n == 0) throw ArgumentError("frequency_feature: component count must be positive");
  const TimeSeries tiled = recycle(series, 2 * n);
  const PowerSpectrum power = power_spectrum(tiled);
  FrequencyFeature feature;
  feature.name = std::move(name);
  feature.components.assign(power.begin() + 1, power.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  return feature;
}

}  // namespace freqforest
