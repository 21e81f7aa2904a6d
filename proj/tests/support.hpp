#pragma once

// Helpers shared by the unit and acceptance tests: random signals and
// brute-force reference implementations that avoid the FFT path entirely.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "scatlite/filterbank.hpp"
#include "scatlite/tensor.hpp"

namespace scatlite::testing {

inline std::filesystem::path data_dir() { return SCATLITE_TEST_DATA_DIR; }

inline ImageTensor random_image(std::size_t channels, std::size_t n, std::mt19937_64& rng, double lo = 0.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ImageTensor x(channels, n, n);
  for (auto& v : x.values()) v = u(rng);
  return x;
}

inline ImageTensor random_normal(std::size_t channels, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ImageTensor x(channels, n, n);
  for (auto& v : x.values()) v = g(rng);
  return x;
}

// Spatial samples of a filter: psi(u) = (1/N^2) sum_k psi_hat(k) e^{+2 pi i k.u / N}, by direct summation.
inline std::vector<std::complex<double>> spatial_filter(const ComplexSpectrum& s) {
  const std::size_t n = s.side();
  const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
  std::vector<std::complex<double>> out(n * n);
  for (std::size_t u1 = 0; u1 < n; ++u1) {
    for (std::size_t u2 = 0; u2 < n; ++u2) {
      std::complex<double> acc;
      for (std::size_t k1 = 0; k1 < n; ++k1) {
        for (std::size_t k2 = 0; k2 < n; ++k2) {
          acc += s.at(k1, k2) * std::polar(1.0, w * static_cast<double>((k1 * u1 + k2 * u2) % n));
        }
      }
      out[u1 * n + u2] = acc / static_cast<double>(n * n);
    }
  }
  return out;
}

// (x * h)(u) = sum_v x(v) h(u - v) on the periodic N x N grid, O(N^4).
inline std::vector<std::complex<double>> circular_convolve_direct(std::span<const double> x,
                                                                  const std::vector<std::complex<double>>& h,
                                                                  std::size_t n) {
  std::vector<std::complex<double>> out(n * n);
  for (std::size_t u1 = 0; u1 < n; ++u1) {
    for (std::size_t u2 = 0; u2 < n; ++u2) {
      std::complex<double> acc;
      for (std::size_t v1 = 0; v1 < n; ++v1) {
        for (std::size_t v2 = 0; v2 < n; ++v2) {
          acc += x[v1 * n + v2] * h[((u1 + n - v1) % n) * n + (u2 + n - v2) % n];
        }
      }
      out[u1 * n + u2] = acc;
    }
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double relative_diff(std::span<const double> a, std::span<const double> b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace scatlite::testing
