#include "spectral.hpp"

#include <algorithm>

namespace scatlite::detail {

void load_real(std::span<const double> in, std::span<Complex> out) {
  std::transform(in.begin(), in.end(), out.begin(), [](double v) { return Complex(v, 0.0); });
}

void inverse_normalized(const fft::Plan2d& plan, std::span<Complex> data) {
  plan.inverse(data);
  const double inv = 1.0 / static_cast<double>(data.size());
  for (auto& z : data) z *= inv;
}

void fold_low_pass(std::span<const Complex> spec, const ComplexSpectrum& phi, std::size_t m, std::span<Complex> small) {
  const std::size_t n = phi.side();
  const std::size_t l = n / m;
  std::fill(small.begin(), small.end(), Complex{});
  const auto pv = phi.values();
  // n = l * m, so each grid row splits into l contiguous runs of length m.
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    Complex* dst = small.data() + (k1 % m) * m;
    const Complex* s = spec.data() + k1 * n;
    const Complex* p = pv.data() + k1 * n;
    for (std::size_t b = 0; b < l; ++b) {
      for (std::size_t i = 0; i < m; ++i) dst[i] += s[b * m + i] * p[b * m + i].real();
    }
  }
  const double inv = 1.0 / static_cast<double>(l * l);
  for (auto& z : small) z *= inv;
}

void small_to_real(std::span<Complex> small, std::size_t m, std::span<double> out) {
  inverse_normalized(fft::Plan2d::get(m), small);
  std::transform(small.begin(), small.end(), out.begin(), [](const Complex& z) { return z.real(); });
}

void lift_low_pass(std::span<const double> g, const ComplexSpectrum& phi, std::size_t m, std::span<Complex> small,
                   std::span<Complex> full, bool accumulate) {
  const std::size_t n = phi.side();
  const std::size_t l = n / m;
  load_real(g, small);
  fft::Plan2d::get(m).forward(small);
  std::vector<double> mirrored(n);
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    const Complex* src = small.data() + (k1 % m) * m;
    const Complex* prow = phi.values().data() + fft::mirror_index(k1, n) * n;
    mirrored[0] = prow[0].real();
    for (std::size_t k2 = 1; k2 < n; ++k2) mirrored[k2] = prow[n - k2].real();
    Complex* dst = full.data() + k1 * n;
    for (std::size_t b = 0; b < l; ++b) {
      for (std::size_t i = 0; i < m; ++i) {
        const Complex v = src[i] * mirrored[b * m + i];
        if (accumulate) {
          dst[b * m + i] += v;
        } else {
          dst[b * m + i] = v;
        }
      }
    }
  }
}

}  // namespace scatlite::detail
