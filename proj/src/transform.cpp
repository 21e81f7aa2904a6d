#include "scatlite/transform.hpp"

#include <cmath>
#include <numbers>

#include "scatlite/error.hpp"
#include "scatlite/parallel.hpp"
#include "spectral.hpp"

namespace scatlite {

std::size_t coefficient_count(const FilterBankConfig& config) {
  config.validate();
  const std::size_t m = config.output_side();
  return config.paths() * m * m;
}

std::size_t padded_grid_size(std::size_t n, std::size_t scale_j) { return n + 2 * (std::size_t{1} << scale_j); }

void require_finite(const ImageTensor& x) {
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw NumericError("input signal contains NaN or Inf");
  }
}

ComplexBuffer spectrum_of(std::span<const double> plane, std::size_t n) {
  if (plane.size() != n * n) throw ShapeError("plane size does not match grid");
  ComplexBuffer buf(n * n);
  detail::load_real(plane, buf);
  fft::Plan2d::get(n).forward(buf);
  return buf;
}

ComplexBuffer convolve(std::span<const double> plane, const ComplexSpectrum& filter) {
  const std::size_t n = filter.side();
  auto buf = spectrum_of(plane, n);
  const auto f = filter.values();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= f[i];
  detail::inverse_normalized(fft::Plan2d::get(n), buf);
  return buf;
}

namespace {

ScatteringCoeffs scatter_periodic(const ImageTensor& x, const FilterBank& bank, std::size_t threads) {
  const auto& cfg = bank.config();
  const std::size_t n = cfg.grid_size;
  if (x.height() != n || x.width() != n) {
    throw ShapeError("image is " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                     " but the filter bank expects " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (x.channels() == 0) throw ShapeError("image has no channels");
  if (bank.band_pass_count() != cfg.band_pass_count()) throw ShapeError("filter bank has no band-pass filters");
  require_finite(x);

  const std::size_t m = cfg.output_side();
  const std::size_t paths = cfg.paths();
  const auto& plan = fft::Plan2d::get(n);
  ScatteringCoeffs out(x.channels(), paths, m, bank.hash());

  std::vector<ComplexBuffer> spectra(x.channels());
  parallel_for(x.channels(), threads, [&](std::size_t c) { spectra[c] = spectrum_of(x.channel(c), n); });

  parallel_for(x.channels() * paths, threads, [&](std::size_t task) {
    const std::size_t c = task / paths;
    const std::size_t path = task % paths;
    const auto& spec = spectra[c];
    ComplexBuffer small(m * m);
    auto dst = out.map(out.channel_index(c, path));
    if (path == 0) {
      detail::fold_low_pass(spec, bank.low_pass(), m, small);
      detail::small_to_real(small, m, dst);
      return;
    }
    const auto psi = bank.band_pass(path - 1).values();
    ComplexBuffer work(n * n);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = spec[i] * psi[i];
    detail::inverse_normalized(plan, work);
    for (auto& z : work) z = Complex(std::sqrt(std::norm(z)), 0.0);
    plan.forward(work);
    detail::fold_low_pass(work, bank.low_pass(), m, small);
    detail::small_to_real(small, m, dst);
  });
  return out;
}

}  // namespace

ScatteringCoeffs scatter(const ImageTensor& x, const FilterBank& bank, Boundary boundary, std::size_t threads) {
  if (boundary == Boundary::Periodic) return scatter_periodic(x, bank, threads);

  const auto& cfg = bank.config();
  const std::size_t pad = cfg.subsampling();
  if (x.height() + 2 * pad != cfg.grid_size || x.width() + 2 * pad != cfg.grid_size) {
    throw ShapeError("reflect boundary needs a bank of side " + std::to_string(padded_grid_size(x.height(), cfg.scale_j)));
  }
  const auto padded = scatter_periodic(reflect_pad(x, pad), bank, threads);
  const std::size_t m = padded.side() - 2;
  ScatteringCoeffs out(padded.input_channels(), padded.per_input(), m, padded.config_hash() + "+reflect");
  for (std::size_t ch = 0; ch < padded.channels(); ++ch) {
    const auto src = padded.map(ch);
    auto dst = out.map(ch);
    for (std::size_t y = 0; y < m; ++y) {
      for (std::size_t xx = 0; xx < m; ++xx) dst[y * m + xx] = src[(y + 1) * (m + 2) + xx + 1];
    }
  }
  return out;
}

ImageTensor translate(const ImageTensor& x, std::array<long, 2> a) {
  ImageTensor out(x.channels(), x.height(), x.width());
  const long h = static_cast<long>(x.height());
  const long w = static_cast<long>(x.width());
  if (h == 0 || w == 0) return out;
  const long dy = ((a[0] % h) + h) % h;
  const long dx = ((a[1] % w) + w) % w;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (long y = 0; y < h; ++y) {
      for (long xx = 0; xx < w; ++xx) {
        out.at(c, static_cast<std::size_t>((y + dy) % h), static_cast<std::size_t>((xx + dx) % w)) =
            x.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx));
      }
    }
  }
  return out;
}

ImageTensor translate_spectral(const ImageTensor& x, std::array<double, 2> a) {
  if (x.height() != x.width()) throw ShapeError("spectral translation needs a square grid");
  const std::size_t n = x.height();
  const auto& plan = fft::Plan2d::get(n);
  ImageTensor out(x.channels(), n, n);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    auto spec = spectrum_of(x.channel(c), n);
    for (std::size_t k1 = 0; k1 < n; ++k1) {
      for (std::size_t k2 = 0; k2 < n; ++k2) {
        const double phase = -(fft::frequency(k1, n) * a[0] + fft::frequency(k2, n) * a[1]);
        spec[k1 * n + k2] *= std::polar(1.0, phase);
      }
    }
    detail::inverse_normalized(plan, spec);
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = spec[i].real();
  }
  return out;
}

ImageTensor reflect_pad(const ImageTensor& x, std::size_t pad) {
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  if (pad >= h || pad >= w) throw ShapeError("reflect padding wider than the image");
  auto reflect = [](long i, long size) {
    if (i < 0) return -i;
    if (i >= size) return 2 * (size - 1) - i;
    return i;
  };
  ImageTensor out(x.channels(), h + 2 * pad, w + 2 * pad);
  const long p = static_cast<long>(pad);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < out.height(); ++y) {
      const auto sy = static_cast<std::size_t>(reflect(static_cast<long>(y) - p, static_cast<long>(h)));
      for (std::size_t xx = 0; xx < out.width(); ++xx) {
        const auto sx = static_cast<std::size_t>(reflect(static_cast<long>(xx) - p, static_cast<long>(w)));
        out.at(c, y, xx) = x.at(c, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace scatlite
