#include "scatlite/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>

#include "scatlite/error.hpp"
#include "scatlite/io.hpp"

namespace scatlite {
namespace {

constexpr double kPi = std::numbers::pi;

// kappa(w) = exp(-2 sigma0^2 |w|^2)
double kappa(double w1, double w2, double sigma0) {
  return std::exp(-2.0 * sigma0 * sigma0 * (w1 * w1 + w2 * w2));
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool in_disc(double w1, double w2) { return w1 * w1 + w2 * w2 < kPi * kPi; }

}  // namespace

std::string to_string(WaveletFamily f) { return f == WaveletFamily::Gabor ? "gabor" : "morlet"; }

WaveletFamily parse_family(const std::string& name) {
  if (name == "gabor") return WaveletFamily::Gabor;
  if (name == "morlet") return WaveletFamily::Morlet;
  throw ConfigError("unknown wavelet family '" + name + "' (expected gabor or morlet)");
}

std::string to_string(LpConvention c) { return c == LpConvention::Analytic ? "analytic" : "real-signal"; }

void FilterBankConfig::validate() const {
  if (grid_size == 0) throw ConfigError("grid_size must be positive");
  if (scale_j < 1) throw ConfigError("scale J must be at least 1");
  if (scale_j >= 31) throw ConfigError("scale J too large");
  if (num_angles < 1) throw ConfigError("num_angles must be at least 1");
  if (grid_size % subsampling() != 0) {
    throw ConfigError("grid size " + std::to_string(grid_size) + " is not divisible by 2^J = " +
                      std::to_string(subsampling()));
  }
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ConfigError("sigma0 must be positive");
  if (!(slant > 0.0) || !std::isfinite(slant)) throw ConfigError("slant must be positive");
  if (!(xi0 > 0.0)) throw ConfigError("xi0 must be positive");
  if (!(xi0 < kPi)) throw ConfigError("xi0 must lie inside the Nyquist circle (xi0 < pi)");
}

std::string FilterBankConfig::hash() const {
  std::string s = "scatlite-bank/1";
  s += ";N=" + std::to_string(grid_size);
  s += ";J=" + std::to_string(scale_j);
  s += ";L=" + std::to_string(num_angles);
  s += ";sigma0=" + format_double(sigma0);
  s += ";slant=" + format_double(slant);
  s += ";xi0=" + format_double(xi0);
  s += ";family=" + to_string(family);
  return fnv1a_hex(s);
}

bool ComplexSpectrum::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

FilterBank::FilterBank(FilterBankConfig config, std::vector<ComplexSpectrum> band_pass, ComplexSpectrum low_pass,
                       double band_pass_scale)
    : config_(std::move(config)),
      band_pass_(std::move(band_pass)),
      low_pass_(std::move(low_pass)),
      band_pass_scale_(band_pass_scale) {
  config_.validate();
  const auto n = config_.grid_size;
  if (low_pass_.side() != n) throw ShapeError("low-pass spectrum does not match grid size");
  if (!low_pass_.all_finite()) throw NumericError("low-pass spectrum has non-finite entries");
  if (std::any_of(low_pass_.values().begin(), low_pass_.values().end(),
                  [](const Complex& z) { return z.imag() != 0.0; })) {
    throw ConfigError("low-pass spectrum must be real");
  }
  for (const auto& s : band_pass_) {
    if (s.side() != n) throw ShapeError("band-pass spectrum does not match grid size");
    if (!s.all_finite()) throw NumericError("band-pass spectrum has non-finite entries");
  }
  if (!band_pass_.empty() && band_pass_.size() != config_.band_pass_count()) {
    throw ShapeError("expected " + std::to_string(config_.band_pass_count()) + " band-pass filters, got " +
                     std::to_string(band_pass_.size()));
  }
  hash_ = fnv1a_hex(config_.hash() + ";bands=" + std::to_string(band_pass_.size()) +
                    ";scale=" + format_double(band_pass_scale_) + ";low0=" + format_double(low_pass_.at(0, 0).real()));
}

double FilterBank::angle(std::size_t theta) const {
  return kPi * static_cast<double>(theta) / static_cast<double>(config_.num_angles);
}

std::array<double, 2> FilterBank::center(std::size_t j, std::size_t theta) const {
  const double r = config_.xi0 / std::ldexp(1.0, static_cast<int>(j));
  const double t = angle(theta);
  return {r * std::cos(t), -r * std::sin(t)};
}

FilterBank FilterBank::scaled(double amplitude) const {
  auto scale = [amplitude](ComplexSpectrum s) {
    for (auto& z : s.values()) z *= amplitude;
    return s;
  };
  std::vector<ComplexSpectrum> bands;
  bands.reserve(band_pass_.size());
  for (const auto& b : band_pass_) bands.push_back(scale(b));
  return FilterBank(config_, std::move(bands), scale(low_pass_), band_pass_scale_ * amplitude);
}

ComplexSpectrum mother_spectrum(const FilterBankConfig& config, std::size_t j, std::size_t theta, int periods) {
  config.validate();
  const std::size_t n = config.grid_size;
  const double dilation = std::ldexp(1.0, static_cast<int>(j));
  const double t = kPi * static_cast<double>(theta) / static_cast<double>(config.num_angles);
  const double c = std::cos(t);
  const double s = std::sin(t);
  const bool morlet = config.family == WaveletFamily::Morlet;

  ComplexSpectrum gabor(n);
  ComplexSpectrum envelope(n);
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      double g = 0.0;
      double e = 0.0;
      for (int p = -periods; p <= periods; ++p) {
        const double a = fft::frequency(k1, n) + 2.0 * kPi * p;
        for (int q = -periods; q <= periods; ++q) {
          const double b = fft::frequency(k2, n) + 2.0 * kPi * q;
          // mother evaluated at 2^j r_theta omega
          const double v1 = dilation * (c * a - s * b);
          const double v2 = dilation * (s * a + c * b) / config.slant;
          g += kappa(v1 - config.xi0, v2, config.sigma0);
          if (morlet) e += kappa(v1, v2, config.sigma0);
        }
      }
      gabor.at(k1, k2) = g;
      envelope.at(k1, k2) = e;
    }
  }
  if (morlet) {
    // beta makes the spectrum vanish at omega = 0 exactly on the grid.
    const double beta = gabor.at(0, 0).real() / envelope.at(0, 0).real();
    auto gv = gabor.values();
    auto ev = envelope.values();
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] -= beta * ev[i];
    gabor.at(0, 0) = 0.0;
  }
  return gabor;
}

ComplexSpectrum low_pass_spectrum(const FilterBankConfig& config, int periods) {
  config.validate();
  const std::size_t n = config.grid_size;
  const double dilation = static_cast<double>(config.subsampling());
  ComplexSpectrum phi(n);
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      double v = 0.0;
      for (int p = -periods; p <= periods; ++p) {
        const double a = dilation * (fft::frequency(k1, n) + 2.0 * kPi * p);
        for (int q = -periods; q <= periods; ++q) {
          const double b = dilation * (fft::frequency(k2, n) + 2.0 * kPi * q);
          v += kappa(a, b, config.sigma0);
        }
      }
      phi.at(k1, k2) = v;
    }
  }
  const double dc = phi.at(0, 0).real();
  for (auto& z : phi.values()) z /= dc;
  return phi;
}

namespace {

// Per-grid-point energies of the band-pass part and the low-pass part.
struct EnergyMaps {
  std::vector<double> band;
  std::vector<double> low;
};

EnergyMaps energy_maps(const std::vector<const ComplexSpectrum*>& bands, const ComplexSpectrum& low,
                       LpConvention convention) {
  const std::size_t n = low.side();
  EnergyMaps m{std::vector<double>(n * n, 0.0), std::vector<double>(n * n, 0.0)};
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      const std::size_t i = k1 * n + k2;
      m.low[i] = std::norm(low.at(k1, k2));
      double b = 0.0;
      for (const auto* f : bands) {
        b += std::norm(f->at(k1, k2));
        if (convention == LpConvention::RealSignal) {
          b += std::norm(f->at(fft::mirror_index(k1, n), fft::mirror_index(k2, n)));
        }
      }
      m.band[i] = b;
    }
  }
  return m;
}

// Deviation from 1 of low + t * band over the disc.
double deviation(const EnergyMaps& m, const std::vector<std::size_t>& disc, double t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto i : disc) {
    const double v = m.low[i] + t * m.band[i];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return std::max(std::abs(1.0 - lo), std::abs(1.0 - hi));
}

std::vector<std::size_t> disc_indices(std::size_t n) {
  std::vector<std::size_t> idx;
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      if (in_disc(fft::frequency(k1, n), fft::frequency(k2, n))) idx.push_back(k1 * n + k2);
    }
  }
  return idx;
}

}  // namespace

FilterBank build_filter_bank(const FilterBankConfig& config, const BuildOptions& options) {
  config.validate();
  std::vector<ComplexSpectrum> bands;
  bands.reserve(config.band_pass_count());
  for (std::size_t j = 0; j < config.scale_j; ++j) {
    for (std::size_t theta = 0; theta < config.num_angles; ++theta) {
      bands.push_back(mother_spectrum(config, j, theta, options.periods));
    }
  }
  ComplexSpectrum low = low_pass_spectrum(config, options.periods);

  double scale = 1.0;
  if (options.normalize) {
    std::vector<const ComplexSpectrum*> ptrs;
    for (const auto& b : bands) ptrs.push_back(&b);
    const auto maps = energy_maps(ptrs, low, LpConvention::RealSignal);
    const auto disc = disc_indices(config.grid_size);
    double band_max = 0.0;
    for (auto i : disc) band_max = std::max(band_max, maps.band[i]);
    if (band_max > 0.0) {
      // The deviation is convex in t = scale^2; golden-section search.
      double a = 0.0;
      double b = 4.0 / band_max;
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = b - g * (b - a);
      double x2 = a + g * (b - a);
      double f1 = deviation(maps, disc, x1);
      double f2 = deviation(maps, disc, x2);
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        if (f1 <= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - g * (b - a);
          f1 = deviation(maps, disc, x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + g * (b - a);
          f2 = deviation(maps, disc, x2);
        }
      }
      scale = std::sqrt(0.5 * (a + b));
      for (auto& band : bands) {
        for (auto& z : band.values()) z *= scale;
      }
    }
  }
  return FilterBank(config, std::move(bands), std::move(low), scale);
}

std::vector<double> littlewood_paley_sum(const FilterBank& bank, LpConvention convention) {
  std::vector<const ComplexSpectrum*> ptrs;
  for (std::size_t i = 0; i < bank.band_pass_count(); ++i) ptrs.push_back(&bank.band_pass(i));
  auto maps = energy_maps(ptrs, bank.low_pass(), convention);
  for (std::size_t i = 0; i < maps.low.size(); ++i) maps.low[i] += maps.band[i];
  return maps.low;
}

LittlewoodPaleyReport littlewood_paley(const FilterBank& bank, LpConvention convention) {
  const auto sum = littlewood_paley_sum(bank, convention);
  LittlewoodPaleyReport r;
  r.convention = convention;
  r.min_energy = std::numeric_limits<double>::infinity();
  r.max_energy = -r.min_energy;
  for (auto i : disc_indices(bank.side())) {
    r.min_energy = std::min(r.min_energy, sum[i]);
    r.max_energy = std::max(r.max_energy, sum[i]);
    ++r.samples;
  }
  r.epsilon0 = std::max(std::abs(1.0 - r.min_energy), std::abs(1.0 - r.max_energy));
  return r;
}

void dump_filters(const FilterBank& bank, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const std::size_t n = bank.side();
  const std::size_t count = bank.band_pass_count() + 1;

  auto heatmap = [n](const ComplexSpectrum& s) {
    ImageTensor img(1, n, n);
    double peak = 0.0;
    for (const auto& z : s.values()) peak = std::max(peak, std::abs(z));
    const double inv = peak > 0.0 ? 1.0 / peak : 0.0;
    for (std::size_t k1 = 0; k1 < n; ++k1) {
      for (std::size_t k2 = 0; k2 < n; ++k2) {
        img.at(0, (k1 + n / 2) % n, (k2 + n / 2) % n) = std::abs(s.at(k1, k2)) * inv;
      }
    }
    return img;
  };

  std::vector<double> raw;
  raw.reserve(count * n * n * 2);
  auto append = [&raw](const ComplexSpectrum& s) {
    for (const auto& z : s.values()) {
      raw.push_back(z.real());
      raw.push_back(z.imag());
    }
  };

  const auto& cfg = bank.config();
  for (std::size_t j = 0; j < cfg.scale_j && bank.band_pass_count() > 0; ++j) {
    for (std::size_t t = 0; t < cfg.num_angles; ++t) {
      const auto& s = bank.band_pass(j, t);
      save_png(heatmap(s), directory / ("psi_j" + std::to_string(j) + "_theta" + std::to_string(t) + ".png"));
      append(s);
    }
  }
  save_png(heatmap(bank.low_pass()), directory / ("phi_J" + std::to_string(cfg.scale_j) + ".png"));
  append(bank.low_pass());

  const std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(count), static_cast<std::uint32_t>(n),
                                        static_cast<std::uint32_t>(n), 2u};
  save_tensor(directory / "spectra.sct", raw, dims, TensorDType::Float64);
}

}  // namespace scatlite
