#include "scatlite/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scatlite/error.hpp"
#include "scatlite/transform.hpp"
#include "spectral.hpp"

namespace scatlite {
namespace {

constexpr double kPi = std::numbers::pi;

// exp(-w^T Sigma w) e^{-i w.(N/2, N/2)} on the centred grid.
ComplexBuffer blob_spectrum(const BlobSpec& spec) {
  const std::size_t n = spec.grid_size;
  ComplexBuffer s(n * n);
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      const double w1 = fft::frequency(k1, n);
      const double w2 = fft::frequency(k2, n);
      const double sign = ((k1 + k2) % 2 == 0) ? 1.0 : -1.0;
      s[k1 * n + k2] = sign * std::exp(-spec.sigma.quadratic(w1, w2));
    }
  }
  return s;
}

double wrap_to_pi(double v) {
  double r = std::fmod(v + kPi, 2.0 * kPi);
  if (r < 0) r += 2.0 * kPi;
  return r - kPi;
}

}  // namespace

Sym2 Sym2::from_matrix(const std::array<std::array<double, 2>, 2>& m) {
  if (std::abs(m[0][1] - m[1][0]) > 1e-12) throw ConfigError("Sigma must be symmetric");
  return {m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]};
}

std::array<double, 2> Sym2::eigenvalues() const {
  const double mean = 0.5 * (a + c);
  const double r = std::hypot(0.5 * (a - c), b);
  return {mean - r, mean + r};
}

Sym2 Sym2::rotated(double angle) const {
  const double co = std::cos(angle);
  const double si = std::sin(angle);
  // R S R^T with R = [[co, -si], [si, co]]
  const double ra = co * co * a - 2.0 * co * si * b + si * si * c;
  const double rb = co * si * (a - c) + (co * co - si * si) * b;
  const double rc = si * si * a + 2.0 * co * si * b + co * co * c;
  return {ra, rb, rc};
}

void BlobSpec::validate() const {
  if (grid_size < 2) throw ConfigError("blob grid size must be at least 2");
  if (!std::isfinite(sigma.a) || !std::isfinite(sigma.b) || !std::isfinite(sigma.c)) {
    throw ConfigError("Sigma has non-finite entries");
  }
  const auto ev = sigma.eigenvalues();
  if (ev[0] < -1e-12 * std::max(1.0, std::abs(ev[1]))) throw ConfigError("Sigma must be positive semidefinite");
}

BlobSignal blob_signal(const BlobSpec& spec) {
  spec.validate();
  const std::size_t n = spec.grid_size;
  auto s = blob_spectrum(spec);
  detail::inverse_normalized(fft::Plan2d::get(n), s);

  BlobSignal out;
  out.image = ImageTensor(1, n, n);
  auto plane = out.image.channel(0);
  double peak = 0.0;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    plane[i] = s[i].real();
    peak = std::max(peak, plane[i]);
  }
  for (auto& v : plane) v /= peak;

  double edge = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    edge = std::max({edge, std::abs(plane[i]), std::abs(plane[i * n])});
  }
  out.aliased = edge > 0.01;
  const auto ev = spec.sigma.eigenvalues();
  out.degenerate = ev[0] <= 1e-12 * std::max(1.0, ev[1]);
  return out;
}

ScatteringCoeffs analytic_blob_scatter(const BlobSpec& spec, const FilterBank& bank) {
  spec.validate();
  const auto& cfg = bank.config();
  if (cfg.family != WaveletFamily::Gabor) {
    throw ConfigError("analytic blob scattering requires a Gabor bank: the closed form relies on pure Gaussian "
                      "envelopes, which the Morlet correction breaks");
  }
  const std::size_t n = cfg.grid_size;
  if (spec.grid_size != n) throw ShapeError("blob grid does not match the filter bank");
  const std::size_t m = cfg.output_side();
  const auto blob = blob_spectrum(spec);

  ScatteringCoeffs out(1, cfg.paths(), m, bank.hash() + "+analytic");
  ComplexBuffer work(n * n);
  ComplexBuffer small(m * m);

  detail::fold_low_pass(blob, bank.low_pass(), m, small);
  detail::small_to_real(small, m, out.map(0));

  const int periods = 2;
  const double two_sigma2 = 2.0 * cfg.sigma0 * cfg.sigma0;
  for (std::size_t j = 0; j < cfg.scale_j; ++j) {
    const double dilation = std::ldexp(1.0, static_cast<int>(j));
    for (std::size_t theta = 0; theta < cfg.num_angles; ++theta) {
      const double t = bank.angle(theta);
      const double co = std::cos(t);
      const double si = std::sin(t);
      // |psi_{j,theta}|^(w) ~ exp(-2 sigma0^2 |D 2^j r_theta w|^2), D = diag(1, 1/s)
      for (std::size_t k1 = 0; k1 < n; ++k1) {
        for (std::size_t k2 = 0; k2 < n; ++k2) {
          double env = 0.0;
          for (int p = -periods; p <= periods; ++p) {
            const double a = fft::frequency(k1, n) + 2.0 * kPi * p;
            for (int q = -periods; q <= periods; ++q) {
              const double b = fft::frequency(k2, n) + 2.0 * kPi * q;
              const double v1 = dilation * (co * a - si * b);
              const double v2 = dilation * (si * a + co * b) / cfg.slant;
              env += std::exp(-two_sigma2 * (v1 * v1 + v2 * v2));
            }
          }
          work[k1 * n + k2] = blob[k1 * n + k2] * env;
        }
      }
      detail::fold_low_pass(work, bank.low_pass(), m, small);
      detail::small_to_real(small, m, out.map(1 + j * cfg.num_angles + theta));
    }
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("cosine similarity of a zero vector");
  return dot(a, b) / (na * nb);
}

std::vector<double> channel_cosine_similarity(const ScatteringCoeffs& a, const ScatteringCoeffs& b) {
  if (!a.same_shape(b)) throw ShapeError("coefficient shapes differ");
  std::vector<double> out(a.channels());
  for (std::size_t ch = 0; ch < a.channels(); ++ch) out[ch] = cosine_similarity(a.map(ch), b.map(ch));
  return out;
}

StabilityReport translation_bound_check(const ImageTensor& x, std::array<double, 2> a, const FilterBank& bank,
                                        std::size_t j, std::size_t theta, double tail_eps) {
  const auto& cfg = bank.config();
  const std::size_t n = cfg.grid_size;
  if (x.height() != n || x.width() != n) throw ShapeError("image does not match the filter bank grid");
  if (j >= cfg.scale_j || theta >= cfg.num_angles) throw ConfigError("filter index out of range");
  if (!(tail_eps > 0.0)) throw ConfigError("tail_eps must be positive");
  require_finite(x);

  const auto& filter = bank.band_pass(j, theta);
  double peak = 0.0;
  for (const auto& z : filter.values()) peak = std::max(peak, std::abs(z));
  if (!(peak > 0.0)) throw NumericError("filter is identically zero");

  const auto c = bank.center(j, theta);
  // Frequencies on the window c + [-pi, pi)^2.
  std::vector<double> w1(n), w2(n);
  for (std::size_t k = 0; k < n; ++k) {
    w1[k] = c[0] + wrap_to_pi(fft::frequency(k, n) - c[0]);
    w2[k] = c[1] + wrap_to_pi(fft::frequency(k, n) - c[1]);
  }

  StabilityReport r;
  r.a = a;
  r.j = j;
  r.theta = theta;
  r.tail_eps = tail_eps;
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      if (std::abs(filter.at(k1, k2)) / peak > tail_eps) {
        r.eta0 = std::max(r.eta0, std::hypot(w1[k1] - c[0], w2[k2] - c[1]));
      }
    }
  }
  if (r.eta0 > kPi) {
    throw NumericError("tail_eps = " + std::to_string(tail_eps) + " is too small for psi_{" + std::to_string(j) +
                       "," + std::to_string(theta) + "}: the spectrum exceeds it beyond the Nyquist radius");
  }
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      if (std::hypot(w1[k1] - c[0], w2[k2] - c[1]) > r.eta0) {
        r.epsilon = std::max(r.epsilon, std::abs(filter.at(k1, k2)) / peak);
      }
    }
  }

  // lhs evaluated in space: translated response minus phase-corrected response.
  const auto& plan = fft::Plan2d::get(n);
  const Complex correction = std::polar(1.0, -(c[0] * a[0] + c[1] * a[1]));
  double lhs2 = 0.0;
  for (std::size_t ch = 0; ch < x.channels(); ++ch) {
    const auto spec = spectrum_of(x.channel(ch), n);
    ComplexBuffer shifted(n * n);
    ComplexBuffer plain(n * n);
    for (std::size_t k1 = 0; k1 < n; ++k1) {
      for (std::size_t k2 = 0; k2 < n; ++k2) {
        const std::size_t i = k1 * n + k2;
        const Complex v = spec[i] * filter.at(k1, k2) / peak;
        plain[i] = v;
        shifted[i] = v * std::polar(1.0, -(w1[k1] * a[0] + w2[k2] * a[1]));
      }
    }
    detail::inverse_normalized(plan, shifted);
    detail::inverse_normalized(plan, plain);
    for (std::size_t i = 0; i < shifted.size(); ++i) lhs2 += std::norm(shifted[i] - correction * plain[i]);
  }
  r.lhs = std::sqrt(lhs2);
  r.x_norm = l2_norm(x.values());
  const double an = std::hypot(a[0], a[1]);
  r.rhs = r.x_norm * std::sqrt(4.0 * r.epsilon * r.epsilon + an * an * r.eta0 * r.eta0);
  return r;
}

}  // namespace scatlite
