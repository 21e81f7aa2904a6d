#include "scatlite/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "scatlite/error.hpp"
#include "scatlite/parallel.hpp"
#include "scatlite/transform.hpp"
#include "spectral.hpp"

namespace scatlite {
namespace {

// Below this modulus the derivative of |z| is taken to be zero.
constexpr double kModulusFloor = 1e-12;

void check_image(const ImageTensor& y, const FilterBank& bank) {
  const std::size_t n = bank.side();
  if (y.height() != n || y.width() != n) throw ShapeError("image does not match the filter bank grid");
  if (y.channels() == 0) throw ShapeError("image has no channels");
  if (bank.band_pass_count() != bank.config().band_pass_count()) throw ShapeError("filter bank has no band-pass filters");
}

void check_coeffs(const ScatteringCoeffs& s, const ImageTensor& y, const FilterBank& bank, const char* what) {
  const auto& cfg = bank.config();
  if (s.input_channels() != y.channels() || s.per_input() != cfg.paths() || s.side() != cfg.output_side()) {
    throw ShapeError(std::string(what) + " shape does not match the image and filter bank");
  }
}

// Backward sweep for one input channel.
//
// With `target` set the cotangent is 2 (S y - target) and the squared error is
// returned; otherwise `cotangent` is used as given and 0 is returned. The
// gradient for the channel is written to `grad`.
double channel_backward(std::span<const double> y, const FilterBank& bank, const double* target,
                        const double* cotangent, std::span<double> grad) {
  const auto& cfg = bank.config();
  const std::size_t n = cfg.grid_size;
  const std::size_t m = cfg.output_side();
  const std::size_t mm = m * m;
  const auto& plan = fft::Plan2d::get(n);
  const auto& phi = bank.low_pass();

  const ComplexBuffer spec = spectrum_of(y, n);
  ComplexBuffer accum(n * n);
  ComplexBuffer z(n * n);
  ComplexBuffer work(n * n);
  ComplexBuffer small(mm);
  std::vector<double> s(mm);
  std::vector<double> g(mm);
  double loss = 0.0;

  auto make_cotangent = [&](std::size_t path) {
    if (target) {
      const double* t = target + path * mm;
      for (std::size_t i = 0; i < mm; ++i) {
        const double d = s[i] - t[i];
        loss += d * d;
        g[i] = 2.0 * d;
      }
    } else {
      std::copy(cotangent + path * mm, cotangent + (path + 1) * mm, g.begin());
    }
  };

  // low-pass path
  if (target) {
    detail::fold_low_pass(spec, phi, m, small);
    detail::small_to_real(small, m, s);
  }
  make_cotangent(0);
  detail::lift_low_pass(g, phi, m, small, accum, false);

  for (std::size_t f = 0; f < bank.band_pass_count(); ++f) {
    const auto psi = bank.band_pass(f).values();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = spec[i] * psi[i];
    detail::inverse_normalized(plan, z);
    if (target) {
      for (std::size_t i = 0; i < z.size(); ++i) work[i] = std::sqrt(std::norm(z[i]));
      plan.forward(work);
      detail::fold_low_pass(work, phi, m, small);
      detail::small_to_real(small, m, s);
    }
    make_cotangent(f + 1);

    // d/dU through the subsampled low-pass, then through the modulus.
    detail::lift_low_pass(g, phi, m, small, work, false);
    detail::inverse_normalized(plan, work);
    for (std::size_t i = 0; i < work.size(); ++i) {
      const double r = std::sqrt(std::norm(z[i]));
      work[i] = r < kModulusFloor ? Complex{} : z[i] * (work[i].real() / r);
    }
    plan.forward(work);
    for (std::size_t i = 0; i < work.size(); ++i) accum[i] += work[i] * std::conj(psi[i]);
  }

  detail::inverse_normalized(plan, accum);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = accum[i].real();
  return loss;
}

}  // namespace

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::Zeros:
      return "zeros";
    case InitMode::UniformNoise:
      return "uniform";
    case InitMode::ProvidedImage:
      return "provided";
  }
  return "unknown";
}

InitMode parse_init_mode(const std::string& name) {
  if (name == "zeros") return InitMode::Zeros;
  if (name == "uniform") return InitMode::UniformNoise;
  if (name == "provided") return InitMode::ProvidedImage;
  throw ConfigError("unknown init mode '" + name + "' (expected zeros, uniform or provided)");
}

void ReconstructionConfig::validate() const {
  if (max_iters == 0) throw ConfigError("max_iters must be positive");
  if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
  if (lr_drop_every == 0) throw ConfigError("lr_drop_every must be positive");
  if (!(lr_drop_factor > 0.0 && lr_drop_factor < 1.0)) throw ConfigError("lr_drop_factor must lie in (0, 1)");
  if (!(target_err > 0.0 && target_err < 1.0)) throw ConfigError("target_err must lie in (0, 1)");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("ADAM betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (init == InitMode::ProvidedImage && !initial_image) throw ConfigError("init=provided needs an initial image");
}

double ReconstructionConfig::learning_rate(std::size_t iteration) const {
  return initial_lr * std::pow(lr_drop_factor, static_cast<double>(iteration / lr_drop_every));
}

ImageTensor scatter_vjp(const ImageTensor& y, const FilterBank& bank, const ScatteringCoeffs& cotangent,
                        std::size_t threads) {
  check_image(y, bank);
  check_coeffs(cotangent, y, bank, "cotangent");
  require_finite(y);
  ImageTensor grad(y.channels(), y.height(), y.width());
  const std::size_t block = bank.config().paths() * cotangent.map_size();
  parallel_for(y.channels(), threads, [&](std::size_t c) {
    channel_backward(y.channel(c), bank, nullptr, cotangent.values().data() + c * block, grad.channel(c));
  });
  return grad;
}

LossAndGradient scattering_loss(const ImageTensor& y, const FilterBank& bank, const ScatteringCoeffs& target,
                                std::size_t threads) {
  check_image(y, bank);
  check_coeffs(target, y, bank, "target");
  LossAndGradient out{0.0, ImageTensor(y.channels(), y.height(), y.width())};
  std::vector<double> per_channel(y.channels(), 0.0);
  const std::size_t block = bank.config().paths() * target.map_size();
  parallel_for(y.channels(), threads, [&](std::size_t c) {
    per_channel[c] =
        channel_backward(y.channel(c), bank, target.values().data() + c * block, nullptr, out.gradient.channel(c));
  });
  for (double v : per_channel) out.loss += v;
  return out;
}

ScatteringCoeffs scatter_jvp(const ImageTensor& y, const FilterBank& bank, const ImageTensor& tangent,
                             std::size_t threads) {
  check_image(y, bank);
  if (!tangent.same_shape(y)) throw ShapeError("tangent shape does not match the image");
  const auto& cfg = bank.config();
  const std::size_t n = cfg.grid_size;
  const std::size_t m = cfg.output_side();
  const auto& plan = fft::Plan2d::get(n);
  ScatteringCoeffs out(y.channels(), cfg.paths(), m, bank.hash());

  parallel_for(y.channels(), threads, [&](std::size_t c) {
    const ComplexBuffer spec = spectrum_of(y.channel(c), n);
    const ComplexBuffer dspec = spectrum_of(tangent.channel(c), n);
    ComplexBuffer z(n * n);
    ComplexBuffer dz(n * n);
    ComplexBuffer small(m * m);
    detail::fold_low_pass(dspec, bank.low_pass(), m, small);
    detail::small_to_real(small, m, out.map(out.channel_index(c, 0)));
    for (std::size_t f = 0; f < bank.band_pass_count(); ++f) {
      const auto psi = bank.band_pass(f).values();
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = spec[i] * psi[i];
        dz[i] = dspec[i] * psi[i];
      }
      detail::inverse_normalized(plan, z);
      detail::inverse_normalized(plan, dz);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = std::sqrt(std::norm(z[i]));
        dz[i] = r < kModulusFloor ? 0.0 : (std::conj(z[i]) * dz[i]).real() / r;
      }
      plan.forward(dz);
      detail::fold_low_pass(dz, bank.low_pass(), m, small);
      detail::small_to_real(small, m, out.map(out.channel_index(c, f + 1)));
    }
  });
  return out;
}

ReconstructionTrace reconstruct(const ScatteringCoeffs& target, const FilterBank& bank,
                                const ReconstructionConfig& config) {
  config.validate();
  if (target.config_hash() != bank.hash()) {
    throw ConfigError("coefficients were produced by a different filter bank (hash " + target.config_hash() +
                      ", bank " + bank.hash() + ")");
  }
  const auto& cfg = bank.config();
  const std::size_t n = cfg.grid_size;
  if (target.per_input() != cfg.paths() || target.side() != cfg.output_side()) {
    throw ShapeError("target shape does not match the filter bank");
  }
  const double target_norm = l2_norm(target.values());
  if (!(target_norm > 0.0)) throw NumericError("target coefficients are identically zero");

  ImageTensor y(target.input_channels(), n, n);
  switch (config.init) {
    case InitMode::Zeros:
      break;
    case InitMode::UniformNoise: {
      std::mt19937_64 rng(config.seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (auto& v : y.values()) v = unit(rng);
      break;
    }
    case InitMode::ProvidedImage:
      if (!config.initial_image->same_shape(y)) throw ShapeError("initial image shape does not match the target");
      y = *config.initial_image;
      break;
  }
  require_finite(y);

  ReconstructionTrace trace;
  trace.seed = config.seed;
  std::vector<double> m1(y.size(), 0.0);
  std::vector<double> m2(y.size(), 0.0);
  double best_loss = std::numeric_limits<double>::infinity();
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  for (std::size_t it = 0; it < config.max_iters; ++it) {
    auto lg = scattering_loss(y, bank, target, config.threads);
    if (!std::isfinite(lg.loss)) {
      trace.diverged = true;
      break;
    }
    const double err = std::sqrt(lg.loss) / target_norm;
    trace.loss_history.push_back(lg.loss);
    trace.err_history.push_back(err);
    trace.iterations_run = it + 1;
    if (lg.loss < best_loss) {
      best_loss = lg.loss;
      trace.final_image = y;
    }
    if (err <= config.target_err) {
      trace.converged = true;
      break;
    }

    const double lr = config.learning_rate(it);
    beta1_power *= config.adam_beta1;
    beta2_power *= config.adam_beta2;
    const double c1 = 1.0 - beta1_power;
    const double c2 = 1.0 - beta2_power;
    auto values = y.values();
    const auto grad = lg.gradient.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      m1[i] = config.adam_beta1 * m1[i] + (1.0 - config.adam_beta1) * grad[i];
      m2[i] = config.adam_beta2 * m2[i] + (1.0 - config.adam_beta2) * grad[i] * grad[i];
      values[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + config.adam_eps);
    }
  }
  if (trace.final_image.empty()) trace.final_image = y;
  return trace;
}

double relative_err(const ImageTensor& x_tilde, const ImageTensor& x, const FilterBank& bank) {
  if (!x_tilde.same_shape(x)) throw ShapeError("relative_err needs images of the same shape");
  const auto sx = scatter(x, bank);
  const auto sy = scatter(x_tilde, bank);
  const double denom = l2_norm(sx.values());
  if (!(denom > 0.0)) throw NumericError("relative error undefined: scattering of the reference is zero");
  double num = 0.0;
  const auto a = sy.values();
  const auto b = sx.values();
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(num) / denom;
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("psnr needs images of the same shape");
  if (a.size() == 0) throw ShapeError("psnr of empty images");
  double sum = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) sum += (av[i] - bv[i]) * (av[i] - bv[i]);
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(sum / static_cast<double>(av.size()));
}

ImageTensor clip_unit(const ImageTensor& x) {
  ImageTensor out = x;
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace scatlite
