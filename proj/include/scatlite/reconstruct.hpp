#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scatlite/filterbank.hpp"
#include "scatlite/tensor.hpp"

namespace scatlite {

enum class InitMode { Zeros, UniformNoise, ProvidedImage };

std::string to_string(InitMode m);
InitMode parse_init_mode(const std::string& name);

/// ADAM descent on ||S y - S x||^2. Defaults follow the published schedule:
/// learning rate 10 divided by 10 every 200 iterations, 1000 iterations,
/// stop once the relative error reaches 2e-3.
struct ReconstructionConfig {
  std::size_t max_iters = 1000;
  double initial_lr = 10.0;
  std::size_t lr_drop_every = 200;
  double lr_drop_factor = 0.1;
  double target_err = 2e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  InitMode init = InitMode::UniformNoise;
  std::uint64_t seed = 0;                    // UniformNoise in [0, 1]
  std::optional<ImageTensor> initial_image;  // required for ProvidedImage
  std::size_t threads = 0;

  void validate() const;
  double learning_rate(std::size_t iteration) const;
};

struct ReconstructionTrace {
  std::vector<double> err_history;   // ||S y_t - target|| / ||target||
  std::vector<double> loss_history;  // ||S y_t - target||^2
  ImageTensor final_image;           // best iterate (lowest loss), unclipped
  std::size_t iterations_run = 0;
  bool converged = false;  // err reached target_err
  bool diverged = false;   // loss became non-finite; final_image is the best so far
  std::uint64_t seed = 0;
};

/// Gradient of <scatter(y), cotangent> with respect to y.
ImageTensor scatter_vjp(const ImageTensor& y, const FilterBank& bank, const ScatteringCoeffs& cotangent,
                        std::size_t threads = 0);

/// Directional derivative of scatter at y along `tangent`. The modulus
/// derivative is taken as zero where |x * psi| < 1e-12.
ScatteringCoeffs scatter_jvp(const ImageTensor& y, const FilterBank& bank, const ImageTensor& tangent,
                             std::size_t threads = 0);

struct LossAndGradient {
  double loss = 0.0;  // ||scatter(y) - target||^2
  ImageTensor gradient;
};

// Loss and gradient in a single forward/backward sweep (no full-resolution
// intermediates are kept between filters).
LossAndGradient scattering_loss(const ImageTensor& y, const FilterBank& bank, const ScatteringCoeffs& target,
                                std::size_t threads = 0);

/// Minimizes ||scatter(y) - target||^2 over unconstrained y.
ReconstructionTrace reconstruct(const ScatteringCoeffs& target, const FilterBank& bank,
                                const ReconstructionConfig& config);

// ||S x_tilde - S x|| / ||S x||; NumericError when S x = 0.
double relative_err(const ImageTensor& x_tilde, const ImageTensor& x, const FilterBank& bank);

// 10 log10(1 / MSE) for signals with peak 1; +infinity when identical.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Copy with every value clipped to [0, 1].
ImageTensor clip_unit(const ImageTensor& x);

}  // namespace scatlite
