#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "scatlite/filterbank.hpp"
#include "scatlite/tensor.hpp"

namespace scatlite {

// Symmetric 2 x 2 matrix [[a, b], [b, c]].
struct Sym2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  // Builds from a full matrix; ConfigError unless symmetric to 1e-12.
  static Sym2 from_matrix(const std::array<std::array<double, 2>, 2>& m);

  std::array<double, 2> eigenvalues() const;  // ascending
  double quadratic(double w1, double w2) const { return a * w1 * w1 + 2.0 * b * w1 * w2 + c * w2 * w2; }
  // R(angle) Sigma R(angle)^T
  Sym2 rotated(double angle) const;
};

/// Gaussian blob x_Sigma with spectrum exp(-w^T Sigma w).
struct BlobSpec {
  Sym2 sigma;
  std::size_t grid_size = 64;

  void validate() const;  // ConfigError unless positive semidefinite
};

struct BlobSignal {
  ImageTensor image;        // 1 x N x N, centred at (N/2, N/2), peak 1
  bool aliased = false;     // |x| on the periodic boundary exceeds 1% of the peak
  bool degenerate = false;  // Sigma is singular (line, or a Dirac for Sigma = 0)
};

BlobSignal blob_signal(const BlobSpec& spec);

/// Closed-form scattering of x_Sigma for a Gabor bank, up to one positive
/// scalar per band-pass channel: x_Sigma * (|psi_{j,theta}| * phi_J) sampled
/// every 2^J pixels, using |psi|^(w) ~ exp(-|Gamma w|^2). No modulus is
/// evaluated. Throws ConfigError for a Morlet bank.
ScatteringCoeffs analytic_blob_scatter(const BlobSpec& spec, const FilterBank& bank);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Per-channel cosine similarity between two coefficient sets of equal shape.
std::vector<double> channel_cosine_similarity(const ScatteringCoeffs& a, const ScatteringCoeffs& b);

/// Numerical check of the translation Lipschitz bound
///   ||x_a * psi - e^{-i w0.a} x * psi|| <= ||x|| sqrt(4 eps^2 + |a|^2 eta0^2)
/// for psi = psi_{j,theta} rescaled to unit peak modulus and w0 its centre.
struct StabilityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double eta0 = 0.0;     // smallest radius with |psi_hat| <= tail_eps outside the ball
  double epsilon = 0.0;  // max |psi_hat| actually found outside the ball
  double tail_eps = 0.0;
  double x_norm = 0.0;
  std::array<double, 2> a{};
  std::size_t j = 0;
  std::size_t theta = 0;

  bool holds() const { return lhs <= rhs; }
};

/// Frequencies are taken in the window w0 + [-pi, pi)^2 centred on the filter;
/// the translation by (possibly fractional) `a` is the phase e^{-i w.a} on
/// that window. Throws NumericError when no radius below pi satisfies tail_eps.
StabilityReport translation_bound_check(const ImageTensor& x, std::array<double, 2> a, const FilterBank& bank,
                                        std::size_t j, std::size_t theta, double tail_eps);

}  // namespace scatlite
