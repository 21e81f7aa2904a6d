#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "scatlite/filterbank.hpp"
#include "scatlite/tensor.hpp"

namespace scatlite {

enum class Boundary {
  Periodic,  // circular convolution on the N x N grid
  Reflect,   // mirror-pad by 2^J pixels, scatter, crop one coefficient per side
};

// (1 + |Theta| J) N^2 / 2^{2J}, per input channel.
std::size_t coefficient_count(const FilterBankConfig& config);

// Grid side a bank must have to scatter an N x N image with Boundary::Reflect.
std::size_t padded_grid_size(std::size_t n, std::size_t scale_j);

/// First-order scattering: for each input channel, the low-pass average
/// x * phi_J followed by |x * psi_{j,theta}| * phi_J, all sampled every 2^J
/// pixels. Channels are scattered independently.
///
/// `threads` = 0 uses default_thread_count(); the result does not depend on it.
ScatteringCoeffs scatter(const ImageTensor& x, const FilterBank& bank, Boundary boundary = Boundary::Periodic,
                         std::size_t threads = 0);

// Circular shift: out(u) = x(u - a), with a = (rows, cols).
ImageTensor translate(const ImageTensor& x, std::array<long, 2> a);

// Sub-pixel translation realised as the phase e^{-i omega.a} on the centred
// frequency grid; the imaginary residue from the Nyquist bins is dropped.
ImageTensor translate_spectral(const ImageTensor& x, std::array<double, 2> a);

// Mirror padding (edge sample not repeated) by `pad` pixels on every side.
ImageTensor reflect_pad(const ImageTensor& x, std::size_t pad);

// Unnormalized 2-D DFT of a real N x N plane.
ComplexBuffer spectrum_of(std::span<const double> plane, std::size_t n);

// Full-resolution circular convolution of a real plane with a filter given by
// its spectrum: IDFT(DFT(plane) . filter).
ComplexBuffer convolve(std::span<const double> plane, const ComplexSpectrum& filter);

// Throws NumericError on NaN/Inf.
void require_finite(const ImageTensor& x);

}  // namespace scatlite
