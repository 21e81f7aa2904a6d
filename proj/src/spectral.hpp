#pragma once

// Internal helpers shared by the forward transform and its adjoints.

#include <cstddef>
#include <span>

#include "scatlite/fft.hpp"
#include "scatlite/filterbank.hpp"

namespace scatlite::detail {

// out = real plane widened to complex.
void load_real(std::span<const double> in, std::span<Complex> out);

// Normalized inverse DFT in place.
void inverse_normalized(const fft::Plan2d& plan, std::span<Complex> data);

// small = (1/L^2) sum over aliases of spec . phi, with L = n / m. This is the
// spectrum of the low-passed map sampled every L pixels.
void fold_low_pass(std::span<const Complex> spec, const ComplexSpectrum& phi, std::size_t m, std::span<Complex> small);

// out = Re(IDFT_m(small)); destroys `small`.
void small_to_real(std::span<Complex> small, std::size_t m, std::span<double> out);

// Adjoint of x -> fold_low_pass + small_to_real, in the frequency domain:
// full[k] (+)= DFT_m(g)[k mod m] . phi[-k]. `small` is scratch of size m*m.
void lift_low_pass(std::span<const double> g, const ComplexSpectrum& phi, std::size_t m, std::span<Complex> small,
                   std::span<Complex> full, bool accumulate);

}  // namespace scatlite::detail
