#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scatlite/fft.hpp"

namespace scatlite {

enum class WaveletFamily { Gabor, Morlet };

std::string to_string(WaveletFamily f);
WaveletFamily parse_family(const std::string& name);

// Minimizers of the Littlewood-Paley deviation (real-signal convention) for
// J = 3 and eight angles on the 128 and 224 grids: epsilon0 = 0.2497.
inline constexpr double kDefaultSigma0 = 0.2583;
inline constexpr double kDefaultXi0 = 2.563;
inline constexpr double kDefaultSlant = 0.415;

/// Hyperparameters of the scattering filter bank.
struct FilterBankConfig {
  std::size_t grid_size = 224;  // N, signals are N x N
  std::size_t scale_j = 3;      // J, invariance window 2^J
  std::size_t num_angles = 8;   // |Theta|, angles l*pi/|Theta|
  double sigma0 = kDefaultSigma0;
  double slant = kDefaultSlant;
  double xi0 = kDefaultXi0;  // central frequency (xi0, 0) of the mother wavelet
  WaveletFamily family = WaveletFamily::Morlet;

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  std::size_t subsampling() const { return std::size_t{1} << scale_j; }
  std::size_t output_side() const { return grid_size / subsampling(); }
  std::size_t band_pass_count() const { return scale_j * num_angles; }
  // 1 + |Theta| J maps per input channel.
  std::size_t paths() const { return 1 + band_pass_count(); }

  // Identifier binding coefficients to the exact filters that produced them.
  std::string hash() const;
};

/// N x N complex samples on the periodic DFT frequency grid.
class ComplexSpectrum {
 public:
  ComplexSpectrum() = default;
  explicit ComplexSpectrum(std::size_t side) : side_(side), values_(side * side) {}

  std::size_t side() const { return side_; }
  Complex& at(std::size_t k1, std::size_t k2) { return values_[k1 * side_ + k2]; }
  const Complex& at(std::size_t k1, std::size_t k2) const { return values_[k1 * side_ + k2]; }
  std::span<Complex> values() { return values_; }
  std::span<const Complex> values() const { return values_; }

  bool all_finite() const;

 private:
  std::size_t side_ = 0;
  ComplexBuffer values_;
};

/// Frequency-domain Gabor/Morlet filters psi_{j,theta} and the low-pass phi_J.
///
/// Immutable once built and safe to share between threads.
class FilterBank {
 public:
  // Assembles a bank from explicit spectra (band_pass indexed j * angles +
  // theta, possibly empty). Validates sizes and finiteness.
  FilterBank(FilterBankConfig config, std::vector<ComplexSpectrum> band_pass, ComplexSpectrum low_pass,
             double band_pass_scale);

  const FilterBankConfig& config() const { return config_; }
  std::size_t side() const { return config_.grid_size; }
  std::size_t band_pass_count() const { return band_pass_.size(); }

  const ComplexSpectrum& band_pass(std::size_t index) const { return band_pass_.at(index); }
  const ComplexSpectrum& band_pass(std::size_t j, std::size_t theta) const {
    return band_pass_.at(j * config_.num_angles + theta);
  }
  const ComplexSpectrum& low_pass() const { return low_pass_; }

  // Global scalar applied to every band-pass filter by the frame normalization.
  double band_pass_scale() const { return band_pass_scale_; }

  // theta_l = l * pi / |Theta|.
  double angle(std::size_t theta) const;
  // Nominal central frequency 2^-j r_{-theta} (xi0, 0) of psi_{j,theta}.
  std::array<double, 2> center(std::size_t j, std::size_t theta) const;

  const std::string& hash() const { return hash_; }

  // Copy with every filter (band-pass and low-pass) multiplied by `amplitude`.
  FilterBank scaled(double amplitude) const;

 private:
  FilterBankConfig config_;
  std::vector<ComplexSpectrum> band_pass_;
  ComplexSpectrum low_pass_;
  double band_pass_scale_ = 1.0;
  std::string hash_;
};

struct BuildOptions {
  // Rescale the band-pass filters so the Littlewood-Paley sum is centred on 1.
  bool normalize = true;
  // Number of grid periods folded on each side when sampling the Gaussians.
  int periods = 2;
};

FilterBank build_filter_bank(const FilterBankConfig& config, const BuildOptions& options = {});

// Raw mother spectrum psi_hat_{j,theta} before normalization, periodized on the
// grid. For Morlet the zero-mean correction is included.
ComplexSpectrum mother_spectrum(const FilterBankConfig& config, std::size_t j, std::size_t theta, int periods = 2);

// Periodized kappa(2^J omega) normalized to 1 at the origin.
ComplexSpectrum low_pass_spectrum(const FilterBankConfig& config, int periods = 2);

enum class LpConvention {
  Analytic,    // sum |psi(w)|^2 over the filters as built (half-plane coverage)
  RealSignal,  // also sums the reflected |psi(-w)|^2, the frame for real inputs
};

std::string to_string(LpConvention c);

struct LittlewoodPaleyReport {
  double epsilon0 = 0.0;
  double min_energy = 0.0;
  double max_energy = 0.0;
  LpConvention convention = LpConvention::RealSignal;
  std::size_t samples = 0;  // grid points with |omega| < pi
};

LittlewoodPaleyReport littlewood_paley(const FilterBank& bank, LpConvention convention = LpConvention::RealSignal);

// Littlewood-Paley sum at every grid point (no disc restriction).
std::vector<double> littlewood_paley_sum(const FilterBank& bank, LpConvention convention);

// Writes one PNG heatmap of |spectrum| per filter (zero frequency centred) and
// all spectra as a float64 SCT1 tensor of shape [filters, N, N, 2].
void dump_filters(const FilterBank& bank, const std::filesystem::path& directory);

}  // namespace scatlite
