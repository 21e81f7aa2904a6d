#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "scatlite/error.hpp"
#include "scatlite/filterbank.hpp"
#include "scatlite/io.hpp"
#include "scatlite/transform.hpp"
#include "support.hpp"

using namespace scatlite;

namespace {

FilterBank bank_for(std::size_t n, std::size_t j, std::size_t angles = 8,
                    WaveletFamily family = WaveletFamily::Morlet) {
  FilterBankConfig c;
  c.grid_size = n;
  c.scale_j = j;
  c.num_angles = angles;
  c.family = family;
  return build_filter_bank(c);
}

// Random real signal whose spectrum vanishes outside the disc |w| < pi.
ImageTensor disc_limited(std::size_t n, std::mt19937_64& rng) {
  auto x = testing::random_normal(1, n, rng);
  auto spec = spectrum_of(x.channel(0), n);
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      if (std::hypot(fft::frequency(k1, n), fft::frequency(k2, n)) >= std::numbers::pi) spec[k1 * n + k2] = 0.0;
    }
  }
  fft::Plan2d::get(n).inverse(spec);
  for (std::size_t i = 0; i < spec.size(); ++i) x.channel(0)[i] = spec[i].real() / static_cast<double>(n * n);
  return x;
}

double energy(const ComplexBuffer& z) {
  double e = 0.0;
  for (const auto& v : z) e += std::norm(v);
  return e;
}

}  // namespace

TEST_CASE("coefficient count follows (1 + angles J) N^2 / 4^J") {
  FilterBankConfig c;
  CHECK(coefficient_count(c) == 19600);
  CHECK(coefficient_count(c) < 224 * 224);
  c.scale_j = 2;
  CHECK(coefficient_count(c) == 53312);
  CHECK(coefficient_count(c) > 224 * 224);
  c.grid_size = 32;
  c.scale_j = 3;
  CHECK(coefficient_count(c) == 400);
  c.grid_size = 30;
  CHECK_THROWS_AS(coefficient_count(c), ConfigError);
}

TEST_CASE("RGB 224 image at J=3 gives 75 x 28 x 28 coefficients") {
  const auto x = load_image(testing::data_dir() / "astronaut_224.png", 224);
  REQUIRE(x.channels() == 3);
  const auto s = scatter(x, bank_for(224, 3));
  CHECK(s.channels() == 75);
  CHECK(s.side() == 28);
  CHECK(s.size() == 75 * 28 * 28);
  CHECK(s.size() == 3 * coefficient_count(FilterBankConfig{}));
}

TEST_CASE("layout puts the low-pass first, then j ascending and theta ascending") {
  const auto bank = bank_for(32, 2, 4);
  std::mt19937_64 rng(3);
  const auto x = testing::random_image(2, 32, rng);
  const auto s = scatter(x, bank);
  const auto m = bank.config().output_side();
  for (std::size_t c = 0; c < 2; ++c) {
    const auto plane = x.channel(c);
    // channel (c, 1 + j * angles + theta) is |x * psi_{j,theta}| * phi subsampled
    const auto z = convolve(plane, bank.band_pass(1, 3));
    std::vector<double> modulus(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) modulus[i] = std::abs(z[i]);
    const auto avg = convolve(modulus, bank.low_pass());
    const auto map = s.map(s.channel_index(c, 1 + 1 * 4 + 3));
    for (std::size_t u1 = 0; u1 < m; ++u1) {
      for (std::size_t u2 = 0; u2 < m; ++u2) {
        CHECK(map[u1 * m + u2] == doctest::Approx(avg[(u1 * 4) * 32 + u2 * 4].real()).epsilon(1e-10));
      }
    }
    const auto low = convolve(plane, bank.low_pass());
    CHECK(s.map(s.channel_index(c, 0))[m + 1] == doctest::Approx(low[4 * 32 + 4].real()).epsilon(1e-10));
  }
}

TEST_CASE("constant image: band-pass channels vanish and the low-pass reproduces the constant") {
  const auto bank = bank_for(64, 3);
  for (double c : {1.0, 0.37, 250.0}) {
    const ImageTensor x(1, 64, 64, c);
    const auto s = scatter(x, bank);
    for (std::size_t ch = 1; ch < s.channels(); ++ch) {
      for (double v : s.map(ch)) CHECK(std::abs(v) <= 1e-10 * c);
    }
    for (double v : s.map(0)) CHECK(v == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("scatter is positively homogeneous") {
  const auto bank = bank_for(32, 2);
  std::mt19937_64 rng(11);
  const auto x = testing::random_normal(1, 32, rng);
  const auto s = scatter(x, bank);
  for (double lambda : {0.0, 0.5, 3.0, 1e3}) {
    ImageTensor y = x;
    for (auto& v : y.values()) v *= lambda;
    const auto sy = scatter(y, bank);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      num += std::pow(sy.values()[i] - lambda * s.values()[i], 2);
      den += std::pow(lambda * s.values()[i], 2);
    }
    if (lambda == 0.0) {
      CHECK(num == 0.0);
    } else {
      CHECK(std::sqrt(num / den) <= 1e-10);
    }
  }
}

TEST_CASE("nonnegative inputs give nonnegative coefficients") {
  std::mt19937_64 rng(5);
  for (std::size_t j : {1, 2, 3}) {
    const auto bank = bank_for(64, j);
    const auto x = testing::random_image(3, 64, rng);
    const auto s = scatter(x, bank);
    double lo = 0.0;
    for (double v : s.values()) lo = std::min(lo, v);
    CHECK(lo >= -1e-6);
  }
}

TEST_CASE("spectral convolution equals direct circular convolution on 8 x 8 grids") {
  const auto bank = bank_for(8, 1, 4);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testing::random_normal(1, 8, rng);
    for (std::size_t f = 0; f < bank.band_pass_count(); ++f) {
      const auto direct = testing::circular_convolve_direct(x.channel(0), testing::spatial_filter(bank.band_pass(f)), 8);
      const auto fast = convolve(x.channel(0), bank.band_pass(f));
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < fast.size(); ++i) {
        num += std::norm(fast[i] - direct[i]);
        den += std::norm(direct[i]);
      }
      CHECK(std::sqrt(num / den) <= 1e-8);
    }
  }
}

TEST_CASE("full scatter equals the brute-force spatial pipeline on an 8 x 8 grid") {
  const auto bank = bank_for(8, 1, 2);
  std::mt19937_64 rng(17);
  const auto x = testing::random_normal(1, 8, rng);
  const auto s = scatter(x, bank);
  const auto phi = testing::spatial_filter(bank.low_pass());
  std::vector<std::vector<double>> maps;
  {
    const auto low = testing::circular_convolve_direct(x.channel(0), phi, 8);
    std::vector<double> m;
    for (std::size_t u1 = 0; u1 < 8; u1 += 2) {
      for (std::size_t u2 = 0; u2 < 8; u2 += 2) m.push_back(low[u1 * 8 + u2].real());
    }
    maps.push_back(m);
  }
  for (std::size_t f = 0; f < bank.band_pass_count(); ++f) {
    const auto z = testing::circular_convolve_direct(x.channel(0), testing::spatial_filter(bank.band_pass(f)), 8);
    std::vector<double> modulus(64);
    for (std::size_t i = 0; i < 64; ++i) modulus[i] = std::abs(z[i]);
    const auto avg = testing::circular_convolve_direct(modulus, phi, 8);
    std::vector<double> m;
    for (std::size_t u1 = 0; u1 < 8; u1 += 2) {
      for (std::size_t u2 = 0; u2 < 8; u2 += 2) m.push_back(avg[u1 * 8 + u2].real());
    }
    maps.push_back(m);
  }
  for (std::size_t ch = 0; ch < maps.size(); ++ch) {
    CHECK(testing::relative_diff(s.map(ch), maps[ch]) <= 1e-8);
  }
}

TEST_CASE("energy before subsampling lies in the frame sandwich") {
  const auto bank = bank_for(64, 3);
  const auto report = littlewood_paley(bank, LpConvention::RealSignal);
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = disc_limited(64, rng);
    const auto plane = x.channel(0);
    // Real inputs: the reflected filters carry the same energy as the originals.
    double e = energy(convolve(plane, bank.low_pass()));
    for (std::size_t f = 0; f < bank.band_pass_count(); ++f) e += 2.0 * energy(convolve(plane, bank.band_pass(f)));
    const double norm2 = std::pow(l2_norm(plane), 2);
    CHECK(e >= (1.0 - report.epsilon0) * norm2);
    CHECK(e <= (1.0 + report.epsilon0) * norm2);
  }
}

TEST_CASE("translate is a circular shift") {
  ImageTensor delta(1, 8, 8);
  delta.at(0, 3, 3) = 1.0;
  SUBCASE("zero and full-period shifts are the identity") {
    std::mt19937_64 rng(1);
    const auto x = testing::random_image(2, 8, rng);
    CHECK(testing::max_abs_diff(translate(x, {0, 0}).values(), x.values()) == 0.0);
    CHECK(testing::max_abs_diff(translate(x, {8, 0}).values(), x.values()) == 0.0);
    CHECK(testing::max_abs_diff(translate(x, {-8, 16}).values(), x.values()) == 0.0);
  }
  SUBCASE("delta moves by the shift") {
    const auto y = translate(delta, {1, 2});
    CHECK(y.at(0, 4, 5) == 1.0);
    CHECK(l2_norm(y.values()) == 1.0);
    const auto w = translate(delta, {-4, 6});
    CHECK(w.at(0, 7, 1) == 1.0);
  }
  SUBCASE("integer spectral translation agrees with the circular shift") {
    std::mt19937_64 rng(2);
    const auto x = testing::random_image(1, 8, rng);
    CHECK(testing::max_abs_diff(translate_spectral(x, {2.0, -3.0}).values(), translate(x, {2, -3}).values()) <=
          1e-12);
  }
}

TEST_CASE("small translations barely change the scattering of natural images") {
  const auto x = load_image(testing::data_dir() / "chelsea_224.png", 224);
  const auto bank = bank_for(224, 3);
  const auto s = scatter(x, bank);
  for (std::array<long, 2> a : {std::array<long, 2>{1, 0}, {0, 2}, {1, 1}, {2, 0}}) {
    const auto st = scatter(translate(x, a), bank);
    CHECK(testing::relative_diff(st.values(), s.values()) <= 0.1);
  }
}

TEST_CASE("colour channels are scattered independently") {
  const auto bank = bank_for(32, 2);
  std::mt19937_64 rng(23);
  const auto x = testing::random_image(3, 32, rng);
  const auto s = scatter(x, bank);
  ImageTensor green(1, 32, 32);
  std::copy(x.channel(1).begin(), x.channel(1).end(), green.channel(0).begin());
  const auto sg = scatter(green, bank);
  for (std::size_t path = 0; path < s.per_input(); ++path) {
    CHECK(testing::max_abs_diff(s.map(s.channel_index(1, path)), sg.map(path)) == 0.0);
  }
}

TEST_CASE("result does not depend on the thread count") {
  const auto bank = bank_for(64, 2);
  std::mt19937_64 rng(29);
  const auto x = testing::random_image(3, 64, rng);
  const auto a = scatter(x, bank, Boundary::Periodic, 1);
  const auto b = scatter(x, bank, Boundary::Periodic, 4);
  CHECK(testing::max_abs_diff(a.values(), b.values()) == 0.0);
  CHECK(a.config_hash() == bank.hash());
}

TEST_CASE("reflect boundary pads by 2^J and keeps the output side") {
  const std::size_t n = 32;
  const std::size_t j = 2;
  FilterBankConfig c;
  c.grid_size = padded_grid_size(n, j);
  c.scale_j = j;
  const auto padded_bank = build_filter_bank(c);
  std::mt19937_64 rng(31);
  const auto x = testing::random_image(1, n, rng);
  const auto s = scatter(x, padded_bank, Boundary::Reflect);
  CHECK(s.side() == n / 4);
  CHECK(s.config_hash() == padded_bank.hash() + "+reflect");
  CHECK_THROWS_AS(scatter(x, bank_for(n, j), Boundary::Reflect), ShapeError);

  const auto p = reflect_pad(x, 4);
  CHECK(p.height() == n + 8);
  CHECK(p.at(0, 0, 4) == x.at(0, 4, 0));
  CHECK(p.at(0, 4, 4) == x.at(0, 0, 0));
  CHECK(p.at(0, n + 7, 4) == x.at(0, n - 5, 0));
}

TEST_CASE("scatter rejects mismatched or invalid input") {
  const auto bank = bank_for(32, 2);
  CHECK_THROWS_AS(scatter(ImageTensor(1, 16, 16), bank), ShapeError);
  CHECK_THROWS_AS(scatter(ImageTensor(0, 32, 32), bank), ShapeError);
  ImageTensor x(1, 32, 32);
  x.at(0, 5, 5) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(scatter(x, bank), NumericError);
  x.at(0, 5, 5) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(scatter(x, bank), NumericError);
  const FilterBank low_only(bank.config(), {}, bank.low_pass(), 1.0);
  CHECK_THROWS_AS(scatter(ImageTensor(1, 32, 32), low_only), ShapeError);
}
