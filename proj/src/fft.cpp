#include "scatlite/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace scatlite::fft {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

const Plan2d& Plan2d::get(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<Plan2d>> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::unique_ptr<Plan2d>(new Plan2d(n))).first;
  }
  return *it->second;
}

Plan2d::Plan2d(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("fft: zero-sized plan");
  // Planning scribbles over the buffer, so use a scratch one.
  ComplexBuffer scratch(n * n);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  const int side = static_cast<int>(n);
  const unsigned flags = n >= 32 ? FFTW_MEASURE : FFTW_ESTIMATE;
  forward_plan_ = fftw_plan_dft_2d(side, side, p, p, FFTW_FORWARD, flags);
  inverse_plan_ = fftw_plan_dft_2d(side, side, p, p, FFTW_BACKWARD, flags);
  if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("fft: planning failed");
}

Plan2d::~Plan2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Plan2d::execute(void* plan, std::span<Complex> data) const {
  if (data.size() != n_ * n_) throw std::invalid_argument("fft: buffer size does not match plan");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  if (fftw_alignment_of(reinterpret_cast<double*>(p)) == 0) {
    fftw_execute_dft(static_cast<fftw_plan>(plan), p, p);
    return;
  }
  ComplexBuffer tmp(data.begin(), data.end());
  auto* q = reinterpret_cast<fftw_complex*>(tmp.data());
  fftw_execute_dft(static_cast<fftw_plan>(plan), q, q);
  std::copy(tmp.begin(), tmp.end(), data.begin());
}

void Plan2d::forward(std::span<Complex> data) const { execute(forward_plan_, data); }

void Plan2d::inverse(std::span<Complex> data) const { execute(inverse_plan_, data); }

double frequency(std::size_t k, std::size_t n) {
  const auto ki = static_cast<long>(k);
  const auto ni = static_cast<long>(n);
  const long centered = 2 * ki < ni ? ki : ki - ni;
  return 2.0 * std::numbers::pi * static_cast<double>(centered) / static_cast<double>(n);
}

}  // namespace scatlite::fft
