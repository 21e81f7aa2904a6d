#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace scatlite {

using Complex = std::complex<double>;

// 64-byte aligned storage so buffers always match the alignment FFTW planned
// against and SIMD codelets stay enabled.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using ComplexBuffer = std::vector<Complex, AlignedAllocator<Complex>>;

namespace fft {

/// In-place square 2-D complex DFT of side n, row-major.
///
/// Both directions are unnormalized (FFTW convention); callers divide by n*n
/// after an inverse. Plans are created once per size and shared: obtaining a
/// plan takes a global lock, executing one does not.
class Plan2d {
 public:
  static const Plan2d& get(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;

  Plan2d(const Plan2d&) = delete;
  Plan2d& operator=(const Plan2d&) = delete;
  ~Plan2d();

 private:
  explicit Plan2d(std::size_t n);
  void execute(void* plan, std::span<Complex> data) const;

  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Angular frequency of DFT index k on a grid of side n, in [-pi, pi).
double frequency(std::size_t k, std::size_t n);

// Index of -k modulo n.
inline std::size_t mirror_index(std::size_t k, std::size_t n) { return k == 0 ? 0 : n - k; }

}  // namespace fft
}  // namespace scatlite
