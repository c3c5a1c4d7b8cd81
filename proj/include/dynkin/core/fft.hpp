#pragma once

// Thin FFTW wrapper: cached backward plans and aligned complex buffers.
// Plans are created under a mutex (the FFTW planner is not thread-safe);
// executing a cached plan on other aligned buffers is.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>

namespace dynkin::fft {

/// SIMD-aligned complex array from fftw_malloc; every buffer has the same
/// alignment, so results do not depend on where a buffer happens to live.
class Buffer {
 public:
  explicit Buffer(std::size_t n) : n_(n), data_(fftw_alloc_complex(n)) {
    if (data_ == nullptr) throw std::bad_alloc();
  }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  ~Buffer() { fftw_free(data_); }

  std::size_t size() const noexcept { return n_; }
  fftw_complex* raw() noexcept { return data_; }
  std::complex<double>* data() noexcept { return reinterpret_cast<std::complex<double>*>(data_); }
  std::complex<double>& operator[](std::size_t i) noexcept { return data()[i]; }

 private:
  std::size_t n_;
  fftw_complex* data_;
};

namespace detail {

struct PlanCache {
  std::mutex mutex;
  std::map<std::size_t, fftw_plan> plans;
  ~PlanCache() {
    for (auto& [n, p] : plans) fftw_destroy_plan(p);
  }
};

inline PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace detail

/// out_j = Σ_k in_k e^{+2πi jk/n}, unnormalized, out of place.
inline void backward(Buffer& in, Buffer& out) {
  const std::size_t n = in.size();
  fftw_plan plan;
  {
    auto& cache = detail::plan_cache();
    std::lock_guard lock(cache.mutex);
    auto it = cache.plans.find(n);
    if (it == cache.plans.end()) {
      Buffer a(n);
      Buffer b(n);
      plan = fftw_plan_dft_1d(static_cast<int>(n), a.raw(), b.raw(), FFTW_BACKWARD, FFTW_ESTIMATE);
      it = cache.plans.emplace(n, plan).first;
    }
    plan = it->second;
  }
  fftw_execute_dft(plan, in.raw(), out.raw());
}

}  // namespace dynkin::fft
