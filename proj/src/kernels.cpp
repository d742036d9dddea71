#include "volatix/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"
#include "volatix/error.hpp"

namespace volatix::kernels {

namespace {

Backend detect() noexcept {
  if (const char* env = std::getenv("VOLATIX_KERNELS"); env && std::string_view(env) == "scalar") {
    return Backend::Scalar;
  }
#if defined(VOLATIX_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::Avx2;
#endif
#if defined(VOLATIX_HAVE_NEON)
  return Backend::Neon;
#endif
  return Backend::Scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{&table_for(detect())};
  return table;
}

std::atomic<Backend>& current_backend() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(VOLATIX_HAVE_AVX2)
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(VOLATIX_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() noexcept { return current_backend().load(); }

void set_backend(Backend b) {
  if (!backend_supported(b)) {
    throw InvalidParameter("kernel backend not supported on this CPU: " +
                           std::string(backend_name(b)));
  }
  current().store(&table_for(b));
  current_backend().store(b);
}

const KernelTable& table_for(Backend b) {
  switch (b) {
#if defined(VOLATIX_HAVE_AVX2)
    case Backend::Avx2: return detail::avx2_table;
#endif
#if defined(VOLATIX_HAVE_NEON)
    case Backend::Neon: return detail::neon_table;
#endif
    default: return detail::scalar_table;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  return current().load(std::memory_order_relaxed)->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  current().load(std::memory_order_relaxed)->axpy(alpha, x.data(), y.data(), x.size());
}

void exp_inplace(std::span<double> x) {
  current().load(std::memory_order_relaxed)->exp_inplace(x.data(), x.size());
}

MeanSsd mean_ssd(std::span<const double> x) {
  return current().load(std::memory_order_relaxed)->mean_ssd(x.data(), x.size());
}

void softmax3(std::span<const double> v_nearcrash, std::span<const double> v_crash,
              std::span<double> p_base, std::span<double> p_nearcrash,
              std::span<double> p_crash) {
  current().load(std::memory_order_relaxed)
      ->softmax3(v_nearcrash.data(), v_crash.data(), p_base.data(), p_nearcrash.data(),
                 p_crash.data(), v_crash.size());
}

}  // namespace volatix::kernels
