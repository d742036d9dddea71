#pragma once

// Data-parallel inner loops shared by the kinematics and likelihood code.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at startup from the running CPU; tests can pin a backend to
// check the variants against the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace volatix::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend b) noexcept;
bool backend_supported(Backend b) noexcept;
Backend active_backend() noexcept;
/// Throws InvalidParameter when the CPU cannot run `b`.
void set_backend(Backend b);

struct MeanSsd {
  double mean = 0.0;
  double ssd = 0.0;  // sum of squared deviations from the mean
};

double dot(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// x[i] = exp(x[i]). Arguments below about -708 flush to 0.
void exp_inplace(std::span<double> x);
/// Two-pass mean and sum of squared deviations.
MeanSsd mean_ssd(std::span<const double> x);
/// Row-wise three-way softmax with the reference utility fixed at 0:
/// p_base = 1/(1+e^vn+e^vc) and so on, max-shifted. All spans share a length.
void softmax3(std::span<const double> v_nearcrash, std::span<const double> v_crash,
              std::span<double> p_base, std::span<double> p_nearcrash,
              std::span<double> p_crash);

// Backend-specific entry points. Exposed so the equivalence tests can call a
// variant directly; everything else should use the dispatched functions.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*exp_inplace)(double*, std::size_t);
  MeanSsd (*mean_ssd)(const double*, std::size_t);
  void (*softmax3)(const double*, const double*, double*, double*, double*, std::size_t);
};

const KernelTable& table_for(Backend b);

}  // namespace volatix::kernels
