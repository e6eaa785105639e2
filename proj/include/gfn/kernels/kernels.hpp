#pragma once

// Dense double-precision inner loops used by the autodiff tape and the
// optimizer. Every kernel has a portable scalar reference implementation and,
// on x86-64, an AVX2/FMA variant. The variant is picked once at startup from
// CPUID (override with GFN_KERNELS=scalar|avx2) and can be switched at runtime.

#include <cstddef>
#include <span>
#include <string_view>

namespace gfn::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend backend) noexcept;

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

// Raw kernel signatures. Matrices are dense row-major.
struct KernelTable {
  Backend backend;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[n x m] = x[n x k] * w[m x k]^T   (overwrites y)
  void (*gemm_nt)(const double* x, const double* w, double* y, std::size_t n, std::size_t k,
                  std::size_t m);
  // dx[n x k] += dy[n x m] * w[m x k]
  void (*gemm_nn_acc)(const double* dy, const double* w, double* dx, std::size_t n, std::size_t m,
                      std::size_t k);
  // dw[m x k] += dy[n x m]^T * x[n x k]
  void (*gemm_tn_acc)(const double* dy, const double* x, double* dw, std::size_t n, std::size_t m,
                      std::size_t k);
  void (*adam_update)(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoefficients& c);
};

bool supported(Backend backend) noexcept;
const KernelTable& table(Backend backend);
const KernelTable& active() noexcept;
Backend active_backend() noexcept;
// Throws ContractViolation when the CPU lacks the requested instruction set.
void select(Backend backend);

// RAII switch used by tests to pin a backend for a scope.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { select(backend); }
  ~ScopedBackend() { select(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

// Span front-ends over the active table.
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(GFN_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table() noexcept;
#endif
}  // namespace detail

}  // namespace gfn::kernels
