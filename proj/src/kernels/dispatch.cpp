#include <atomic>
#include <cstdlib>
#include <string>

#include "gfn/error.hpp"
#include "gfn/kernels/kernels.hpp"

namespace gfn::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(GFN_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() noexcept {
  Backend best = cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
  if (const char* env = std::getenv("GFN_KERNELS")) {
    const std::string choice(env);
    if (choice == "scalar") return Backend::Scalar;
    if (choice == "avx2" && best == Backend::Avx2) return Backend::Avx2;
  }
  return best;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> ptr{&table(initial_backend())};
  return ptr;
}

}  // namespace

std::string_view backend_name(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Backend backend) noexcept {
  return backend == Backend::Scalar || (backend == Backend::Avx2 && cpu_has_avx2());
}

const KernelTable& table(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return detail::scalar_table();
    case Backend::Avx2:
#if defined(GFN_HAVE_AVX2_KERNELS)
      if (cpu_has_avx2()) return detail::avx2_table();
#endif
      break;
  }
  throw ContractViolation("kernel backend '" + std::string(backend_name(backend)) +
                          "' is not supported on this CPU/build");
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

Backend active_backend() noexcept { return active().backend; }

void select(Backend backend) { current().store(&table(backend), std::memory_order_release); }

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("dot: length mismatch");
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace gfn::kernels
