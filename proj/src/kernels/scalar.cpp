#include <cmath>

#include "gfn/kernels/kernels.hpp"

namespace gfn::kernels::detail {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemm_nt_scalar(const double* x, const double* w, double* y, std::size_t n, std::size_t k,
                    std::size_t m) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * k;
    for (std::size_t o = 0; o < m; ++o) y[r * m + o] = dot_scalar(xr, w + o * k, k);
  }
}

void gemm_nn_acc_scalar(const double* dy, const double* w, double* dx, std::size_t n,
                        std::size_t m, std::size_t k) {
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < m; ++o) {
      const double g = dy[r * m + o];
      if (g != 0.0) axpy_scalar(g, w + o * k, dx + r * k, k);
    }
  }
}

void gemm_tn_acc_scalar(const double* dy, const double* x, double* dw, std::size_t n,
                        std::size_t m, std::size_t k) {
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < m; ++o) {
      const double g = dy[r * m + o];
      if (g != 0.0) axpy_scalar(g, x + r * k, dw + o * k, k);
    }
  }
}

void adam_update_scalar(double* param, const double* grad, double* m, double* v, std::size_t n,
                        const AdamCoefficients& c) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{Backend::Scalar,   dot_scalar,         axpy_scalar,
                                 gemm_nt_scalar,    gemm_nn_acc_scalar, gemm_tn_acc_scalar,
                                 adam_update_scalar};
  return table;
}

}  // namespace gfn::kernels::detail
