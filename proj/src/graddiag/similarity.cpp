#include "gfn/graddiag/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "gfn/error.hpp"
#include "gfn/evalsuite/statistics.hpp"

namespace gfn {
namespace {

std::size_t log2_exact(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0)
    throw ContractViolation("similarity: gradient count " + std::to_string(n) + " is not a power of two");
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("cosine: vectors differ in length");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw UndefinedStatistic("cosine: zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

GradVector mean_gradient(std::span<const GradVector> grads, std::size_t begin, std::size_t end) {
  if (begin >= end || end > grads.size()) throw ContractViolation("mean_gradient: bad range");
  GradVector m(grads[begin].size(), 0.0);
  for (std::size_t i = begin; i < end; ++i) {
    if (grads[i].size() != m.size()) throw ContractViolation("mean_gradient: gradients differ in length");
    for (std::size_t c = 0; c < m.size(); ++c) m[c] += grads[i][c];
  }
  const double inv = 1.0 / static_cast<double>(end - begin);
  for (double& v : m) v *= inv;
  return m;
}

double subbatch_similarity(std::span<const GradVector> grads, std::size_t k, std::span<const double> reference) {
  const std::size_t total = log2_exact(grads.size());
  if (k > total) throw ContractViolation("similarity: sub-batch exponent exceeds the batch");
  const std::size_t size = std::size_t{1} << k;
  const std::size_t count = grads.size() / size;
  double acc = 0.0;
  for (std::size_t b = 0; b < count; ++b) {
    const GradVector m = mean_gradient(grads, b * size, (b + 1) * size);
    acc += cosine_similarity(m, reference);
  }
  return acc / static_cast<double>(count);
}

double subbatch_similarity(std::span<const GradVector> grads, std::size_t k) {
  const GradVector full = mean_gradient(grads, 0, grads.size());
  return subbatch_similarity(grads, k, full);
}

SimilarityCurve similarity_curve(std::span<const GradVector> grads, std::span<const double> reference,
                                 std::size_t iteration, std::string pair) {
  const std::size_t total = log2_exact(grads.size());
  SimilarityCurve c{.iteration = iteration, .pair = std::move(pair)};
  for (std::size_t k = 0; k <= total; ++k) c.values.push_back(subbatch_similarity(grads, k, reference));
  return c;
}

}  // namespace gfn
