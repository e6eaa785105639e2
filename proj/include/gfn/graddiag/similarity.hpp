#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gfn {

using GradVector = std::vector<double>;

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Mean of `grads` over [begin, end).
GradVector mean_gradient(std::span<const GradVector> grads, std::size_t begin, std::size_t end);

// Splits 2^K gradients in index order into 2^{K-k} sub-batches of size 2^k,
// averages within each, and returns the mean cosine similarity of the
// sub-batch means against `reference`. Throws ContractViolation unless the
// count is a power of two and 2^k <= count.
double subbatch_similarity(std::span<const GradVector> grads, std::size_t k, std::span<const double> reference);
// Against the full-batch mean of `grads` itself.
double subbatch_similarity(std::span<const GradVector> grads, std::size_t k);

// Mean cosine per k = 0..K.
struct SimilarityCurve {
  std::size_t iteration = 0;
  std::string pair;  // e.g. "subtb_vs_tb"
  std::vector<double> values;
};

SimilarityCurve similarity_curve(std::span<const GradVector> grads, std::span<const double> reference,
                                 std::size_t iteration, std::string pair);

}  // namespace gfn
