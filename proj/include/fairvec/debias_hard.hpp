#pragma once

// Multiclass hard debiasing: find a bias subspace from equality sets,
// neutralize every non-identity word against it, then equalize each
// equality set so its members are equidistant from all neutral words.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairvec/embedding_store.hpp"
#include "fairvec/lexicon.hpp"
#include "fairvec/metrics.hpp"

namespace fairvec {

struct BiasSubspace {
  std::size_t dim = 0;
  std::vector<double> basis;  // k x dim, orthonormal rows
  std::vector<double> explained_variance;  // descending, length k

  std::size_t rank() const { return explained_variance.size(); }
  std::span<const double> row(std::size_t j) const { return {basis.data() + j * dim, dim}; }

  // Orthogonal projection of v onto the subspace.
  std::vector<double> project(std::span<const double> v) const;
};

// Each equality set is centered on its own mean, the differences are
// stacked, and the top-k eigenvectors of their covariance form the basis.
// k is clamped to the numerical rank with a warning. Throws DegenerateError
// when every difference vector is zero.
BiasSubspace identify_bias_subspace(const std::vector<VectorSet>& equality_sets, std::size_t k);

struct NeutralizeResult {
  EmbeddingStore store;
  std::size_t neutralized = 0;
  std::vector<std::string> degenerate;  // residual norm below 1e-10, left unchanged
};

// Requires a normalized store. Rows listed in `preserve` are untouched;
// every other row w becomes (w - P_B w) / |w - P_B w|.
NeutralizeResult neutralize(const EmbeddingStore& store, const BiasSubspace& subspace,
                            std::span<const std::size_t> preserve);

struct EqualizeResult {
  EmbeddingStore store;
  std::vector<std::string> warnings;
};

// Requires a normalized store. For each set with mean mu and off-subspace
// part nu = mu - P_B mu, member w becomes
//   nu + sqrt(1 - |nu|^2) * (P_B w - P_B mu) / |P_B w - P_B mu|.
EqualizeResult equalize(const EmbeddingStore& store, const BiasSubspace& subspace,
                        const std::vector<ResolvedEqualitySet>& equality_sets);

struct HardDebiasResult {
  EmbeddingStore store;
  BiasSubspace subspace;
  std::size_t neutralized = 0;
  std::vector<std::string> degenerate;
  std::vector<std::string> warnings;
};

// Default component count: number of subclasses minus one.
std::size_t default_subspace_rank(const ResolvedLexicon& lexicon);

// normalize -> identify subspace -> neutralize -> equalize. The input
// store is not modified.
HardDebiasResult hard_debias(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                             std::size_t k);

}  // namespace fairvec
