#pragma once

// Conceptor debiasing. A conceptor C = R (R + alpha^-2 I)^-1 built from the
// correlation matrix R of a set of bias-word vectors is a soft projector onto
// their dominant directions; applying I - C dampens those directions in
// every embedding.

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "fairvec/embedding_store.hpp"
#include "fairvec/lexicon.hpp"
#include "fairvec/metrics.hpp"

namespace fairvec {

inline constexpr double kDefaultAperture = 10.0;

// Dense symmetric d x d matrix, row-major.
struct SquareMatrix {
  std::size_t dim = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * dim + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }
};

// R = X^T X / n, or the covariance when `center` is set.
SquareMatrix correlation_matrix(const VectorSet& vectors, bool center = false);

struct Conceptor {
  SquareMatrix matrix;
  double aperture = kDefaultAperture;
  std::size_t source_word_count = 0;
  std::vector<double> eigenvalues;  // ascending
};

// Eigendecomposition route: each eigenvalue s of R maps to
// s / (s + alpha^-2) with eigenvectors kept. Tiny negative eigenvalues of R
// from rounding are treated as zero.
Conceptor compute_conceptor(const SquareMatrix& correlation, double aperture);

// Every row x becomes (I - C) x. No renormalization.
EmbeddingStore apply_negated(const EmbeddingStore& store, const Conceptor& conceptor);

struct ConceptorDebiasResult {
  EmbeddingStore store;
  Conceptor conceptor;
};

// Bias words are all subclass targets plus all equality-set terms.
ConceptorDebiasResult conceptor_debias(const EmbeddingStore& store,
                                       const ResolvedLexicon& lexicon,
                                       double aperture = kDefaultAperture, bool center = false);

// Binary layout: uint64 d, float64 alpha, then d*d float64 row-major, all
// little-endian.
void save_conceptor(const Conceptor& conceptor, const std::filesystem::path& path);
Conceptor load_conceptor(const std::filesystem::path& path);

}  // namespace fairvec
