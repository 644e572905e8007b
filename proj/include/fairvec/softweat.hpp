#pragma once

// SoftWEAT debiasing. Each subclass's target set is widened with nearest
// neighbours, the attribute sets it is biased toward are found with WEAT,
// and the widened set is translated so its centroid moves onto a null-space
// direction of those attribute vectors, scaled by lambda.

#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "fairvec/embedding_store.hpp"
#include "fairvec/lexicon.hpp"

namespace fairvec {

struct SoftWeatConfig {
  double lambda = 0.5;
  double threshold = 0.5;
  std::size_t neighbors = 5;
  std::size_t max_basis_vectors = 10;
};

// Targets plus the n nearest neighbours of each target, skipping `exclude`.
// Order: targets first, then neighbours in discovery order, no repeats.
std::vector<std::size_t> expand_targets(const EmbeddingStore& store,
                                        std::span<const std::size_t> targets, std::size_t n,
                                        const std::unordered_set<std::size_t>& exclude);

// Attribute sets A1 (ascending index) for which some WEAT over
// (subclass targets, other subclass targets, A1, A2) has effect size above
// `threshold`. Degenerate combinations are ignored.
std::vector<std::size_t> select_biased_attributes(const EmbeddingStore& store,
                                                  const ResolvedLexicon& lexicon,
                                                  std::size_t subclass, double threshold);

// Orthonormal basis of {v : M v = 0} for the m x d row-major matrix M, from
// a full singular decomposition; singular values below 1e-10 (relative to
// max(1, largest)) count as zero. Throws ComputationError when empty.
std::vector<std::vector<double>> null_space_basis(std::span<const double> matrix,
                                                  std::size_t rows, std::size_t cols);

struct TranslationCandidate {
  std::size_t basis_index = 0;
  int sign = 1;
  double aggregate_weat = 0.0;
};

struct SubclassPlan {
  std::size_t subclass = 0;
  std::string name;
  std::vector<std::size_t> expanded;
  std::vector<std::size_t> selected_attributes;
  bool skipped = false;
  std::size_t null_space_dim = 0;
  std::vector<TranslationCandidate> candidates;
  std::size_t chosen = 0;         // index into candidates
  double centroid_norm = 0.0;
  std::vector<double> translation;  // full displacement c*v - centroid
};

struct SoftWeatPlan {
  SoftWeatConfig config;
  std::vector<SubclassPlan> subclasses;
};

// Scores the candidates +-v for the first max_basis_vectors null-space
// vectors of the stacked selected-attribute matrix. Each candidate is
// evaluated at full translation: the subclass's targets move by c*v - t,
// and the score is the mean |effect size| over every WEAT pairing a
// selected attribute set against another set and this subclass against
// another subclass. The lowest score wins.
void choose_translation(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                        SubclassPlan& plan, std::size_t max_basis_vectors);

// Moves every expanded row of each non-skipped plan by lambda * translation.
// lambda == 0 returns an exact copy.
EmbeddingStore apply_plan(const EmbeddingStore& store, const SoftWeatPlan& plan, double lambda);

struct SoftWeatResult {
  EmbeddingStore store;
  SoftWeatPlan plan;
};

// Plans subclasses in lexicon order, each against the store with earlier
// subclasses fully translated, then applies all plans scaled by lambda.
// Rows outside the expanded sets are copied bit for bit.
SoftWeatResult softweat_debias(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                               const SoftWeatConfig& config = {});

}  // namespace fairvec
