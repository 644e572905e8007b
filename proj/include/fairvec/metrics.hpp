#pragma once

// Cosine-geometry bias measures: WEAT association and effect size, mean
// average cosine distance (MAC), analogy scoring, nearest neighbours.

#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "fairvec/embedding_store.hpp"
#include "fairvec/lexicon.hpp"

namespace fairvec {

using VectorSet = std::vector<std::span<const double>>;

// dot(u,v) / (|u||v|), or 0 when either vector is zero.
double cosine(std::span<const double> u, std::span<const double> v);
bool is_zero(std::span<const double> v);

// Mean cosine to a1 minus mean cosine to a2.
double association(std::span<const double> w, const VectorSet& a1, const VectorSet& a2);

struct WeatResult {
  double statistic = 0.0;
  double effect_size = 0.0;
  std::vector<double> target1_assoc;  // s(t, A1, A2) per T1 member
  std::vector<double> target2_assoc;
  std::size_t degenerate_pairs = 0;  // cosines involving a zero vector
};

// Effect size divides by the population standard deviation of the
// associations over T1 and T2 pooled. Throws DegenerateError when that
// deviation is zero.
WeatResult weat(const VectorSet& t1, const VectorSet& t2, const VectorSet& a1,
                const VectorSet& a2);

struct MacResult {
  double mac = 0.0;
  // per_pair[i][j]: mean over targets t of set i of s_MAC(t, A_j).
  std::vector<std::vector<double>> per_pair;
  std::size_t degenerate_pairs = 0;
};

// s_MAC(t, A) = mean over a in A of (1 - cos(t, a)); mac is the mean of
// s_MAC over every (t, A_j) with t ranging over all targets of all sets.
MacResult mac(const std::vector<VectorSet>& targets, const std::vector<VectorSet>& attributes);

struct WeatPair {
  std::size_t subclass_a;
  std::size_t subclass_b;
  std::size_t attribute_a;
  std::size_t attribute_b;
  WeatResult result;
};

struct WeatSummary {
  std::vector<WeatPair> pairs;
  double aggregate = 0.0;  // mean |effect size| over all pairs
};

// WEAT for every unordered subclass pair crossed with every unordered
// attribute-set pair, in lexicographic index order.
WeatSummary weat_all_pairs(const EmbeddingStore& store, const ResolvedLexicon& lexicon);

// MAC with one target set per subclass against all attribute sets.
MacResult lexicon_mac(const EmbeddingStore& store, const ResolvedLexicon& lexicon);

struct AnalogyScore {
  std::string a, b, x, y;
  double score = 0.0;
};

inline constexpr double kDefaultAnalogyDelta = 1.0;

// cos(a - b, x - y) when |x - y| <= delta, else 0. Zero difference
// vectors score 0.
double analogy_score(std::span<const double> a, std::span<const double> b,
                     std::span<const double> x, std::span<const double> y, double delta);

// Throws InputError for out-of-vocabulary words.
AnalogyScore score_analogy(const EmbeddingStore& store, const std::string& a,
                           const std::string& b, const std::string& x, const std::string& y,
                           double delta = kDefaultAnalogyDelta);

// Scores every (a, b, x, y) with a from `left`, x from `right`, b and y
// from `attributes`, a != x and b != y. Keeps |score| >= min_score, sorted
// by score descending, ties by the (a, b, x, y) strings.
std::vector<AnalogyScore> enumerate_analogies(const EmbeddingStore& store,
                                              std::span<const std::size_t> left,
                                              std::span<const std::size_t> right,
                                              std::span<const std::size_t> attributes,
                                              double delta, double min_score);

struct Neighbor {
  std::size_t index;
  double cosine;
};

std::vector<double> row_norms(const EmbeddingStore& store);

// Top-n rows by cosine to row `query`, skipping the query and `exclude`.
// Ties go to the lower row index.
std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, std::size_t query,
                                        std::size_t n,
                                        const std::unordered_set<std::size_t>& exclude,
                                        std::span<const double> norms = {});

std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, const std::string& word,
                                        std::size_t n,
                                        const std::unordered_set<std::size_t>& exclude = {});

}  // namespace fairvec
