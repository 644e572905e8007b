#include "fairvec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "fairvec/error.hpp"
#include "fairvec/parallel.hpp"
#include "fairvec/simd/kernels.hpp"

namespace fairvec {

namespace {

void check_dims(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InputError("dimension mismatch: " + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()));
  }
}

double mean_cosine(std::span<const double> w, const VectorSet& set, std::size_t& degenerate) {
  if (set.empty()) throw InputError("attribute set is empty");
  double sum = 0.0;
  for (const auto& a : set) {
    check_dims(w, a);
    const double c = cosine(w, a);
    if (c == 0.0 && (is_zero(w) || is_zero(a))) ++degenerate;
    sum += c;
  }
  return sum / static_cast<double>(set.size());
}

// Population deviation over two groups, summed group by group so that
// exchanging the groups gives a bit-identical result.
double pooled_population_std(const std::vector<double>& g1, const std::vector<double>& g2) {
  const double n = static_cast<double>(g1.size() + g2.size());
  const double s1 = std::accumulate(g1.begin(), g1.end(), 0.0);
  const double s2 = std::accumulate(g2.begin(), g2.end(), 0.0);
  const double mean = (s1 + s2) / n;
  double q1 = 0.0;
  double q2 = 0.0;
  for (double v : g1) q1 += (v - mean) * (v - mean);
  for (double v : g2) q2 += (v - mean) * (v - mean);
  return std::sqrt((q1 + q2) / n);
}

bool quadruple_less(const AnalogyScore& l, const AnalogyScore& r) {
  if (l.score != r.score) return l.score > r.score;
  return std::tie(l.a, l.b, l.x, l.y) < std::tie(r.a, r.b, r.x, r.y);
}

}  // namespace

bool is_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

double cosine(std::span<const double> u, std::span<const double> v) {
  check_dims(u, v);
  const double uu = simd::squared_norm(u);
  const double vv = simd::squared_norm(v);
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return simd::dot(u, v) / (std::sqrt(uu) * std::sqrt(vv));
}

double association(std::span<const double> w, const VectorSet& a1, const VectorSet& a2) {
  std::size_t degenerate = 0;
  return mean_cosine(w, a1, degenerate) - mean_cosine(w, a2, degenerate);
}

WeatResult weat(const VectorSet& t1, const VectorSet& t2, const VectorSet& a1,
                const VectorSet& a2) {
  if (t1.empty() || t2.empty()) throw InputError("weat: target set is empty");
  if (a1.empty() || a2.empty()) throw InputError("weat: attribute set is empty");
  WeatResult r;
  auto assoc = [&](std::span<const double> w) {
    return mean_cosine(w, a1, r.degenerate_pairs) - mean_cosine(w, a2, r.degenerate_pairs);
  };
  for (const auto& t : t1) r.target1_assoc.push_back(assoc(t));
  for (const auto& t : t2) r.target2_assoc.push_back(assoc(t));

  const double sum1 = std::accumulate(r.target1_assoc.begin(), r.target1_assoc.end(), 0.0);
  const double sum2 = std::accumulate(r.target2_assoc.begin(), r.target2_assoc.end(), 0.0);
  r.statistic = sum1 - sum2;
  const double mean1 = sum1 / static_cast<double>(t1.size());
  const double mean2 = sum2 / static_cast<double>(t2.size());
  const double sd = pooled_population_std(r.target1_assoc, r.target2_assoc);
  if (!(sd > 0.0)) {
    throw DegenerateError("weat: associations have zero standard deviation");
  }
  r.effect_size = (mean1 - mean2) / sd;
  return r;
}

MacResult mac(const std::vector<VectorSet>& targets, const std::vector<VectorSet>& attributes) {
  if (targets.empty() || attributes.empty()) throw InputError("mac: no target or attribute sets");
  MacResult r;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& tset : targets) {
    if (tset.empty()) throw InputError("mac: target set is empty");
    std::vector<double> row;
    for (const auto& aset : attributes) {
      if (aset.empty()) throw InputError("mac: attribute set is empty");
      double pair_sum = 0.0;
      for (const auto& t : tset) {
        double s = 0.0;
        for (const auto& a : aset) {
          check_dims(t, a);
          const double c = cosine(t, a);
          if (c == 0.0 && (is_zero(t) || is_zero(a))) ++r.degenerate_pairs;
          s += 1.0 - c;
        }
        s /= static_cast<double>(aset.size());
        pair_sum += s;
        total += s;
        ++count;
      }
      row.push_back(pair_sum / static_cast<double>(tset.size()));
    }
    r.per_pair.push_back(std::move(row));
  }
  r.mac = total / static_cast<double>(count);
  return r;
}

WeatSummary weat_all_pairs(const EmbeddingStore& store, const ResolvedLexicon& lexicon) {
  const auto& subs = lexicon.subclasses;
  const auto& attrs = lexicon.attribute_sets;
  if (subs.size() < 2) throw InputError("weat_all_pairs: need at least 2 subclasses");
  if (attrs.size() < 2) throw InputError("weat_all_pairs: need at least 2 attribute sets");

  std::vector<VectorSet> tv;
  std::vector<VectorSet> av;
  for (const auto& s : subs) tv.push_back(gather(store, s.targets));
  for (const auto& a : attrs) av.push_back(gather(store, a.words));

  WeatSummary out;
  double sum = 0.0;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    for (std::size_t j = i + 1; j < subs.size(); ++j) {
      for (std::size_t k = 0; k < attrs.size(); ++k) {
        for (std::size_t l = k + 1; l < attrs.size(); ++l) {
          WeatPair p{i, j, k, l, weat(tv[i], tv[j], av[k], av[l])};
          sum += std::abs(p.result.effect_size);
          out.pairs.push_back(std::move(p));
        }
      }
    }
  }
  out.aggregate = sum / static_cast<double>(out.pairs.size());
  return out;
}

MacResult lexicon_mac(const EmbeddingStore& store, const ResolvedLexicon& lexicon) {
  std::vector<VectorSet> tv;
  std::vector<VectorSet> av;
  for (const auto& s : lexicon.subclasses) tv.push_back(gather(store, s.targets));
  for (const auto& a : lexicon.attribute_sets) av.push_back(gather(store, a.words));
  return mac(tv, av);
}

double analogy_score(std::span<const double> a, std::span<const double> b,
                     std::span<const double> x, std::span<const double> y, double delta) {
  check_dims(a, b);
  check_dims(x, y);
  check_dims(a, x);
  const std::size_t d = a.size();
  std::vector<double> ab(a.begin(), a.end());
  std::vector<double> xy(x.begin(), x.end());
  for (std::size_t i = 0; i < d; ++i) {
    ab[i] -= b[i];
    xy[i] -= y[i];
  }
  const double xy_norm = std::sqrt(simd::squared_norm(xy));
  if (xy_norm == 0.0 || xy_norm > delta) return 0.0;
  return std::clamp(cosine(ab, xy), -1.0, 1.0);
}

AnalogyScore score_analogy(const EmbeddingStore& store, const std::string& a,
                           const std::string& b, const std::string& x, const std::string& y,
                           double delta) {
  auto fetch = [&](const std::string& w) {
    auto v = store.vector(w);
    if (!v) throw InputError("analogy word not in vocabulary: " + w);
    return v->values;
  };
  return AnalogyScore{a, b, x, y, analogy_score(fetch(a), fetch(b), fetch(x), fetch(y), delta)};
}

std::vector<AnalogyScore> enumerate_analogies(const EmbeddingStore& store,
                                              std::span<const std::size_t> left,
                                              std::span<const std::size_t> right,
                                              std::span<const std::size_t> attributes,
                                              double delta, double min_score) {
  const std::size_t d = store.dim();
  struct Diff {
    std::size_t first;
    std::size_t second;
    bool zero;
  };

  // Unit difference vectors for (a, b); rows of `xy_unit` for admissible (x, y).
  std::vector<Diff> ab_pairs;
  std::vector<double> ab_unit;
  for (std::size_t a : left) {
    for (std::size_t b : attributes) {
      std::vector<double> diff(store.row(a).begin(), store.row(a).end());
      simd::axpy(-1.0, store.row(b), diff);
      const double norm = std::sqrt(simd::squared_norm(diff));
      if (norm > 0.0) simd::scale(1.0 / norm, diff);
      ab_pairs.push_back({a, b, norm == 0.0});
      ab_unit.insert(ab_unit.end(), diff.begin(), diff.end());
    }
  }
  std::vector<Diff> xy_pairs;
  std::vector<double> xy_unit;
  std::vector<Diff> xy_zero_scored;  // pairs that always score 0
  for (std::size_t x : right) {
    for (std::size_t y : attributes) {
      std::vector<double> diff(store.row(x).begin(), store.row(x).end());
      simd::axpy(-1.0, store.row(y), diff);
      const double norm = std::sqrt(simd::squared_norm(diff));
      if (norm == 0.0 || norm > delta) {
        xy_zero_scored.push_back({x, y, true});
        continue;
      }
      simd::scale(1.0 / norm, diff);
      xy_pairs.push_back({x, y, false});
      xy_unit.insert(xy_unit.end(), diff.begin(), diff.end());
    }
  }

  std::vector<std::vector<AnalogyScore>> partial(ab_pairs.size());
  parallel_for(
      ab_pairs.size(),
      [&](std::size_t begin, std::size_t end) {
        std::vector<double> scores(xy_pairs.size());
        for (std::size_t i = begin; i < end; ++i) {
          const Diff& ab = ab_pairs[i];
          auto& bucket = partial[i];
          auto emit = [&](const Diff& xy, double s) {
            if (ab.first == xy.first || ab.second == xy.second) return;
            if (std::abs(s) < min_score) return;
            bucket.push_back({store.word(ab.first), store.word(ab.second), store.word(xy.first),
                              store.word(xy.second), s});
          };
          if (ab.zero) {
            for (const auto& xy : xy_pairs) emit(xy, 0.0);
          } else if (!xy_pairs.empty()) {
            simd::gemv(xy_unit, xy_pairs.size(), {ab_unit.data() + i * d, d}, scores);
            for (std::size_t k = 0; k < xy_pairs.size(); ++k) {
              emit(xy_pairs[k], std::clamp(scores[k], -1.0, 1.0));
            }
          }
          for (const auto& xy : xy_zero_scored) emit(xy, 0.0);
        }
      },
      8);

  std::vector<AnalogyScore> out;
  for (auto& bucket : partial) {
    out.insert(out.end(), std::make_move_iterator(bucket.begin()),
               std::make_move_iterator(bucket.end()));
  }
  std::sort(out.begin(), out.end(), quadruple_less);
  return out;
}

std::vector<double> row_norms(const EmbeddingStore& store) {
  std::vector<double> norms(store.size());
  parallel_for(store.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) norms[i] = std::sqrt(simd::squared_norm(store.row(i)));
  });
  return norms;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, std::size_t query,
                                        std::size_t n,
                                        const std::unordered_set<std::size_t>& exclude,
                                        std::span<const double> norms) {
  if (query >= store.size()) throw InputError("nearest_neighbors: query row out of range");
  if (n == 0) throw InputError("nearest_neighbors: n must be at least 1");
  std::vector<double> own_norms;
  if (norms.empty()) {
    own_norms = row_norms(store);
    norms = own_norms;
  }
  const std::size_t rows = store.size();
  std::vector<double> dots(rows);
  const auto q = store.row(query);
  const auto matrix = store.matrix();
  const std::size_t d = store.dim();
  parallel_for(rows, [&](std::size_t begin, std::size_t end) {
    simd::gemv(matrix.subspan(begin * d, (end - begin) * d), end - begin, q,
               std::span<double>(dots).subspan(begin, end - begin));
  });

  const double qn = norms[query];
  std::vector<Neighbor> candidates;
  candidates.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (i == query || exclude.contains(i)) continue;
    const double denom = qn * norms[i];
    candidates.push_back({i, denom == 0.0 ? 0.0 : dots[i] / denom});
  }
  const std::size_t k = std::min(n, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), [](const Neighbor& l, const Neighbor& r) {
                      if (l.cosine != r.cosine) return l.cosine > r.cosine;
                      return l.index < r.index;
                    });
  candidates.resize(k);
  return candidates;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, const std::string& word,
                                        std::size_t n,
                                        const std::unordered_set<std::size_t>& exclude) {
  auto idx = store.index_of(word);
  if (!idx) throw InputError("nearest_neighbors: word not in vocabulary: " + word);
  return nearest_neighbors(store, *idx, n, exclude);
}

}  // namespace fairvec
