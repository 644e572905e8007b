#include "fairvec/softweat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fairvec/error.hpp"
#include "fairvec/log.hpp"
#include "fairvec/metrics.hpp"
#include "fairvec/simd/kernels.hpp"

namespace fairvec {

namespace {

std::vector<std::size_t> indices_of(const std::vector<ResolvedWord>& words) {
  std::vector<std::size_t> out;
  for (const auto& w : words) out.push_back(w.index);
  return out;
}

// Mean |effect size| over the subclass's selected pairings, with the
// subclass's targets replaced by `moved`.
double selected_aggregate(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                          std::size_t subclass, std::span<const std::size_t> selected,
                          const VectorSet& moved) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t o = 0; o < lexicon.subclasses.size(); ++o) {
    if (o == subclass) continue;
    const VectorSet other = gather(store, lexicon.subclasses[o].targets);
    for (std::size_t k : selected) {
      const VectorSet a1 = gather(store, lexicon.attribute_sets[k].words);
      for (std::size_t l = 0; l < lexicon.attribute_sets.size(); ++l) {
        if (l == k) continue;
        try {
          const auto r = weat(moved, other, a1, gather(store, lexicon.attribute_sets[l].words));
          sum += std::abs(r.effect_size);
          ++count;
        } catch (const DegenerateError&) {
        }
      }
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

std::vector<std::size_t> expand_targets(const EmbeddingStore& store,
                                        std::span<const std::size_t> targets, std::size_t n,
                                        const std::unordered_set<std::size_t>& exclude) {
  std::vector<std::size_t> out;
  std::unordered_set<std::size_t> seen;
  for (std::size_t t : targets) {
    if (seen.insert(t).second) out.push_back(t);
  }
  if (n == 0) return out;
  const std::vector<double> norms = row_norms(store);
  for (std::size_t t : targets) {
    for (const Neighbor& nb : nearest_neighbors(store, t, n, exclude, norms)) {
      if (seen.insert(nb.index).second) out.push_back(nb.index);
    }
  }
  return out;
}

std::vector<std::size_t> select_biased_attributes(const EmbeddingStore& store,
                                                  const ResolvedLexicon& lexicon,
                                                  std::size_t subclass, double threshold) {
  const auto& attrs = lexicon.attribute_sets;
  if (attrs.size() < 2) throw InputError("select_biased_attributes: need at least 2 attribute sets");
  const VectorSet own = gather(store, lexicon.subclasses.at(subclass).targets);
  std::vector<VectorSet> attr_vectors;
  for (const auto& a : attrs) attr_vectors.push_back(gather(store, a.words));

  std::vector<std::size_t> selected;
  for (std::size_t k = 0; k < attrs.size(); ++k) {
    bool biased = false;
    for (std::size_t o = 0; o < lexicon.subclasses.size() && !biased; ++o) {
      if (o == subclass) continue;
      const VectorSet other = gather(store, lexicon.subclasses[o].targets);
      for (std::size_t l = 0; l < attrs.size() && !biased; ++l) {
        if (l == k) continue;
        try {
          biased = weat(own, other, attr_vectors[k], attr_vectors[l]).effect_size > threshold;
        } catch (const DegenerateError&) {
        }
      }
    }
    if (biased) selected.push_back(k);
  }
  return selected;
}

std::vector<std::vector<double>> null_space_basis(std::span<const double> matrix,
                                                  std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw InputError("null space: empty matrix");
  if (matrix.size() != rows * cols) throw InputError("null space: matrix size mismatch");
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> m(matrix.data(), static_cast<Eigen::Index>(rows),
                                static_cast<Eigen::Index>(cols));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff = 1e-10 * std::max(1.0, largest);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > cutoff ? 1 : 0;

  std::vector<std::vector<double>> basis;
  const Eigen::MatrixXd& v = svd.matrixV();
  for (Eigen::Index c = rank; c < v.cols(); ++c) {
    Eigen::VectorXd col = v.col(c).normalized();
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    basis.emplace_back(col.data(), col.data() + col.size());
  }
  if (basis.empty()) {
    throw ComputationError(
        "null space is empty: the selected attribute vectors span the whole space; reduce the "
        "attribute sets or the embedding dimension");
  }
  return basis;
}

void choose_translation(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                        SubclassPlan& plan, std::size_t max_basis_vectors) {
  const std::size_t d = store.dim();
  std::vector<double> stacked;
  std::size_t rows = 0;
  for (std::size_t k : plan.selected_attributes) {
    for (const auto& w : lexicon.attribute_sets[k].words) {
      auto r = store.row(w.index);
      stacked.insert(stacked.end(), r.begin(), r.end());
      ++rows;
    }
  }
  const auto basis = null_space_basis(stacked, rows, d);
  plan.null_space_dim = basis.size();

  std::vector<double> centroid(d, 0.0);
  for (std::size_t i : plan.expanded) simd::axpy(1.0, store.row(i), centroid);
  simd::scale(1.0 / static_cast<double>(plan.expanded.size()), centroid);
  plan.centroid_norm = std::sqrt(simd::squared_norm(centroid));

  const auto& targets = lexicon.subclasses[plan.subclass].targets;
  std::vector<std::vector<double>> moved(targets.size(), std::vector<double>(d));
  VectorSet moved_view;
  for (const auto& m : moved) moved_view.push_back(m);

  plan.candidates.clear();
  const std::size_t usable = std::min(max_basis_vectors, basis.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> displacement(d);
  for (std::size_t b = 0; b < usable; ++b) {
    for (int sign : {1, -1}) {
      for (std::size_t j = 0; j < d; ++j) {
        displacement[j] = sign * plan.centroid_norm * basis[b][j] - centroid[j];
      }
      for (std::size_t t = 0; t < targets.size(); ++t) {
        auto src = store.row(targets[t].index);
        for (std::size_t j = 0; j < d; ++j) moved[t][j] = src[j] + displacement[j];
      }
      TranslationCandidate cand{b, sign,
                                selected_aggregate(store, lexicon, plan.subclass,
                                                   plan.selected_attributes, moved_view)};
      if (cand.aggregate_weat < best) {
        best = cand.aggregate_weat;
        plan.chosen = plan.candidates.size();
        plan.translation = displacement;
      }
      plan.candidates.push_back(cand);
    }
  }
}

EmbeddingStore apply_plan(const EmbeddingStore& store, const SoftWeatPlan& plan, double lambda) {
  EmbeddingStore out = store;
  if (lambda == 0.0) return out;
  bool changed = false;
  for (const auto& sp : plan.subclasses) {
    if (sp.skipped) continue;
    for (std::size_t i : sp.expanded) {
      auto row = out.mutable_row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] + lambda * sp.translation[j];
      changed = true;
    }
  }
  if (changed) out.set_normalized(false);
  return out;
}

SoftWeatResult softweat_debias(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                               const SoftWeatConfig& config) {
  if (!std::isfinite(config.lambda)) throw InputError("softweat: lambda must be finite");
  SoftWeatPlan plan;
  plan.config = config;

  const auto attribute_rows = lexicon.attribute_indices();
  std::unordered_set<std::size_t> claimed;
  EmbeddingStore working = store;
  for (std::size_t s = 0; s < lexicon.subclasses.size(); ++s) {
    SubclassPlan sp;
    sp.subclass = s;
    sp.name = lexicon.subclasses[s].name;

    std::unordered_set<std::size_t> exclude(claimed);
    exclude.insert(attribute_rows.begin(), attribute_rows.end());
    for (std::size_t o = 0; o < lexicon.subclasses.size(); ++o) {
      if (o == s) continue;
      for (const auto& w : lexicon.subclasses[o].targets) exclude.insert(w.index);
    }
    const auto own = indices_of(lexicon.subclasses[s].targets);
    sp.expanded = expand_targets(working, own, config.neighbors, exclude);
    claimed.insert(sp.expanded.begin(), sp.expanded.end());

    sp.selected_attributes = select_biased_attributes(working, lexicon, s, config.threshold);
    if (sp.selected_attributes.empty()) {
      sp.skipped = true;
      log().info("softweat_subclass_skipped subclass={} reason=no_biased_attribute_set", sp.name);
      plan.subclasses.push_back(std::move(sp));
      continue;
    }
    choose_translation(working, lexicon, sp, config.max_basis_vectors);
    for (std::size_t i : sp.expanded) simd::axpy(1.0, sp.translation, working.mutable_row(i));
    log().info("softweat_plan subclass={} expanded={} selected={} null_space_dim={} chosen={} "
               "score={}",
               sp.name, sp.expanded.size(), sp.selected_attributes.size(), sp.null_space_dim,
               sp.chosen, sp.candidates[sp.chosen].aggregate_weat);
    plan.subclasses.push_back(std::move(sp));
  }

  EmbeddingStore out = apply_plan(store, plan, config.lambda);
  return SoftWeatResult{std::move(out), std::move(plan)};
}

}  // namespace fairvec
