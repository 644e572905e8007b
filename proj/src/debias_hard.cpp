#include "fairvec/debias_hard.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <Eigen/Dense>

#include "fairvec/error.hpp"
#include "fairvec/log.hpp"
#include "fairvec/parallel.hpp"
#include "fairvec/simd/kernels.hpp"

namespace fairvec {

namespace {

constexpr double kResidualFloor = 1e-10;

void require_normalized(const EmbeddingStore& store, const char* op) {
  if (!store.normalized()) {
    throw InputError(std::string(op) + ": store must be normalized first");
  }
}

// Removes the subspace component in place, one basis row at a time.
void remove_projection(const BiasSubspace& b, std::span<double> v) {
  for (std::size_t j = 0; j < b.rank(); ++j) simd::axpy(-simd::dot(b.row(j), v), b.row(j), v);
}

}  // namespace

std::vector<double> BiasSubspace::project(std::span<const double> v) const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t j = 0; j < rank(); ++j) simd::axpy(simd::dot(row(j), v), row(j), out);
  return out;
}

BiasSubspace identify_bias_subspace(const std::vector<VectorSet>& equality_sets, std::size_t k) {
  if (equality_sets.empty()) throw InputError("bias subspace: no equality sets");
  const std::size_t d = equality_sets.front().front().size();
  if (k == 0) throw InputError("bias subspace: k must be at least 1");
  if (k > d) throw InputError("bias subspace: k exceeds the embedding dimension");

  std::size_t rows = 0;
  for (const auto& set : equality_sets) rows += set.size();
  Eigen::MatrixXd diffs(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  Eigen::Index r = 0;
  for (const auto& set : equality_sets) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (const auto& v : set) mean += Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    mean /= static_cast<double>(set.size());
    for (const auto& v : set) {
      diffs.row(r++) = (Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()) - mean).transpose();
    }
  }
  if (diffs.isZero(0.0)) throw DegenerateError("bias subspace: all equality-set members coincide");

  const Eigen::RowVectorXd center = diffs.colwise().mean();
  diffs.rowwise() -= center;
  const Eigen::MatrixXd cov = diffs.transpose() * diffs / static_cast<double>(rows);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw ComputationError("bias subspace: eigensolver failed");

  // Eigen orders eigenvalues ascending.
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values(values.size() - 1);
  if (!(top > 0.0)) throw DegenerateError("bias subspace: zero variance");
  const double tol = top * static_cast<double>(d) * 1e-12;
  std::size_t numerical_rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) numerical_rank += values(i) > tol ? 1 : 0;
  if (k > numerical_rank) {
    log().warn("bias_subspace_rank_clamped requested={} rank={}", k, numerical_rank);
    k = numerical_rank;
  }

  BiasSubspace b;
  b.dim = d;
  for (std::size_t j = 0; j < k; ++j) {
    const Eigen::Index col = values.size() - 1 - static_cast<Eigen::Index>(j);
    Eigen::VectorXd v = eig.eigenvectors().col(col).normalized();
    // Sign convention: the largest-magnitude component is positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    b.basis.insert(b.basis.end(), v.data(), v.data() + v.size());
    b.explained_variance.push_back(values(col));
  }
  return b;
}

NeutralizeResult neutralize(const EmbeddingStore& store, const BiasSubspace& subspace,
                            std::span<const std::size_t> preserve) {
  require_normalized(store, "neutralize");
  if (subspace.dim != store.dim()) throw InputError("neutralize: dimension mismatch");
  std::vector<char> keep(store.size(), 0);
  for (std::size_t i : preserve) keep.at(i) = 1;

  NeutralizeResult out{store, 0, {}};
  std::vector<char> degenerate(store.size(), 0);
  parallel_for(store.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> residual(store.dim());
    for (std::size_t i = begin; i < end; ++i) {
      if (keep[i]) continue;
      auto src = store.row(i);
      std::copy(src.begin(), src.end(), residual.begin());
      remove_projection(subspace, residual);
      // A second pass removes what cancellation left behind.
      remove_projection(subspace, residual);
      const double norm = std::sqrt(simd::squared_norm(residual));
      if (norm < kResidualFloor) {
        degenerate[i] = 1;
        continue;
      }
      simd::scale(1.0 / norm, residual);
      auto dst = out.store.mutable_row(i);
      std::copy(residual.begin(), residual.end(), dst.begin());
    }
  });
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (keep[i]) continue;
    if (degenerate[i]) {
      out.degenerate.push_back(store.word(i));
    } else {
      ++out.neutralized;
    }
  }
  if (!out.degenerate.empty()) {
    log().warn("neutralize_degenerate count={}", out.degenerate.size());
  }
  return out;
}

EqualizeResult equalize(const EmbeddingStore& store, const BiasSubspace& subspace,
                        const std::vector<ResolvedEqualitySet>& equality_sets) {
  require_normalized(store, "equalize");
  if (subspace.dim != store.dim()) throw InputError("equalize: dimension mismatch");
  const std::size_t d = store.dim();
  EqualizeResult out{store, {}};

  for (const auto& set : equality_sets) {
    std::vector<double> mu(d, 0.0);
    for (const auto& w : set.terms) simd::axpy(1.0, store.row(w.index), mu);
    simd::scale(1.0 / static_cast<double>(set.terms.size()), mu);
    const std::vector<double> mu_b = subspace.project(mu);
    std::vector<double> nu = mu;
    simd::axpy(-1.0, mu_b, nu);
    remove_projection(subspace, nu);
    const double nu_sq = simd::squared_norm(nu);
    double factor = 0.0;
    if (nu_sq > 1.0) {
      out.warnings.push_back("equality set containing '" + set.terms.front().word +
                             "': off-subspace mean exceeds unit norm");
    } else {
      factor = std::sqrt(1.0 - nu_sq);
    }

    // Unit in-subspace deviations of each member from the set mean.
    const std::size_t n = set.terms.size();
    Eigen::MatrixXd dirs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    bool usable = true;
    for (std::size_t m = 0; m < n; ++m) {
      std::vector<double> dev = subspace.project(store.row(set.terms[m].index));
      simd::axpy(-1.0, mu_b, dev);
      const double dev_norm = std::sqrt(simd::squared_norm(dev));
      if (dev_norm < kResidualFloor) {
        out.warnings.push_back("'" + set.terms[m].word + "' has no in-subspace deviation");
        usable = false;
        dirs.row(static_cast<Eigen::Index>(m)).setZero();
        continue;
      }
      dirs.row(static_cast<Eigen::Index>(m)) =
          Eigen::Map<const Eigen::RowVectorXd>(dev.data(), static_cast<Eigen::Index>(d)) / dev_norm;
    }
    // Snap the directions to the nearest regular simplex in their own span
    // so members also end up pairwise equidistant. For pairs this is the
    // identity.
    if (usable && n >= 2) {
      const Eigen::MatrixXd centered = dirs.rowwise() - dirs.colwise().mean();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      const auto m = static_cast<Eigen::Index>(n - 1);
      if (sv.size() >= m && sv(m - 1) > 1e-8 * std::max(1.0, sv(0))) {
        const double radius = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
        dirs = radius * svd.matrixU().leftCols(m) * svd.matrixV().leftCols(m).transpose();
      } else {
        out.warnings.push_back("equality set containing '" + set.terms.front().word +
                               "': bias subspace too small to make members equidistant");
      }
    }

    // Members are computed from the pre-equalize rows before any is written.
    std::vector<std::vector<double>> updated;
    for (std::size_t m = 0; m < n; ++m) {
      std::vector<double> v = nu;
      const Eigen::RowVectorXd dir = dirs.row(static_cast<Eigen::Index>(m));
      if (dir.isZero(0.0)) {
        const double nu_norm = std::sqrt(nu_sq);
        if (nu_norm > 0.0) simd::scale(1.0 / nu_norm, v);
      } else {
        std::vector<double> unit(dir.data(), dir.data() + d);
        // Remove numerical leakage out of the subspace before scaling.
        const std::vector<double> in_b = subspace.project(unit);
        const double len = std::sqrt(simd::squared_norm(in_b));
        simd::axpy(factor / len, in_b, v);
      }
      updated.push_back(std::move(v));
    }
    for (std::size_t m = 0; m < set.terms.size(); ++m) {
      auto dst = out.store.mutable_row(set.terms[m].index);
      std::copy(updated[m].begin(), updated[m].end(), dst.begin());
    }
  }
  for (const auto& w : out.warnings) log().warn("equalize_warning detail=\"{}\"", w);
  return out;
}

std::size_t default_subspace_rank(const ResolvedLexicon& lexicon) {
  return std::max<std::size_t>(1, lexicon.subclasses.size() - 1);
}

HardDebiasResult hard_debias(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                             std::size_t k) {
  if (lexicon.equality_sets.empty()) throw InputError("hard debias: no equality sets");
  const EmbeddingStore normalized = normalize_all(store);

  std::vector<VectorSet> sets;
  for (const auto& es : lexicon.equality_sets) sets.push_back(gather(normalized, es.terms));
  BiasSubspace subspace = identify_bias_subspace(sets, k);

  const auto preserve = lexicon.identity_indices();
  NeutralizeResult neutral = neutralize(normalized, subspace, preserve);
  EqualizeResult equal = equalize(neutral.store, subspace, lexicon.equality_sets);

  log().info("hard_debias k={} neutralized={} degenerate={} preserved={}", subspace.rank(),
             neutral.neutralized, neutral.degenerate.size(), preserve.size());
  return HardDebiasResult{std::move(equal.store), std::move(subspace), neutral.neutralized,
                          std::move(neutral.degenerate), std::move(equal.warnings)};
}

}  // namespace fairvec
