#include "fairvec/conceptor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>

#include "fairvec/error.hpp"
#include "fairvec/log.hpp"
#include "fairvec/parallel.hpp"
#include "fairvec/simd/kernels.hpp"

namespace fairvec {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void write_le(std::ostream& out, T value) {
  auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(value);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw ParseError(path.string() + ": truncated conceptor file");
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(static_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(bits));
}

}  // namespace

SquareMatrix correlation_matrix(const VectorSet& vectors, bool center) {
  if (vectors.empty()) throw InputError("correlation matrix: no vectors");
  const std::size_t d = vectors.front().size();
  RowMatrix x(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != d) throw InputError("correlation matrix: dimension mismatch");
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(vectors[i].data(), d);
  }
  if (center) x.rowwise() -= x.colwise().mean();
  RowMatrix r = x.transpose() * x / static_cast<double>(vectors.size());
  r = 0.5 * (r + r.transpose()).eval();
  return SquareMatrix{d, std::vector<double>(r.data(), r.data() + r.size())};
}

Conceptor compute_conceptor(const SquareMatrix& correlation, double aperture) {
  if (!(aperture > 0.0) || !std::isfinite(aperture)) {
    throw InputError("conceptor: aperture must be positive and finite");
  }
  for (double v : correlation.values) {
    if (!std::isfinite(v)) throw ComputationError("conceptor: correlation matrix is not finite");
  }
  const auto d = static_cast<Eigen::Index>(correlation.dim);
  Eigen::Map<const RowMatrix> r(correlation.values.data(), d, d);
  const Eigen::MatrixXd dense = r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
  if (eig.info() != Eigen::Success) throw ComputationError("conceptor: eigensolver failed");

  const double inv_sq = 1.0 / (aperture * aperture);
  Eigen::VectorXd mapped(d);
  Conceptor c;
  c.aperture = aperture;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double s = std::max(eig.eigenvalues()(i), 0.0);
    mapped(i) = s / (s + inv_sq);
    c.eigenvalues.push_back(mapped(i));
  }
  const Eigen::MatrixXd& u = eig.eigenvectors();
  RowMatrix m = u * mapped.asDiagonal() * u.transpose();
  m = 0.5 * (m + m.transpose()).eval();
  c.matrix = SquareMatrix{correlation.dim, std::vector<double>(m.data(), m.data() + m.size())};
  return c;
}

EmbeddingStore apply_negated(const EmbeddingStore& store, const Conceptor& conceptor) {
  const std::size_t d = store.dim();
  if (conceptor.matrix.dim != d) throw InputError("apply_negated: dimension mismatch");
  std::vector<double> negated(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      negated[r * d + c] = (r == c ? 1.0 : 0.0) - conceptor.matrix(r, c);
    }
  }
  EmbeddingStore out = store;
  parallel_for(store.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      simd::gemv(negated, d, store.row(i), out.mutable_row(i));
    }
  });
  out.set_normalized(false);
  return out;
}

ConceptorDebiasResult conceptor_debias(const EmbeddingStore& store,
                                       const ResolvedLexicon& lexicon, double aperture,
                                       bool center) {
  const auto bias_words = lexicon.identity_indices();
  if (bias_words.empty()) throw InputError("conceptor debias: no bias words");
  VectorSet vectors;
  for (std::size_t i : bias_words) vectors.push_back(store.row(i));
  Conceptor c = compute_conceptor(correlation_matrix(vectors, center), aperture);
  c.source_word_count = bias_words.size();
  log().info("conceptor_debias aperture={} bias_words={} centered={} max_eigenvalue={}", aperture,
             bias_words.size(), center, c.eigenvalues.empty() ? 0.0 : c.eigenvalues.back());
  EmbeddingStore out = apply_negated(store, c);
  return ConceptorDebiasResult{std::move(out), std::move(c)};
}

void save_conceptor(const Conceptor& conceptor, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  write_le<std::uint64_t>(out, conceptor.matrix.dim);
  write_le<double>(out, conceptor.aperture);
  for (double v : conceptor.matrix.values) write_le<double>(out, v);
  if (!out) throw InputError("write failed: " + path.string());
}

Conceptor load_conceptor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open conceptor file: " + path.string());
  const auto d = read_le<std::uint64_t>(in, path);
  if (d == 0 || d > (1u << 16)) throw ParseError(path.string() + ": implausible dimension");
  Conceptor c;
  c.aperture = read_le<double>(in, path);
  c.matrix.dim = static_cast<std::size_t>(d);
  c.matrix.values.resize(c.matrix.dim * c.matrix.dim);
  for (double& v : c.matrix.values) v = read_le<double>(in, path);
  Eigen::Map<const RowMatrix> m(c.matrix.values.data(), static_cast<Eigen::Index>(d),
                                static_cast<Eigen::Index>(d));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(m), Eigen::EigenvaluesOnly);
  c.eigenvalues.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + d);
  return c;
}

}  // namespace fairvec
