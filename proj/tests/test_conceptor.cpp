#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "fairvec/conceptor.hpp"
#include "fairvec/error.hpp"
#include "fairvec/simd/kernels.hpp"
#include "synthetic.hpp"

using namespace fairvec;
using fvtest::view;

namespace {

Eigen::MatrixXd dense(const SquareMatrix& m) {
  Eigen::MatrixXd out(m.dim, m.dim);
  for (std::size_t r = 0; r < m.dim; ++r) {
    for (std::size_t c = 0; c < m.dim; ++c) out(r, c) = m(r, c);
  }
  return out;
}

SquareMatrix square(const Eigen::MatrixXd& m) {
  SquareMatrix out{static_cast<std::size_t>(m.rows()), {}};
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.values.push_back(m(r, c));
  }
  return out;
}

SquareMatrix random_psd(fvtest::Rng& rng, std::size_t d, std::size_t n) {
  std::vector<std::vector<double>> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(fvtest::gaussian(rng, d));
  return correlation_matrix(view(xs));
}

}  // namespace

TEST_CASE("correlation matrix of a single unit vector") {
  const std::vector<std::vector<double>> xs{{1, 0}};
  const auto r = correlation_matrix(view(xs));
  CHECK(r.values == std::vector<double>{1, 0, 0, 0});
  CHECK_THROWS_AS(correlation_matrix({}), InputError);
}

TEST_CASE("correlation matrix matches an outer-product sum") {
  fvtest::Rng rng(61);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 5; ++i) xs.push_back(fvtest::gaussian(rng, 6));
  const auto r = correlation_matrix(view(xs));
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      double s = 0.0;
      for (const auto& x : xs) s += x[a] * x[b];
      CHECK(std::abs(r(a, b) - s / 5.0) < 1e-12);
      CHECK(r(a, b) == r(b, a));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense(r));
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);

  const auto centered = correlation_matrix(view(xs), true);
  std::vector<double> mean(6, 0.0);
  for (const auto& x : xs) for (std::size_t j = 0; j < 6; ++j) mean[j] += x[j] / 5.0;
  double s = 0.0;
  for (const auto& x : xs) s += (x[0] - mean[0]) * (x[1] - mean[1]);
  CHECK(std::abs(centered(0, 1) - s / 5.0) < 1e-12);
}

TEST_CASE("identity correlation at aperture one halves everything") {
  const auto c = compute_conceptor(square(Eigen::MatrixXd::Identity(4, 4)), 1.0);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(c.matrix(r, k) == doctest::Approx(r == k ? 0.5 : 0.0).scale(1.0));
    }
  }
  CHECK_THROWS_AS(compute_conceptor(square(Eigen::MatrixXd::Identity(2, 2)), 0.0), InputError);
  CHECK_THROWS_AS(compute_conceptor(square(Eigen::MatrixXd::Identity(2, 2)), -1.0), InputError);
}

TEST_CASE("tiny aperture gives a near-zero conceptor") {
  fvtest::Rng rng(62);
  const auto r = random_psd(rng, 8, 20);
  const auto c = compute_conceptor(r, 1e-6);
  const double r_max = dense(r).cwiseAbs().maxCoeff();
  CHECK(dense(c.matrix).cwiseAbs().maxCoeff() < 1e-6 * r_max);
}

TEST_CASE("eigenvalues follow sigma / (sigma + alpha^-2)") {
  fvtest::Rng rng(63);
  for (int inst = 0; inst < 10; ++inst) {
    const auto r = random_psd(rng, 7, 4 + inst);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense(r));
    const auto c = compute_conceptor(r, 10.0);
    REQUIRE(c.eigenvalues.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
      const double sigma = std::max(0.0, eig.eigenvalues()(static_cast<Eigen::Index>(i)));
      CHECK(std::abs(c.eigenvalues[i] - sigma / (sigma + 0.01)) < 1e-9);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ceig(dense(c.matrix));
    for (Eigen::Index i = 0; i < 7; ++i) {
      CHECK(ceig.eigenvalues()(i) == doctest::Approx(c.eigenvalues[i]).scale(1.0).epsilon(1e-9));
    }
    const Eigen::MatrixXd cm = dense(c.matrix);
    CHECK((cm - cm.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cm * dense(r) - dense(r) * cm).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("spectrum stays in [0, 1) and grows with the aperture") {
  fvtest::Rng rng(64);
  for (int inst = 0; inst < 10; ++inst) {
    const auto r = random_psd(rng, 6, 30);
    std::vector<double> prev(6, 0.0);
    for (double alpha : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
      const auto c = compute_conceptor(r, alpha);
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(c.eigenvalues[i] >= -1e-8);
        CHECK(c.eigenvalues[i] < 1.0);
        CHECK(c.eigenvalues[i] >= prev[i]);
      }
      prev = c.eigenvalues;
    }
  }
}

TEST_CASE("apply_negated") {
  fvtest::Rng rng(65);
  const auto store = fvtest::random_store(rng, 50, 5);

  Conceptor zero{SquareMatrix{5, std::vector<double>(25, 0.0)}, 1.0, 0, std::vector<double>(5, 0.0)};
  const auto same = apply_negated(store, zero);
  CHECK(same.matrix().size() == store.matrix().size());
  for (std::size_t i = 0; i < store.matrix().size(); ++i) CHECK(same.matrix()[i] == store.matrix()[i]);

  // An eigenvector of C with eigenvalue 0.99 shrinks to 1%.
  Eigen::MatrixXd q = Eigen::MatrixXd::Random(5, 5).householderQr().householderQ();
  Eigen::VectorXd spectrum(5);
  spectrum << 0.99, 0.5, 0.2, 0.0, 0.7;
  const Eigen::MatrixXd cm = q * spectrum.asDiagonal() * q.transpose();
  Conceptor c{square(cm), 1.0, 0, {}};
  EmbeddingStore probe(5);
  std::vector<double> v(q.col(0).data(), q.col(0).data() + 5);
  for (double& x : v) x *= 3.0;
  probe.add("v", v);
  const auto out = apply_negated(probe, c);
  CHECK(std::sqrt(simd::squared_norm(out.row(0))) == doctest::Approx(0.03).epsilon(1e-9));

  const auto shrunk = apply_negated(store, c);
  for (std::size_t i = 0; i < store.size(); ++i) {
    CHECK(std::sqrt(simd::squared_norm(shrunk.row(i))) <=
          std::sqrt(simd::squared_norm(store.row(i))) + 1e-12);
  }
  EmbeddingStore wrong(3);
  wrong.add("x", std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(apply_negated(wrong, c), InputError);
}

TEST_CASE("directions outside the bias span are untouched") {
  fvtest::Rng rng(66);
  const std::size_t d = 10;
  const auto basis = fvtest::orthonormal_rows(rng, 5, d);
  std::vector<std::vector<double>> bias;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> v(d, 0.0);
    for (int k = 0; k < 3; ++k) simd::axpy(fvtest::gaussian(rng, 1)[0], basis[k], v);
    bias.push_back(v);
  }
  const auto c = compute_conceptor(correlation_matrix(view(bias)), 10.0);
  EmbeddingStore store(d);
  std::vector<double> w(d, 0.0);
  simd::axpy(0.7, basis[3], w);
  simd::axpy(-1.3, basis[4], w);
  store.add("w", w);
  const auto out = apply_negated(store, c);
  for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(out.row(0)[j] - w[j]) < 1e-9);
}

TEST_CASE("conceptor debias") {
  fvtest::PlantedConfig cfg;
  cfg.seed = 67;
  cfg.fillers = 200;
  const auto p = fvtest::make_planted(cfg);
  const auto lex = resolve(p.lexicon, p.store);

  const auto tiny = conceptor_debias(p.store, lex, 1e-6);
  for (std::size_t i = 0; i < p.store.matrix().size(); ++i) {
    CHECK(std::abs(tiny.store.matrix()[i] - p.store.matrix()[i]) <= 1e-4);
  }
  const auto r = conceptor_debias(p.store, lex, 10.0);
  CHECK(r.conceptor.source_word_count == lex.identity_indices().size());
  CHECK(r.conceptor.aperture == 10.0);
  const double before = weat_all_pairs(p.store, lex).aggregate;
  const double after = weat_all_pairs(r.store, lex).aggregate;
  CHECK(after <= 0.2 * before);
  const auto centered = conceptor_debias(p.store, lex, 10.0, true);
  CHECK(centered.store.matrix().size() == p.store.matrix().size());
}

TEST_CASE("conceptor files round-trip") {
  fvtest::Rng rng(68);
  fvtest::TempDir dir;
  const auto c = compute_conceptor(random_psd(rng, 4, 9), 3.5);
  save_conceptor(c, dir / "c.bin");
  CHECK(std::filesystem::file_size(dir / "c.bin") == 8 + 8 + 16 * 8);
  const auto back = load_conceptor(dir / "c.bin");
  CHECK(back.aperture == 3.5);
  CHECK(back.matrix.values == c.matrix.values);
  const auto bytes = fvtest::read_file(dir / "c.bin");
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(load_conceptor(dir / "short.bin"), ParseError);
  CHECK_THROWS_AS(load_conceptor(dir / "missing.bin"), InputError);
}
