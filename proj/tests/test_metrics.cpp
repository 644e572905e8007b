#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fairvec/error.hpp"
#include "fairvec/metrics.hpp"
#include "synthetic.hpp"

using namespace fairvec;
using fvtest::view;

namespace {

using Vecs = std::vector<std::vector<double>>;

EmbeddingStore store_of(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  EmbeddingStore s(rows.front().second.size());
  for (const auto& [w, v] : rows) s.add(w, v);
  return s;
}

}  // namespace

TEST_CASE("cosine") {
  const std::vector<double> v{0.3, -1.2, 4.0};
  CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 1}) ==
        doctest::Approx(0.70710678118654752).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 0.0);
}

TEST_CASE("association") {
  const Vecs a{{1, 0}, {0.5, 0.5}};
  CHECK(association(std::vector<double>{0.2, 0.9}, view(a), view(a)) == 0.0);
  const Vecs a1{{1, 0}};
  const Vecs a2{{0, 1}};
  CHECK(association(std::vector<double>{1, 0}, view(a1), view(a2)) == 1.0);
}

TEST_CASE("weat on the 2-D hand instance") {
  const Vecs t1{{1, 0}};
  const Vecs t2{{0, 1}};
  const auto r = weat(view(t1), view(t2), view(t1), view(t2));
  CHECK(r.statistic == 2.0);
  CHECK(r.effect_size == 2.0);
  CHECK(r.target1_assoc == std::vector<double>{1.0});
  CHECK(r.target2_assoc == std::vector<double>{-1.0});
}

TEST_CASE("weat of mirrored targets is zero") {
  // Each target set is closed under reflection across the diagonal, which
  // swaps A1 and A2.
  const Vecs t1{{0.9, 0.2}, {0.2, 0.9}};
  const Vecs t2{{0.6, 0.5}, {0.5, 0.6}};
  const Vecs a1{{1, 0}};
  const Vecs a2{{0, 1}};
  const auto r = weat(view(t1), view(t2), view(a1), view(a2));
  CHECK(r.statistic == 0.0);
  CHECK(r.effect_size == 0.0);
}

TEST_CASE("weat with zero spread is degenerate") {
  const Vecs t{{1, 1}};
  const Vecs a1{{1, 0}};
  const Vecs a2{{0, 1}};
  CHECK_THROWS_AS(weat(view(t), view(t), view(a1), view(a2)), DegenerateError);
  CHECK_THROWS_AS(weat({}, view(t), view(a1), view(a2)), InputError);
}

TEST_CASE("zero vectors count as degenerate pairs with cosine zero") {
  const Vecs t1{{1, 0}, {0, 0}};
  const Vecs t2{{0, 1}};
  const Vecs a1{{1, 0}};
  const Vecs a2{{0, 1}};
  const auto r = weat(view(t1), view(t2), view(a1), view(a2));
  CHECK(r.degenerate_pairs == 2);
  CHECK(r.target1_assoc[1] == 0.0);
  const auto m = mac({view(t1)}, {view(a1)});
  CHECK(m.degenerate_pairs == 1);
}

TEST_CASE("mac extremes") {
  const Vecs t{{1, 0, 0}, {0, 2, 0}};
  const Vecs orth{{0, 0, 1}};
  CHECK(mac({view(t)}, {view(orth)}).mac == 1.0);
  const Vecs dir{{3, 0, 0}};
  const Vecs same{{1, 0, 0}};
  CHECK(mac({view(same)}, {view(dir)}).mac == 0.0);
  const Vecs opp{{-1, 0, 0}};
  CHECK(mac({view(same)}, {view(opp)}).mac == 2.0);
  CHECK_THROWS_AS(mac({}, {view(dir)}), InputError);
}

TEST_CASE("mac averages over every target, not every set") {
  const Vecs t1{{1, 0}, {1, 0}, {1, 0}};
  const Vecs t2{{0, 1}};
  const Vecs a{{1, 0}};
  const auto m = mac({view(t1), view(t2)}, {view(a)});
  CHECK(m.mac == doctest::Approx(0.25));
  CHECK(m.per_pair[0][0] == doctest::Approx(0.0));
  CHECK(m.per_pair[1][0] == doctest::Approx(1.0));
}

TEST_CASE("weat and mac match the brute-force oracle on small random sets") {
  fvtest::Rng rng(31);
  std::uniform_int_distribution<int> size(1, 3);
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = 2 + rng() % 6;
    auto make = [&] {
      Vecs out;
      for (int k = size(rng); k > 0; --k) out.push_back(fvtest::gaussian(rng, d));
      return out;
    };
    const Vecs t1 = make(), t2 = make(), a1 = make(), a2 = make();
    const auto r = weat(view(t1), view(t2), view(a1), view(a2));
    const auto o = fvtest::oracle_weat(t1, t2, a1, a2);
    CHECK(std::abs(r.statistic - o.statistic) < 1e-9);
    CHECK(std::abs(r.effect_size - o.effect_size) < 1e-9);
    CHECK(std::abs(mac({view(t1), view(t2)}, {view(a1), view(a2)}).mac -
                   fvtest::oracle_mac({t1, t2}, {a1, a2})) < 1e-9);
  }
}

TEST_CASE("swaps negate exactly") {
  fvtest::Rng rng(32);
  for (int i = 0; i < 50; ++i) {
    Vecs t1, t2, a1, a2;
    for (auto* s : {&t1, &t2, &a1, &a2}) {
      for (int k = 0; k < 4; ++k) s->push_back(fvtest::gaussian(rng, 6));
    }
    const auto r = weat(view(t1), view(t2), view(a1), view(a2));
    CHECK(weat(view(t2), view(t1), view(a1), view(a2)).effect_size == -r.effect_size);
    const auto s = weat(view(t1), view(t2), view(a2), view(a1));
    CHECK(s.effect_size == -r.effect_size);
    CHECK(s.statistic == -r.statistic);
  }
}

TEST_CASE("weat_all_pairs counts combinations") {
  fvtest::Rng rng(33);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (const char* w : {"a1", "a2", "b1", "b2", "c1", "c2", "p1", "p2", "q1", "q2", "r1", "r2"}) {
    rows.push_back({w, fvtest::gaussian(rng, 5)});
  }
  const auto store = store_of(rows);
  const auto two = fvtest::make_lexicon({{"a", {"a1", "a2"}}, {"b", {"b1", "b2"}}},
                                        {{"a1", "b1"}}, {{"p", {"p1", "p2"}}, {"q", {"q1", "q2"}}});
  CHECK(weat_all_pairs(store, resolve(two, store)).pairs.size() == 1);
  const auto three = fvtest::make_lexicon(
      {{"a", {"a1", "a2"}}, {"b", {"b1", "b2"}}, {"c", {"c1", "c2"}}}, {{"a1", "b1", "c1"}},
      {{"p", {"p1", "p2"}}, {"q", {"q1", "q2"}}, {"r", {"r1", "r2"}}});
  const auto summary = weat_all_pairs(store, resolve(three, store));
  REQUIRE(summary.pairs.size() == 9);
  double mean_abs = 0.0;
  for (const auto& p : summary.pairs) mean_abs += std::abs(p.result.effect_size);
  CHECK(summary.aggregate == doctest::Approx(mean_abs / 9.0).epsilon(1e-14));
}

TEST_CASE("analogy score") {
  const std::vector<double> a{1, 0}, b{0, 0}, x{0.5, 0.3}, y{0.0, 0.3};
  CHECK(analogy_score(a, b, x, y, 1.0) == doctest::Approx(1.0));
  CHECK(analogy_score(a, b, x, x, 1.0) == 0.0);
  CHECK(analogy_score(a, b, x, y, 0.4) == 0.0);  // |x - y| = 0.5 > delta
  CHECK(analogy_score(a, b, x, y, 0.0) == 0.0);
  CHECK(analogy_score(a, b, y, x, 1.0) == doctest::Approx(-1.0));
  fvtest::Rng rng(34);
  for (int i = 0; i < 200; ++i) {
    const auto p = fvtest::gaussian(rng, 4), q = fvtest::gaussian(rng, 4),
               r = fvtest::gaussian(rng, 4), s = fvtest::gaussian(rng, 4);
    CHECK(std::abs(analogy_score(p, q, r, s, 10.0)) <= 1.0);
  }
}

TEST_CASE("score_analogy by word") {
  const auto store = store_of({{"cat", {1, 1}}, {"kitten", {0.5, 0.5}}, {"dog", {2, 0}},
                               {"puppy", {1.5, -0.5}}});
  const auto s = score_analogy(store, "cat", "kitten", "dog", "puppy", 1.0);
  CHECK(s.score == doctest::Approx(1.0).epsilon(1e-12));  // both differences are (0.5, 0.5)
  CHECK(s.a == "cat");
  CHECK_THROWS_AS(score_analogy(store, "cat", "lion", "dog", "puppy"), InputError);
}

TEST_CASE("enumerate_analogies filters, excludes self pairs and sorts") {
  fvtest::Rng rng(35);
  const auto store = fvtest::random_store(rng, 12, 4);
  const std::vector<std::size_t> left{0, 1, 2}, right{3, 4, 5}, attrs{6, 7, 8, 9, 10, 11};
  CHECK(enumerate_analogies(store, left, right, attrs, 10.0, 1.1).empty());
  const auto all = enumerate_analogies(store, left, right, attrs, 10.0, 0.0);
  CHECK(all.size() == 3 * 3 * 6 * 5);
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1].score >= all[i].score);
    CHECK(all[i].b != all[i].y);
  }
  for (const auto& s : all) {
    const double direct = analogy_score(store.vector(s.a)->values, store.vector(s.b)->values,
                                        store.vector(s.x)->values, store.vector(s.y)->values, 10.0);
    CHECK(s.score == doctest::Approx(direct).epsilon(1e-12));
  }
  const auto strong = enumerate_analogies(store, left, right, attrs, 10.0, 0.5);
  for (const auto& s : strong) CHECK(std::abs(s.score) >= 0.5);
  const std::vector<std::size_t> one{0}, other{3}, pair{6, 7};
  CHECK(enumerate_analogies(store, one, other, pair, 10.0, 0.0).size() <= 2);
}

TEST_CASE("nearest neighbours") {
  const auto store = store_of({{"a", {1, 0}}, {"b", {0, 1}}, {"a2", {2, 0}}, {"c", {1, 0.2}}});
  auto n = nearest_neighbors(store, "a", 1);
  REQUIRE(n.size() == 1);
  CHECK(store.word(n[0].index) == "a2");
  n = nearest_neighbors(store, "a", 1, {2});
  CHECK(store.word(n[0].index) == "c");
  CHECK(nearest_neighbors(store, "a", 10).size() == 3);
  CHECK_THROWS_AS(nearest_neighbors(store, "zzz", 1), InputError);
}

TEST_CASE("nearest neighbours match an exhaustive scan") {
  fvtest::Rng rng(36);
  const auto store = fvtest::random_store(rng, 100, 12);
  for (std::size_t q = 0; q < 100; q += 7) {
    std::vector<std::pair<double, std::size_t>> scan;
    for (std::size_t i = 0; i < 100; ++i) {
      if (i == q) continue;
      std::vector<double> u(store.row(q).begin(), store.row(q).end());
      std::vector<double> v(store.row(i).begin(), store.row(i).end());
      scan.push_back({-fvtest::oracle_cosine(u, v), i});
    }
    std::sort(scan.begin(), scan.end());
    const auto top = nearest_neighbors(store, q, 5, {});
    REQUIRE(top.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(top[k].index == scan[k].second);
      CHECK(top[k].cosine == doctest::Approx(-scan[k].first).epsilon(1e-12));
    }
  }
}
