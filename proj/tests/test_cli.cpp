#include <doctest.h>

#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairvec/cli.hpp"
#include "fairvec/embedding_store.hpp"
#include "fairvec/report.hpp"
#include "synthetic.hpp"

using namespace fairvec;

namespace {

struct Captured {
  int code = 0;
  std::string err;
  std::string out;
};

Captured run(const std::vector<std::string>& args) {
  std::ostringstream err, out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  Captured c;
  try {
    c.code = run_cli(args);
  } catch (...) {
    std::cerr.rdbuf(old_err);
    std::cout.rdbuf(old_out);
    throw;
  }
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  c.err = err.str();
  c.out = out.str();
  return c;
}

// Planted or unbiased store written to disk with its lexicon and sentiment lists.
struct Fixture {
  fvtest::TempDir dir;
  std::string embedding, lexicon, pos, neg;

  explicit Fixture(bool biased, std::uint64_t seed = 3) {
    fvtest::PlantedConfig c;
    c.seed = seed;
    c.fillers = 150;
    c.sentiment_words = 30;
    const auto p = biased ? fvtest::make_planted(c) : fvtest::make_unbiased(c);
    embedding = (dir / "emb.txt").string();
    lexicon = (dir / "lex.json").string();
    pos = (dir / "pos.txt").string();
    neg = (dir / "neg.txt").string();
    save(p.store, embedding, EmbeddingFormat::kGloveText);
    fvtest::write_lexicon(p.lexicon, lexicon);
    fvtest::write_sentiment(p.sentiment, pos, neg);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("cli exit codes") {
  Fixture f(true);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"--version"}).code == kExitOk);
  CHECK(run({}).code == kExitInput);
  CHECK(run({"audit", "--embedding", f.embedding}).code == kExitInput);
  CHECK(run({"audit", "--bogus"}).code == kExitInput);
  CHECK(run({"debias", "--embedding", f.embedding, "--lexicon", f.lexicon, "--method", "magic",
             "--out-embedding", f.path("o.txt"), "--out", f.path("o.json")})
            .code == kExitInput);

  const std::string missing = f.path("no_such_lexicon.json");
  const Captured c =
      run({"audit", "--embedding", f.embedding, "--lexicon", missing, "--out", f.path("r.json")});
  CHECK(c.code == kExitInput);
  CHECK(c.err.find(missing) != std::string::npos);

  const Captured half = run({"audit", "--embedding", f.embedding, "--lexicon", f.lexicon,
                             "--sentiment-pos", f.pos, "--out", f.path("r.json")});
  CHECK(half.code == kExitInput);
}

TEST_CASE("cli audit of an unbiased store") {
  Fixture f(false);
  const std::string out = f.path("audit.json");
  const Captured c = run({"audit", "--embedding", f.embedding, "--normalize", "--lexicon",
                          f.lexicon, "--sentiment-pos", f.pos, "--sentiment-neg", f.neg, "--runs",
                          "5", "--out", out});
  REQUIRE(c.code == kExitOk);
  const AuditReport r = read_report_json(out);
  REQUIRE(r.results.size() == 1);
  CHECK(r.results[0].method == "baseline");
  CHECK(r.results[0].mac_deviation < 0.05);
  REQUIRE(r.results[0].rnsb.has_value());
  CHECK(r.results[0].rnsb->kl < 0.02);
  CHECK(r.results[0].rnsb->runs == 5);
  CHECK(r.settings.at("rnsb_runs") == 5);
  CHECK(std::filesystem::exists(f.path("audit.csv")));
}

TEST_CASE("cli audit is reproducible") {
  Fixture f(true);
  auto audit = [&](const std::string& out) {
    REQUIRE(run({"audit", "--embedding", f.embedding, "--lexicon", f.lexicon, "--sentiment-pos",
                 f.pos, "--sentiment-neg", f.neg, "--runs", "4", "--seed", "7", "--out", out})
                .code == kExitOk);
    auto j = nlohmann::json::parse(fvtest::read_file(out));
    j.erase("timestamp");
    return j;
  };
  CHECK(audit(f.path("a.json")) == audit(f.path("b.json")));
}

TEST_CASE("cli debias") {
  Fixture f(true);
  SUBCASE("conceptor reduces WEAT") {
    const std::string out = f.path("c.json");
    REQUIRE(run({"debias", "--embedding", f.embedding, "--lexicon", f.lexicon, "--method",
                 "conceptor", "--conceptor-out", f.path("c.txt"), "--out-embedding",
                 f.path("c_emb.txt"), "--out", out})
                .code == kExitOk);
    const AuditReport r = read_report_json(out);
    REQUIRE(r.results.size() == 2);
    CHECK(r.results[1].method == "conceptor");
    CHECK(r.results[1].weat_aggregate <= 0.2 * r.results[0].weat_aggregate);
    CHECK(std::filesystem::exists(f.path("c.txt")));
    const EmbeddingStore moved = load(f.path("c_emb.txt"), EmbeddingFormat::kGloveText);
    const EmbeddingStore orig = load(f.embedding, EmbeddingFormat::kGloveText);
    CHECK(moved.size() == orig.size());
  }
  SUBCASE("hard debias with sentiment yields a t-test") {
    const std::string out = f.path("h.json");
    REQUIRE(run({"debias", "--embedding", f.embedding, "--lexicon", f.lexicon, "--method", "hard",
                 "--sentiment-pos", f.pos, "--sentiment-neg", f.neg, "--runs", "3",
                 "--out-embedding", f.path("h.bin"), "--out", out})
                .code == kExitOk);
    const AuditReport r = read_report_json(out);
    REQUIRE(r.results.size() == 2);
    CHECK(r.results[1].weat_aggregate < 1e-9);
    REQUIRE(r.t_tests.size() == 1);
    CHECK(r.t_tests[0].method == "hard");
    CHECK(r.t_tests[0].p >= 0.0);
    CHECK(r.t_tests[0].p <= 1.0);
    const EmbeddingStore moved = load(f.path("h.bin"), EmbeddingFormat::kWord2VecBinary);
    // Rows were unit length before the float32 rounding of the binary format.
    for (std::size_t i = 0; i < moved.size(); ++i) {
      double sq = 0.0;
      for (double x : moved.row(i)) sq += x * x;
      REQUIRE(std::abs(std::sqrt(sq) - 1.0) < 1e-6);
    }
  }
  SUBCASE("softweat at lambda 0 leaves the store untouched") {
    const std::string bin = f.path("in.bin");
    REQUIRE(run({"convert", "--embedding", f.embedding, "--out-embedding", bin})
                .code == kExitOk);
    REQUIRE(run({"debias", "--embedding", bin, "--lexicon", f.lexicon, "--method", "softweat",
                 "--lambda", "0", "--out-embedding", f.path("s.bin"), "--out", f.path("s.json")})
                .code == kExitOk);
    CHECK(fvtest::read_file(bin) == fvtest::read_file(f.path("s.bin")));
  }
}

TEST_CASE("cli analogies") {
  Fixture f(true);
  const std::string none = f.path("none.csv");
  REQUIRE(run({"analogies", "--embedding", f.embedding, "--lexicon", f.lexicon, "--min-score",
               "1.1", "--out", none})
              .code == kExitOk);
  CHECK(fvtest::read_file(none) == "a,b,x,y,score\n");

  const std::string some = f.path("some.csv");
  REQUIRE(run({"analogies", "--embedding", f.embedding, "--normalize", "--lexicon", f.lexicon,
               "--delta", "2", "--min-score", "0.3", "--out", some})
              .code == kExitOk);
  std::istringstream in(fvtest::read_file(some));
  std::string line;
  std::getline(in, line);
  double prev = std::numeric_limits<double>::infinity();
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const double score = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(std::abs(score) >= 0.3);
    CHECK(score <= prev);
    prev = score;
    ++rows;
  }
  CHECK(rows > 0);
}

TEST_CASE("cli sweep") {
  Fixture f(true);
  const std::string out = f.path("sweep.csv");
  REQUIRE(run({"sweep", "--embedding", f.embedding, "--lexicon", f.lexicon, "--lambda",
               "0,0.25,0.5,1", "--out", out})
              .code == kExitOk);
  CHECK(line_count(fvtest::read_file(out)) == 5);
  CHECK(run({"sweep", "--embedding", f.embedding, "--lexicon", f.lexicon, "--lambda", "0.5,0.25",
             "--out", out})
            .code == kExitInput);
}

TEST_CASE("cli convert round trip") {
  Fixture f(true);
  const std::string bin = f.path("x.bin");
  const std::string txt = f.path("x.txt");
  REQUIRE(run({"convert", "--embedding", f.embedding, "--out-embedding", bin, "--out-format",
               "binary"})
              .code == kExitOk);
  REQUIRE(run({"convert", "--embedding", bin, "--out-embedding", txt, "--out-format", "glove"})
              .code == kExitOk);
  const EmbeddingStore a = load(bin, EmbeddingFormat::kWord2VecBinary);
  const EmbeddingStore b = load(txt, EmbeddingFormat::kGloveText);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.word(i) == b.word(i));
    const auto ra = a.row(i), rb = b.row(i);
    CHECK(std::equal(ra.begin(), ra.end(), rb.begin()));
  }
}
