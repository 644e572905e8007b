#include "fairvec/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>

#include "fairvec/error.hpp"
#include "fairvec/log.hpp"

namespace fairvec {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(WordAssoc, word, assoc)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(WeatPairRecord, subclass_a, subclass_b, attribute_a,
                                   attribute_b, statistic, effect_size, per_word_assoc)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MacPairRecord, subclass, attribute_set, mean_distance)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RnsbRecord, kl, kl_std, runs, seeds, per_run_kl,
                                   per_run_test_accuracy, nonconverged_runs, labels,
                                   negative_probability, distribution)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TTestRecord, method, baseline, t, p, df)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EmbeddingInfo, path, format, words, dim, normalized,
                                   duplicates_dropped)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LexiconInfo, path, class_name, subclasses, equality_sets,
                                   attribute_sets, dropped_targets, dropped_attribute_words,
                                   dropped_equality_sets, missing_words)

void to_json(nlohmann::json& j, const MetricBundle& m) {
  j = nlohmann::json{{"method", m.method},
                     {"weat_aggregate", m.weat_aggregate},
                     {"weat_pairs", m.weat_pairs},
                     {"mac", m.mac},
                     {"mac_deviation", m.mac_deviation},
                     {"mac_pairs", m.mac_pairs},
                     {"degenerate_pairs", m.degenerate_pairs},
                     {"rnsb", nullptr}};
  if (m.rnsb) j["rnsb"] = *m.rnsb;
}

void from_json(const nlohmann::json& j, MetricBundle& m) {
  j.at("method").get_to(m.method);
  j.at("weat_aggregate").get_to(m.weat_aggregate);
  j.at("weat_pairs").get_to(m.weat_pairs);
  j.at("mac").get_to(m.mac);
  j.at("mac_deviation").get_to(m.mac_deviation);
  j.at("mac_pairs").get_to(m.mac_pairs);
  j.at("degenerate_pairs").get_to(m.degenerate_pairs);
  if (j.contains("rnsb") && !j.at("rnsb").is_null()) {
    m.rnsb = j.at("rnsb").get<RnsbRecord>();
  } else {
    m.rnsb.reset();
  }
}

void to_json(nlohmann::json& j, const AuditReport& r) {
  j = nlohmann::json{{"tool", r.tool},         {"version", r.version},
                     {"timestamp", r.timestamp}, {"embedding", r.embedding},
                     {"lexicon", r.lexicon},   {"settings", r.settings},
                     {"results", r.results},   {"t_tests", r.t_tests},
                     {"details", r.details}};
}

void from_json(const nlohmann::json& j, AuditReport& r) {
  j.at("tool").get_to(r.tool);
  j.at("version").get_to(r.version);
  j.at("timestamp").get_to(r.timestamp);
  j.at("embedding").get_to(r.embedding);
  j.at("lexicon").get_to(r.lexicon);
  r.settings = j.at("settings");
  j.at("results").get_to(r.results);
  j.at("t_tests").get_to(r.t_tests);
  r.details = j.at("details");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

LexiconInfo describe(const ResolvedLexicon& lexicon, const std::string& path) {
  LexiconInfo info;
  info.path = path;
  info.class_name = lexicon.class_name;
  info.subclasses = lexicon.subclasses.size();
  info.equality_sets = lexicon.equality_sets.size();
  info.attribute_sets = lexicon.attribute_sets.size();
  info.dropped_targets = lexicon.report.dropped_targets;
  info.dropped_attribute_words = lexicon.report.dropped_attribute_words;
  info.dropped_equality_sets = lexicon.report.dropped_equality_sets;
  info.missing_words = lexicon.report.missing_words;
  return info;
}

MetricBundle compute_metrics(const std::string& method, const EmbeddingStore& store,
                             const ResolvedLexicon& lexicon, const SentimentLexicon* sentiment,
                             const RnsbConfig& rnsb_config) {
  MetricBundle m;
  m.method = method;
  const WeatSummary weat = weat_all_pairs(store, lexicon);
  m.weat_aggregate = weat.aggregate;
  for (const auto& p : weat.pairs) {
    WeatPairRecord rec;
    rec.subclass_a = lexicon.subclasses[p.subclass_a].name;
    rec.subclass_b = lexicon.subclasses[p.subclass_b].name;
    rec.attribute_a = lexicon.attribute_sets[p.attribute_a].name;
    rec.attribute_b = lexicon.attribute_sets[p.attribute_b].name;
    rec.statistic = p.result.statistic;
    rec.effect_size = p.result.effect_size;
    const auto& t1 = lexicon.subclasses[p.subclass_a].targets;
    const auto& t2 = lexicon.subclasses[p.subclass_b].targets;
    for (std::size_t i = 0; i < t1.size(); ++i) {
      rec.per_word_assoc.push_back({t1[i].word, p.result.target1_assoc[i]});
    }
    for (std::size_t i = 0; i < t2.size(); ++i) {
      rec.per_word_assoc.push_back({t2[i].word, p.result.target2_assoc[i]});
    }
    m.degenerate_pairs += p.result.degenerate_pairs;
    m.weat_pairs.push_back(std::move(rec));
  }

  const MacResult mac_result = lexicon_mac(store, lexicon);
  m.mac = mac_result.mac;
  m.mac_deviation = std::abs(1.0 - mac_result.mac);
  m.degenerate_pairs += mac_result.degenerate_pairs;
  for (std::size_t i = 0; i < lexicon.subclasses.size(); ++i) {
    for (std::size_t j = 0; j < lexicon.attribute_sets.size(); ++j) {
      m.mac_pairs.push_back({lexicon.subclasses[i].name, lexicon.attribute_sets[j].name,
                             mac_result.per_pair[i][j]});
    }
  }

  if (sentiment != nullptr) {
    const RnsbResult r = rnsb(store, lexicon, *sentiment, rnsb_config);
    m.rnsb = RnsbRecord{r.kl,     r.kl_std,   r.runs,   r.seeds,
                        r.per_run_kl, r.per_run_test_accuracy, r.nonconverged_runs,
                        r.labels, r.negative_probability, r.distribution};
  }
  if (m.degenerate_pairs > 0) {
    log().warn("degenerate_cosines method={} count={}", method, m.degenerate_pairs);
  }
  return m;
}

TTestRecord compare_rnsb(const MetricBundle& baseline, const MetricBundle& treated) {
  if (!baseline.rnsb || !treated.rnsb) throw InputError("t-test needs RNSB runs on both sides");
  const TTestResult r = one_tailed_t_test(baseline.rnsb->per_run_kl, treated.rnsb->per_run_kl);
  // JSON has no infinities; a zero-variance split saturates at the largest double.
  const double t = std::isfinite(r.t) ? r.t : std::copysign(std::numeric_limits<double>::max(), r.t);
  return TTestRecord{treated.method, baseline.method, t, r.p, r.df};
}

void write_report_json(const AuditReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out << nlohmann::json(report).dump(2) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

AuditReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open report: " + path.string());
  try {
    return nlohmann::json::parse(in).get<AuditReport>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  return out;
}

}  // namespace

void write_report_csv(const AuditReport& report, const std::filesystem::path& path) {
  std::ofstream out = open_csv(path);
  out << "method,metric,key,value\n";
  auto row = [&](const std::string& method, const std::string& metric, const std::string& key,
                 double value) {
    out << csv_field(method) << ',' << metric << ',' << csv_field(key) << ',' << num(value) << '\n';
  };
  for (const auto& m : report.results) {
    row(m.method, "weat_aggregate", "", m.weat_aggregate);
    for (const auto& p : m.weat_pairs) {
      row(m.method, "weat_effect_size",
          p.subclass_a + "|" + p.subclass_b + "|" + p.attribute_a + "|" + p.attribute_b,
          p.effect_size);
    }
    row(m.method, "mac", "", m.mac);
    row(m.method, "mac_deviation", "", m.mac_deviation);
    for (const auto& p : m.mac_pairs) {
      row(m.method, "mac_pair", p.subclass + "|" + p.attribute_set, p.mean_distance);
    }
    if (m.rnsb) {
      row(m.method, "rnsb_kl", "", m.rnsb->kl);
      row(m.method, "rnsb_kl_std", "", m.rnsb->kl_std);
      for (std::size_t i = 0; i < m.rnsb->labels.size(); ++i) {
        row(m.method, "negative_probability", m.rnsb->labels[i], m.rnsb->negative_probability[i]);
        row(m.method, "distribution", m.rnsb->labels[i], m.rnsb->distribution[i]);
      }
    }
  }
  for (const auto& t : report.t_tests) {
    row(t.method, "ttest_t", t.baseline, t.t);
    row(t.method, "ttest_p", t.baseline, t.p);
    row(t.method, "ttest_df", t.baseline, t.df);
  }
  if (!out) throw InputError("write failed: " + path.string());
}

SweepResult sweep_lambda(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                         const SentimentLexicon* sentiment, std::span<const double> grid,
                         const SoftWeatConfig& softweat, const RnsbConfig& rnsb_config) {
  if (grid.empty()) throw InputError("sweep: grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw InputError("sweep: grid values must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InputError("sweep: grid must be strictly increasing");
    }
  }
  SoftWeatConfig full = softweat;
  full.lambda = 1.0;
  const SoftWeatPlan plan = softweat_debias(store, lexicon, full).plan;

  SweepResult out;
  for (double lambda : grid) {
    const EmbeddingStore moved = apply_plan(store, plan, lambda);
    const MetricBundle m = compute_metrics("softweat", moved, lexicon, sentiment, rnsb_config);
    SweepRow row{lambda, m.weat_aggregate, m.mac_deviation, std::nullopt};
    if (m.rnsb) row.rnsb = m.rnsb->kl;
    out.rows.push_back(row);
    log().info("sweep lambda={} weat={} mac_deviation={}", lambda, row.weat, row.mac_deviation);
  }
  return out;
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  std::ofstream out = open_csv(path);
  out << sweep.parameter << ",weat,mac_deviation,rnsb\n";
  for (const auto& r : sweep.rows) {
    out << num(r.value) << ',' << num(r.weat) << ',' << num(r.mac_deviation) << ','
        << (r.rnsb ? num(*r.rnsb) : std::string()) << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

void write_analogies_csv(const std::vector<AnalogyScore>& analogies,
                         const std::filesystem::path& path) {
  std::ofstream out = open_csv(path);
  out << "a,b,x,y,score\n";
  for (const auto& a : analogies) {
    out << csv_field(a.a) << ',' << csv_field(a.b) << ',' << csv_field(a.x) << ','
        << csv_field(a.y) << ',' << num(a.score) << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace fairvec
