#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairvec/embedding_store.hpp"
#include "fairvec/lexicon.hpp"
#include "fairvec/metrics.hpp"
#include "fairvec/rnsb.hpp"
#include "fairvec/softweat.hpp"

namespace fairvec {

inline constexpr const char* kToolName = "fairvec";
inline constexpr const char* kToolVersion = "0.1.0";

struct WordAssoc {
  std::string word;
  double assoc = 0.0;
  bool operator==(const WordAssoc&) const = default;
};

struct WeatPairRecord {
  std::string subclass_a, subclass_b, attribute_a, attribute_b;
  double statistic = 0.0;
  double effect_size = 0.0;
  std::vector<WordAssoc> per_word_assoc;
  bool operator==(const WeatPairRecord&) const = default;
};

struct MacPairRecord {
  std::string subclass, attribute_set;
  double mean_distance = 0.0;
  bool operator==(const MacPairRecord&) const = default;
};

struct RnsbRecord {
  double kl = 0.0;
  double kl_std = 0.0;
  std::size_t runs = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_run_kl;
  std::vector<double> per_run_test_accuracy;
  std::size_t nonconverged_runs = 0;
  std::vector<std::string> labels;
  std::vector<double> negative_probability;
  std::vector<double> distribution;
  bool operator==(const RnsbRecord&) const = default;
};

// Metrics of one store: the baseline or the output of one method.
struct MetricBundle {
  std::string method;
  double weat_aggregate = 0.0;
  std::vector<WeatPairRecord> weat_pairs;
  double mac = 0.0;
  double mac_deviation = 0.0;  // |1 - mac|
  std::vector<MacPairRecord> mac_pairs;
  std::size_t degenerate_pairs = 0;
  std::optional<RnsbRecord> rnsb;
  bool operator==(const MetricBundle&) const = default;
};

struct TTestRecord {
  std::string method;
  std::string baseline;
  double t = 0.0;
  double p = 0.0;
  double df = 0.0;
  bool operator==(const TTestRecord&) const = default;
};

struct EmbeddingInfo {
  std::string path;
  std::string format;
  std::size_t words = 0;
  std::size_t dim = 0;
  bool normalized = false;
  std::size_t duplicates_dropped = 0;
  bool operator==(const EmbeddingInfo&) const = default;
};

struct LexiconInfo {
  std::string path;
  std::string class_name;
  std::size_t subclasses = 0;
  std::size_t equality_sets = 0;
  std::size_t attribute_sets = 0;
  std::size_t dropped_targets = 0;
  std::size_t dropped_attribute_words = 0;
  std::size_t dropped_equality_sets = 0;
  std::vector<std::string> missing_words;
  bool operator==(const LexiconInfo&) const = default;
};

struct AuditReport {
  std::string tool = kToolName;
  std::string version = kToolVersion;
  std::string timestamp;
  EmbeddingInfo embedding;
  LexiconInfo lexicon;
  nlohmann::json settings = nlohmann::json::object();
  std::vector<MetricBundle> results;
  std::vector<TTestRecord> t_tests;
  nlohmann::json details = nlohmann::json::object();  // per-method diagnostics
  bool operator==(const AuditReport&) const = default;
};

void to_json(nlohmann::json& j, const AuditReport& r);
void from_json(const nlohmann::json& j, AuditReport& r);

// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

LexiconInfo describe(const ResolvedLexicon& lexicon, const std::string& path);

// WEAT over all pairs, MAC, and (when a sentiment lexicon is given) RNSB.
MetricBundle compute_metrics(const std::string& method, const EmbeddingStore& store,
                             const ResolvedLexicon& lexicon, const SentimentLexicon* sentiment,
                             const RnsbConfig& rnsb_config);

TTestRecord compare_rnsb(const MetricBundle& baseline, const MetricBundle& treated);

void write_report_json(const AuditReport& report, const std::filesystem::path& path);
AuditReport read_report_json(const std::filesystem::path& path);

// Flat `method,metric,key,value` table.
void write_report_csv(const AuditReport& report, const std::filesystem::path& path);

struct SweepRow {
  double value = 0.0;
  double weat = 0.0;
  double mac_deviation = 0.0;
  std::optional<double> rnsb;
};

struct SweepResult {
  std::string parameter = "lambda";
  std::vector<SweepRow> rows;
};

// Every grid value is applied to the original store; the plan does not
// depend on lambda, so it is built once. Throws InputError unless the grid
// is non-empty and strictly increasing.
SweepResult sweep_lambda(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                         const SentimentLexicon* sentiment, std::span<const double> grid,
                         const SoftWeatConfig& softweat, const RnsbConfig& rnsb_config);

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);

void write_analogies_csv(const std::vector<AnalogyScore>& analogies,
                         const std::filesystem::path& path);

}  // namespace fairvec
