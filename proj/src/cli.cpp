#include "fairvec/cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "fairvec/conceptor.hpp"
#include "fairvec/debias_hard.hpp"
#include "fairvec/error.hpp"
#include "fairvec/log.hpp"
#include "fairvec/report.hpp"
#include "fairvec/simd/kernels.hpp"
#include "fairvec/softweat.hpp"

namespace fairvec {

namespace {

struct InputOptions {
  std::string embedding;
  std::string format;
  std::size_t limit = 0;
  bool normalize = false;
};

struct SentimentOptions {
  std::string positive;
  std::string negative;
  std::size_t runs = 20;
  std::uint64_t seed = 0;
  bool per_term = false;
};

struct Options {
  InputOptions input;
  SentimentOptions sentiment;
  std::string lexicon;
  std::string out;
  std::string out_embedding;
  std::string out_format;
  std::string method;
  std::string conceptor_out;
  double alpha = kDefaultAperture;
  double lambda = 0.5;
  std::vector<double> lambda_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double threshold = 0.5;
  std::size_t neighbors = 5;
  std::size_t k = 0;
  bool center = false;
  double delta = kDefaultAnalogyDelta;
  double min_score = 0.15;
};

EmbeddingFormat resolve_format(const std::string& explicit_format, const std::string& path) {
  if (!explicit_format.empty()) return parse_format(explicit_format);
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".bin" ? EmbeddingFormat::kWord2VecBinary : EmbeddingFormat::kGloveText;
}

struct LoadedInput {
  EmbeddingStore store;
  EmbeddingInfo info;
  EmbeddingFormat format;
};

LoadedInput load_input(const InputOptions& o) {
  LoadedInput in;
  in.format = resolve_format(o.format, o.embedding);
  LoadSummary summary;
  std::optional<std::size_t> limit;
  if (o.limit > 0) limit = o.limit;
  in.store = load(o.embedding, in.format, limit, &summary);
  if (o.normalize) in.store = normalize_all(in.store);
  in.info = EmbeddingInfo{o.embedding,       std::string(format_name(in.format)),
                          in.store.size(),   in.store.dim(),
                          in.store.normalized(), summary.duplicates_dropped};
  return in;
}

std::optional<SentimentLexicon> load_sentiment(const SentimentOptions& o) {
  if (o.positive.empty() && o.negative.empty()) return std::nullopt;
  if (o.positive.empty() || o.negative.empty()) {
    throw InputError("--sentiment-pos and --sentiment-neg must be given together");
  }
  return load_sentiment_lexicon(o.positive, o.negative);
}

RnsbConfig rnsb_config(const SentimentOptions& o) {
  RnsbConfig c;
  c.runs = o.runs;
  c.base_seed = o.seed;
  c.mode = o.per_term ? DistributionMode::kPerTerm : DistributionMode::kPerSubclass;
  return c;
}

nlohmann::json base_settings(const Options& o, const RnsbConfig& rc) {
  return nlohmann::json{
      {"normalize_input", o.input.normalize},
      {"limit", o.input.limit},
      {"token_matching", "lowercase-then-original"},
      {"weat_std_dev", "population"},
      {"weat_aggregate", "mean_abs_effect_size_over_subclass_and_attribute_pairs"},
      {"mac_form", "mean_cosine_distance"},
      {"rnsb_distribution", distribution_mode_name(rc.mode)},
      {"kl_log_base", "e"},
      {"rnsb_runs", rc.runs},
      {"rnsb_base_seed", rc.base_seed},
      {"classifier",
       {{"learning_rate", rc.classifier.learning_rate},
        {"l2", rc.classifier.l2},
        {"epochs", rc.classifier.epochs},
        {"train_fraction", rc.classifier.train_fraction},
        {"initialization", "zero"},
        {"batch", "full"}}},
      {"t_test", "welch_one_tailed_baseline_greater"},
      {"simd", simd::isa_name(simd::active().isa)},
  };
}

std::filesystem::path csv_path_for(const std::string& json_path) {
  std::filesystem::path p(json_path);
  p.replace_extension(".csv");
  return p;
}

int cmd_audit(const Options& o) {
  const RnsbConfig rc = rnsb_config(o.sentiment);
  LoadedInput in = load_input(o.input);
  const BiasLexicon lex = load_lexicon(o.lexicon);
  const auto sentiment = load_sentiment(o.sentiment);
  const ResolvedLexicon resolved = resolve(lex, in.store);

  AuditReport report;
  report.timestamp = utc_timestamp();
  report.embedding = in.info;
  report.lexicon = describe(resolved, o.lexicon);
  report.settings = base_settings(o, rc);
  report.results.push_back(compute_metrics("baseline", in.store, resolved,
                                           sentiment ? &*sentiment : nullptr, rc));
  write_report_json(report, o.out);
  write_report_csv(report, csv_path_for(o.out));
  log().info("audit_done out={} weat={} mac_deviation={}", o.out,
             report.results.front().weat_aggregate, report.results.front().mac_deviation);
  return kExitOk;
}

int cmd_debias(const Options& o) {
  const RnsbConfig rc = rnsb_config(o.sentiment);
  LoadedInput in = load_input(o.input);
  const BiasLexicon lex = load_lexicon(o.lexicon);
  const auto sentiment = load_sentiment(o.sentiment);
  const ResolvedLexicon resolved = resolve(lex, in.store);
  const SentimentLexicon* sent = sentiment ? &*sentiment : nullptr;

  AuditReport report;
  report.timestamp = utc_timestamp();
  report.embedding = in.info;
  report.lexicon = describe(resolved, o.lexicon);
  report.settings = base_settings(o, rc);
  report.settings["method"] = o.method;

  EmbeddingStore debiased;
  nlohmann::json details;
  if (o.method == "hard") {
    const std::size_t k = o.k > 0 ? o.k : default_subspace_rank(resolved);
    report.settings["k"] = k;
    report.settings["neutralize_scope"] = "full_vocabulary_minus_identity_terms";
    HardDebiasResult r = hard_debias(in.store, resolved, k);
    details = {{"k", r.subspace.rank()},
               {"explained_variance", r.subspace.explained_variance},
               {"neutralized", r.neutralized},
               {"degenerate", r.degenerate},
               {"warnings", r.warnings}};
    debiased = std::move(r.store);
  } else if (o.method == "conceptor") {
    report.settings["alpha"] = o.alpha;
    report.settings["conceptor_centered"] = o.center;
    report.settings["renormalize"] = false;
    ConceptorDebiasResult r = conceptor_debias(in.store, resolved, o.alpha, o.center);
    details = {{"aperture", r.conceptor.aperture},
               {"source_word_count", r.conceptor.source_word_count},
               {"eigenvalues_max", r.conceptor.eigenvalues.back()},
               {"eigenvalues_min", r.conceptor.eigenvalues.front()}};
    if (!o.conceptor_out.empty()) save_conceptor(r.conceptor, o.conceptor_out);
    debiased = std::move(r.store);
  } else if (o.method == "softweat") {
    SoftWeatConfig sc;
    sc.lambda = o.lambda;
    sc.threshold = o.threshold;
    sc.neighbors = o.neighbors;
    report.settings["lambda"] = o.lambda;
    report.settings["threshold"] = o.threshold;
    report.settings["neighbors"] = o.neighbors;
    report.settings["max_basis_vectors"] = sc.max_basis_vectors;
    report.settings["translation"] = "centroid_to_norm_scaled_null_space_vector";
    report.settings["candidate_evaluation"] = "full_translation";
    SoftWeatResult r = softweat_debias(in.store, resolved, sc);
    nlohmann::json plans = nlohmann::json::array();
    for (const auto& sp : r.plan.subclasses) {
      nlohmann::json cands = nlohmann::json::array();
      for (const auto& c : sp.candidates) {
        cands.push_back({{"basis_index", c.basis_index},
                         {"sign", c.sign},
                         {"aggregate_weat", c.aggregate_weat}});
      }
      std::vector<std::string> selected;
      for (std::size_t a : sp.selected_attributes) selected.push_back(resolved.attribute_sets[a].name);
      plans.push_back({{"subclass", sp.name},
                       {"skipped", sp.skipped},
                       {"expanded_size", sp.expanded.size()},
                       {"selected_attributes", selected},
                       {"null_space_dim", sp.null_space_dim},
                       {"chosen", sp.chosen},
                       {"centroid_norm", sp.centroid_norm},
                       {"candidates", cands}});
    }
    details = {{"plans", plans}};
    debiased = std::move(r.store);
  } else {
    throw InputError("unknown method '" + o.method + "' (expected hard, softweat or conceptor)");
  }
  report.details[o.method] = details;

  const EmbeddingFormat out_format = resolve_format(o.out_format, o.out_embedding);
  save(debiased, o.out_embedding, out_format);

  report.results.push_back(compute_metrics("baseline", in.store, resolved, sent, rc));
  report.results.push_back(compute_metrics(o.method, debiased, resolved, sent, rc));
  if (sent != nullptr && rc.runs >= 2) {
    report.t_tests.push_back(compare_rnsb(report.results[0], report.results[1]));
  }
  write_report_json(report, o.out);
  write_report_csv(report, csv_path_for(o.out));
  log().info("debias_done method={} weat_before={} weat_after={}", o.method,
             report.results[0].weat_aggregate, report.results[1].weat_aggregate);
  return kExitOk;
}

int cmd_analogies(const Options& o) {
  LoadedInput in = load_input(o.input);
  const BiasLexicon lex = load_lexicon(o.lexicon);
  const ResolvedLexicon resolved = resolve(lex, in.store);
  const auto attributes = resolved.attribute_indices();

  std::vector<AnalogyScore> all;
  for (std::size_t i = 0; i < resolved.subclasses.size(); ++i) {
    for (std::size_t j = 0; j < resolved.subclasses.size(); ++j) {
      if (i == j) continue;
      std::vector<std::size_t> left;
      std::vector<std::size_t> right;
      for (const auto& w : resolved.subclasses[i].targets) left.push_back(w.index);
      for (const auto& w : resolved.subclasses[j].targets) right.push_back(w.index);
      auto found = enumerate_analogies(in.store, left, right, attributes, o.delta, o.min_score);
      all.insert(all.end(), found.begin(), found.end());
    }
  }
  std::sort(all.begin(), all.end(), [](const AnalogyScore& l, const AnalogyScore& r) {
    if (l.score != r.score) return l.score > r.score;
    return std::tie(l.a, l.b, l.x, l.y) < std::tie(r.a, r.b, r.x, r.y);
  });
  write_analogies_csv(all, o.out);
  log().info("analogies_done out={} count={}", o.out, all.size());
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const RnsbConfig rc = rnsb_config(o.sentiment);
  LoadedInput in = load_input(o.input);
  const BiasLexicon lex = load_lexicon(o.lexicon);
  const auto sentiment = load_sentiment(o.sentiment);
  const ResolvedLexicon resolved = resolve(lex, in.store);
  SoftWeatConfig sc;
  sc.threshold = o.threshold;
  sc.neighbors = o.neighbors;
  const SweepResult sweep = sweep_lambda(in.store, resolved, sentiment ? &*sentiment : nullptr,
                                         o.lambda_grid, sc, rc);
  write_sweep_csv(sweep, o.out);
  return kExitOk;
}

int cmd_convert(const Options& o) {
  LoadedInput in = load_input(o.input);
  const EmbeddingFormat out_format = resolve_format(o.out_format, o.out_embedding);
  save(in.store, o.out_embedding, out_format);
  log().info("convert_done out={} format={} words={}", o.out_embedding, format_name(out_format),
             in.store.size());
  return kExitOk;
}

void add_input(CLI::App* cmd, Options& o) {
  cmd->add_option("--embedding", o.input.embedding, "Embedding file")->required();
  cmd->add_option("--format", o.input.format,
                  "glove-text or word2vec-binary (default: by extension, .bin = binary)");
  cmd->add_option("--limit", o.input.limit, "Load only the first N words (0 = all)");
  cmd->add_flag("--normalize", o.input.normalize, "Scale every vector to unit length first");
}

void add_sentiment(CLI::App* cmd, Options& o) {
  cmd->add_option("--sentiment-pos", o.sentiment.positive, "Positive sentiment word list");
  cmd->add_option("--sentiment-neg", o.sentiment.negative, "Negative sentiment word list");
  cmd->add_option("--runs", o.sentiment.runs, "RNSB classifier runs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.sentiment.seed, "Seed of the first RNSB run");
  cmd->add_flag("--per-term", o.sentiment.per_term,
                "Form the RNSB distribution over terms instead of subclasses");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"Measure and remove multiclass bias in word embeddings", "fairvec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto* audit = app.add_subcommand("audit", "Compute WEAT, MAC and RNSB for an embedding");
  add_input(audit, o);
  add_sentiment(audit, o);
  audit->add_option("--lexicon", o.lexicon, "Bias lexicon JSON")->required();
  audit->add_option("--out", o.out, "Report JSON path (CSV written alongside)")->required();

  auto* debias = app.add_subcommand("debias", "Debias an embedding and report pre/post metrics");
  add_input(debias, o);
  add_sentiment(debias, o);
  debias->add_option("--lexicon", o.lexicon, "Bias lexicon JSON")->required();
  debias->add_option("--method", o.method, "hard, softweat or conceptor")
      ->required()
      ->check(CLI::IsMember({"hard", "softweat", "conceptor"}));
  debias->add_option("--alpha", o.alpha, "Conceptor aperture");
  debias->add_option("--lambda", o.lambda, "SoftWEAT translation scale");
  debias->add_option("--threshold", o.threshold, "SoftWEAT effect-size threshold");
  debias->add_option("--neighbors", o.neighbors, "SoftWEAT neighbours per target");
  debias->add_option("--k", o.k, "Hard-debias subspace rank (default: subclasses - 1)");
  debias->add_flag("--center", o.center, "Center the conceptor correlation matrix");
  debias->add_option("--conceptor-out", o.conceptor_out, "Also save the conceptor matrix");
  debias->add_option("--out-embedding", o.out_embedding, "Debiased embedding path")->required();
  debias->add_option("--out-format", o.out_format, "Output format (default: by extension, .bin = word2vec-binary)");
  debias->add_option("--out", o.out, "Report JSON path (CSV written alongside)")->required();

  auto* analogies = app.add_subcommand("analogies", "Enumerate and score identity analogies");
  add_input(analogies, o);
  analogies->add_option("--lexicon", o.lexicon, "Bias lexicon JSON")->required();
  analogies->add_option("--delta", o.delta, "Similarity threshold on |x - y|");
  analogies->add_option("--min-score", o.min_score, "Keep analogies with |score| >= this");
  analogies->add_option("--out", o.out, "CSV output path")->required();

  auto* sweep = app.add_subcommand("sweep", "SoftWEAT lambda sweep");
  add_input(sweep, o);
  add_sentiment(sweep, o);
  sweep->add_option("--lexicon", o.lexicon, "Bias lexicon JSON")->required();
  sweep->add_option("--lambda", o.lambda_grid, "Comma-separated, strictly increasing grid")
      ->delimiter(',');
  sweep->add_option("--threshold", o.threshold, "SoftWEAT effect-size threshold");
  sweep->add_option("--neighbors", o.neighbors, "SoftWEAT neighbours per target");
  sweep->add_option("--out", o.out, "CSV output path")->required();

  auto* convert = app.add_subcommand("convert", "Convert between embedding formats");
  add_input(convert, o);
  convert->add_option("--out-embedding", o.out_embedding, "Output path")->required();
  convert->add_option("--out-format", o.out_format, "Output format (default: by extension, .bin = word2vec-binary)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*audit) return cmd_audit(o);
    if (*debias) return cmd_debias(o);
    if (*analogies) return cmd_analogies(o);
    if (*sweep) return cmd_sweep(o);
    if (*convert) return cmd_convert(o);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitInput;
}

}  // namespace fairvec
