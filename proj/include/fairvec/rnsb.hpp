#pragma once

// Relative negative sentiment bias: a logistic sentiment classifier is
// trained on embedded sentiment words, identity terms are scored for
// negative sentiment, and the resulting distribution is compared to the
// uniform one by KL divergence.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairvec/embedding_store.hpp"
#include "fairvec/lexicon.hpp"

namespace fairvec {

struct SentimentLexicon {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
};

// One word per line; empty lines and lines starting with ';' are skipped.
// Words are lowercased. Throws InputError if either list is empty or the
// lists overlap.
SentimentLexicon load_sentiment_lexicon(const std::filesystem::path& positive,
                                        const std::filesystem::path& negative);
void validate(const SentimentLexicon& lexicon);

struct ClassifierConfig {
  double learning_rate = 0.1;
  double l2 = 1e-3;
  std::size_t epochs = 1000;
  double train_fraction = 0.8;
  // Training stops early once the gradient norm falls below this.
  double gradient_tolerance = 1e-6;
  std::size_t min_words_per_class = 10;
};

// Row-major features with binary labels (1 = negative sentiment).
struct LabeledData {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t epochs_run = 0;
  bool converged = false;
  std::vector<double> loss_history;  // objective before each accepted step
};

// Mean log-loss plus (l2 / 2) |w|^2; the bias is not penalized.
double regularized_log_loss(std::span<const double> weights, double bias,
                            const LabeledData& data, double l2);

// Gradient of regularized_log_loss. `grad_weights` must have length dim.
void regularized_log_loss_gradient(std::span<const double> weights, double bias,
                                   const LabeledData& data, double l2,
                                   std::span<double> grad_weights, double& grad_bias);

// Full-batch gradient descent from zero. A step that would raise the
// objective is retried with half the step size, so the recorded loss
// never increases.
LogisticModel train_logistic(const LabeledData& train, const ClassifierConfig& config);

double accuracy(const LogisticModel& model, const LabeledData& data);

// Resolves the sentiment words against the store, splits each polarity
// with the given seed, trains, and records held-out accuracy.
LogisticModel train_sentiment_classifier(const EmbeddingStore& store,
                                         const SentimentLexicon& sentiment, std::uint64_t seed,
                                         const ClassifierConfig& config = {});

// sigmoid(w.x + b). Throws InputError on a dimension mismatch.
double negative_probability(const LogisticModel& model, std::span<const double> x);

enum class DistributionMode { kPerSubclass, kPerTerm };

std::string_view distribution_mode_name(DistributionMode mode);

struct SentimentDistribution {
  std::vector<std::string> labels;  // subclass names, or terms in per-term mode
  std::vector<double> negative_probability;
  std::vector<double> p;
};

SentimentDistribution subclass_distribution(const LogisticModel& model,
                                            const EmbeddingStore& store,
                                            const ResolvedLexicon& lexicon,
                                            DistributionMode mode = DistributionMode::kPerSubclass);

// Natural-log KL(P || U_k) with 0 ln 0 = 0. Throws InputError unless P is a
// distribution (non-negative, sums to 1 within 1e-9).
double kl_from_uniform(std::span<const double> p);

struct RnsbConfig {
  std::size_t runs = 20;
  std::uint64_t base_seed = 0;
  ClassifierConfig classifier;
  DistributionMode mode = DistributionMode::kPerSubclass;
};

struct RnsbResult {
  double kl = 0.0;      // mean over runs
  double kl_std = 0.0;  // sample standard deviation over runs (0 for one run)
  std::size_t runs = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_run_kl;
  std::vector<double> per_run_test_accuracy;
  std::size_t nonconverged_runs = 0;
  std::vector<std::string> labels;
  std::vector<double> negative_probability;  // per-run mean
  std::vector<double> distribution;          // per-run mean of P
};

// Runs train -> score -> KL for seeds base_seed .. base_seed + runs - 1.
RnsbResult rnsb(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                const SentimentLexicon& sentiment, const RnsbConfig& config = {});

struct TTestResult {
  double t = 0.0;
  double p = 0.5;
  double df = 1.0;
};

// Welch's unequal-variance t-test, one-tailed for mean(a) > mean(b).
// Each sample needs at least 2 values.
TTestResult one_tailed_t_test(std::span<const double> sample_a, std::span<const double> sample_b);

}  // namespace fairvec
