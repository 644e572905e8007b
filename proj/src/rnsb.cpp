#include "fairvec/rnsb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <boost/math/special_functions/beta.hpp>

#include "fairvec/error.hpp"
#include "fairvec/log.hpp"
#include "fairvec/parallel.hpp"
#include "fairvec/simd/kernels.hpp"

namespace fairvec {

namespace {

std::vector<std::string> read_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sentiment lexicon: " + path.string());
  std::vector<std::string> words;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line.erase(0, first);
    if (line.front() == ';') continue;
    std::string w = to_lower(line);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void compute_logits(std::span<const double> weights, double bias, const LabeledData& data,
                    std::vector<double>& logits) {
  logits.resize(data.size());
  if (data.size() > 0) simd::gemv(data.features, data.size(), weights, logits);
  for (double& z : logits) z += bias;
}

struct Split {
  LabeledData train;
  LabeledData test;
};

Split stratified_split(const EmbeddingStore& store, const std::vector<std::size_t>& positive,
                       const std::vector<std::size_t>& negative, std::uint64_t seed,
                       double train_fraction) {
  std::mt19937_64 rng(seed);
  Split s;
  s.train.dim = s.test.dim = store.dim();
  auto place = [&](std::vector<std::size_t> rows, int label) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(rows.size())));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      LabeledData& dst = i < n_train ? s.train : s.test;
      auto r = store.row(rows[i]);
      dst.features.insert(dst.features.end(), r.begin(), r.end());
      dst.labels.push_back(label);
    }
  };
  place(positive, 0);
  place(negative, 1);
  return s;
}

struct ResolvedSentiment {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
};

ResolvedSentiment resolve_sentiment(const EmbeddingStore& store, const SentimentLexicon& lex,
                                    std::size_t min_words) {
  ResolvedSentiment r;
  auto lookup = [&](const std::vector<std::string>& words, std::vector<std::size_t>& out) {
    for (const auto& w : words) {
      if (auto idx = match_term(store, Term{to_lower(w), w})) out.push_back(*idx);
    }
  };
  lookup(lex.positive, r.positive);
  lookup(lex.negative, r.negative);
  if (r.positive.size() < min_words || r.negative.size() < min_words) {
    throw InputError("sentiment lexicon: need at least " + std::to_string(min_words) +
                     " in-vocabulary words per polarity (found " +
                     std::to_string(r.positive.size()) + " positive, " +
                     std::to_string(r.negative.size()) + " negative)");
  }
  return r;
}

LogisticModel train_split(const EmbeddingStore& store, const ResolvedSentiment& words,
                          std::uint64_t seed, const ClassifierConfig& config) {
  Split split = stratified_split(store, words.positive, words.negative, seed,
                                 config.train_fraction);
  LogisticModel model = train_logistic(split.train, config);
  model.test_size = split.test.size();
  model.test_accuracy = split.test.size() > 0 ? accuracy(model, split.test) : model.train_accuracy;
  return model;
}

}  // namespace

SentimentLexicon load_sentiment_lexicon(const std::filesystem::path& positive,
                                        const std::filesystem::path& negative) {
  SentimentLexicon lex{read_word_list(positive), read_word_list(negative)};
  validate(lex);
  return lex;
}

void validate(const SentimentLexicon& lex) {
  if (lex.positive.empty()) throw InputError("sentiment lexicon: positive list is empty");
  if (lex.negative.empty()) throw InputError("sentiment lexicon: negative list is empty");
  std::set<std::string> pos;
  for (const auto& w : lex.positive) pos.insert(to_lower(w));
  for (const auto& w : lex.negative) {
    if (pos.contains(to_lower(w))) {
      throw InputError("sentiment lexicon: '" + w + "' is both positive and negative");
    }
  }
}

double regularized_log_loss(std::span<const double> weights, double bias,
                            const LabeledData& data, double l2) {
  std::vector<double> logits;
  compute_logits(weights, bias, data, logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    loss += softplus(logits[i]) - static_cast<double>(data.labels[i]) * logits[i];
  }
  if (data.size() > 0) loss /= static_cast<double>(data.size());
  return loss + 0.5 * l2 * simd::squared_norm(weights);
}

void regularized_log_loss_gradient(std::span<const double> weights, double bias,
                                   const LabeledData& data, double l2,
                                   std::span<double> grad_weights, double& grad_bias) {
  std::vector<double> logits;
  compute_logits(weights, bias, data, logits);
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  grad_bias = 0.0;
  const double inv_n = data.size() > 0 ? 1.0 / static_cast<double>(data.size()) : 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double residual = (sigmoid(logits[i]) - static_cast<double>(data.labels[i])) * inv_n;
    simd::axpy(residual, data.row(i), grad_weights);
    grad_bias += residual;
  }
  simd::axpy(l2, weights, grad_weights);
}

LogisticModel train_logistic(const LabeledData& train, const ClassifierConfig& config) {
  const std::size_t d = train.dim;
  LogisticModel model;
  model.weights.assign(d, 0.0);
  model.train_size = train.size();

  std::vector<double> grad(d);
  std::vector<double> candidate(d);
  double grad_bias = 0.0;
  double loss = regularized_log_loss(model.weights, model.bias, train, config.l2);
  double step = config.learning_rate;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    regularized_log_loss_gradient(model.weights, model.bias, train, config.l2, grad, grad_bias);
    const double gnorm = std::sqrt(simd::squared_norm(grad) + grad_bias * grad_bias);
    if (gnorm < config.gradient_tolerance) {
      model.converged = true;
      break;
    }
    model.loss_history.push_back(loss);
    // Backtrack until the objective does not increase.
    for (int halvings = 0; halvings < 60; ++halvings) {
      std::copy(model.weights.begin(), model.weights.end(), candidate.begin());
      simd::axpy(-step, grad, candidate);
      const double candidate_bias = model.bias - step * grad_bias;
      const double candidate_loss = regularized_log_loss(candidate, candidate_bias, train, config.l2);
      if (candidate_loss <= loss) {
        model.weights.swap(candidate);
        model.bias = candidate_bias;
        loss = candidate_loss;
        break;
      }
      step *= 0.5;
    }
    model.epochs_run = epoch + 1;
  }
  model.loss_history.push_back(loss);
  model.train_accuracy = train.size() > 0 ? accuracy(model, train) : 0.0;
  return model;
}

double accuracy(const LogisticModel& model, const LabeledData& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int predicted = negative_probability(model, data.row(i)) >= 0.5 ? 1 : 0;
    correct += predicted == data.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

LogisticModel train_sentiment_classifier(const EmbeddingStore& store,
                                         const SentimentLexicon& sentiment, std::uint64_t seed,
                                         const ClassifierConfig& config) {
  const auto words = resolve_sentiment(store, sentiment, config.min_words_per_class);
  LogisticModel model = train_split(store, words, seed, config);
  if (!model.converged) {
    log().debug("classifier_not_converged seed={} epochs={} final_loss={}", seed,
                model.epochs_run, model.loss_history.back());
  }
  return model;
}

double negative_probability(const LogisticModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw InputError("negative_probability: dimension mismatch");
  }
  return sigmoid(simd::dot(model.weights, x) + model.bias);
}

std::string_view distribution_mode_name(DistributionMode mode) {
  return mode == DistributionMode::kPerSubclass ? "per-subclass" : "per-term";
}

SentimentDistribution subclass_distribution(const LogisticModel& model,
                                            const EmbeddingStore& store,
                                            const ResolvedLexicon& lexicon,
                                            DistributionMode mode) {
  SentimentDistribution out;
  for (const auto& sc : lexicon.subclasses) {
    if (sc.targets.empty()) throw InputError("subclass '" + sc.name + "' has no target terms");
    if (mode == DistributionMode::kPerSubclass) {
      double sum = 0.0;
      for (const auto& t : sc.targets) sum += negative_probability(model, store.row(t.index));
      out.labels.push_back(sc.name);
      out.negative_probability.push_back(sum / static_cast<double>(sc.targets.size()));
    } else {
      for (const auto& t : sc.targets) {
        out.labels.push_back(t.word);
        out.negative_probability.push_back(negative_probability(model, store.row(t.index)));
      }
    }
  }
  const double total =
      std::accumulate(out.negative_probability.begin(), out.negative_probability.end(), 0.0);
  if (!(total > 0.0)) throw ComputationError("negative probabilities sum to zero");
  for (double v : out.negative_probability) out.p.push_back(v / total);
  return out;
}

double kl_from_uniform(std::span<const double> p) {
  if (p.empty()) throw InputError("kl_from_uniform: empty distribution");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError("kl_from_uniform: entries must be finite and non-negative");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("kl_from_uniform: entries must sum to 1");
  const double k = static_cast<double>(p.size());
  double kl = 0.0;
  for (double v : p) {
    if (v > 0.0) kl += v * std::log(v * k);
  }
  return std::max(kl, 0.0);
}

RnsbResult rnsb(const EmbeddingStore& store, const ResolvedLexicon& lexicon,
                const SentimentLexicon& sentiment, const RnsbConfig& config) {
  if (config.runs == 0) throw InputError("rnsb: runs must be at least 1");
  const auto words = resolve_sentiment(store, sentiment, config.classifier.min_words_per_class);

  struct Run {
    double kl = 0.0;
    double test_accuracy = 0.0;
    bool converged = false;
    SentimentDistribution dist;
  };
  std::vector<Run> runs(config.runs);
  parallel_for(
      config.runs,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
          const LogisticModel model =
              train_split(store, words, config.base_seed + r, config.classifier);
          runs[r].dist = subclass_distribution(model, store, lexicon, config.mode);
          runs[r].kl = kl_from_uniform(runs[r].dist.p);
          runs[r].test_accuracy = model.test_accuracy;
          runs[r].converged = model.converged;
        }
      },
      1);

  RnsbResult out;
  out.runs = config.runs;
  out.labels = runs.front().dist.labels;
  out.negative_probability.assign(out.labels.size(), 0.0);
  out.distribution.assign(out.labels.size(), 0.0);
  const double n = static_cast<double>(config.runs);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out.seeds.push_back(config.base_seed + r);
    out.per_run_kl.push_back(runs[r].kl);
    out.per_run_test_accuracy.push_back(runs[r].test_accuracy);
    out.nonconverged_runs += runs[r].converged ? 0 : 1;
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
      out.negative_probability[i] += runs[r].dist.negative_probability[i] / n;
      out.distribution[i] += runs[r].dist.p[i] / n;
    }
  }
  out.kl = std::accumulate(out.per_run_kl.begin(), out.per_run_kl.end(), 0.0) / n;
  if (config.runs > 1) {
    double ss = 0.0;
    for (double v : out.per_run_kl) ss += (v - out.kl) * (v - out.kl);
    out.kl_std = std::sqrt(ss / (n - 1.0));
  }
  if (out.nonconverged_runs > 0) {
    log().info("classifier_not_converged runs={} of={} epochs={}", out.nonconverged_runs,
               config.runs, config.classifier.epochs);
  }
  return out;
}

TTestResult one_tailed_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw InputError("t-test: each sample needs at least 2 values");
  }
  auto moments = [](std::span<const double> s) {
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [mean_a, var_a] = moments(a);
  const auto [mean_b, var_b] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double qa = var_a / na;
  const double qb = var_b / nb;
  const double se2 = qa + qb;

  TTestResult r;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (mean_a == mean_b) {
      r.t = 0.0;
      r.p = 0.5;
    } else {
      r.t = mean_a > mean_b ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      r.p = mean_a > mean_b ? 0.0 : 1.0;
    }
    return r;
  }
  r.t = (mean_a - mean_b) / std::sqrt(se2);
  r.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  // P(T > |t|) = I_{df/(df+t^2)}(df/2, 1/2) / 2
  const double x = r.df / (r.df + r.t * r.t);
  const double upper = 0.5 * boost::math::ibeta(0.5 * r.df, 0.5, x);
  r.p = r.t >= 0.0 ? upper : 1.0 - upper;
  return r;
}

}  // namespace fairvec
