#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "nmt/corpus.hpp"
#include "nmt/model.hpp"
#include "nmt/rng.hpp"

namespace nmt {

struct TrainConfig {
  int hidden_size = 256;
  double learning_rate = 0.01;
  double teacher_forcing_prob = 0.5;
  long long iterations = 1;
  int max_length = 2000;  // tokens, including EOS
  long long log_interval = 100;
  std::uint64_t rng_seed = 0;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct LossLogEntry {
  long long iteration;
  double mean_loss;
};

struct ContextLogEntry {
  long long iteration;
  double mean_concentration;
};

struct TrainReport {
  std::vector<LossLogEntry> loss_log;        // interval means, cadence log_interval
  std::vector<ContextLogEntry> context_log;  // same cadence
  ModelParams final_params;
  Regime regime = Regime::kParagraphLevel;
  std::vector<std::string> diagnostics;
};

struct TrainStepResult {
  double loss;  // pre-update loss
  double context_concentration;
};

// Mean over decoder steps of the per-step maximum attention weight. Rows of
// `alphas` must each be a normalized weight vector.
double context_concentration(const Eigen::MatrixXd& alphas);

// One training step: a single Bernoulli(teacher_forcing_prob) draw decides
// whether the decoder consumes ground truth or its own argmax for the whole
// pair, then backprop and one SGD update. Over-length pairs are skipped
// (nullopt) with a note in `diagnostics`.
std::optional<TrainStepResult> train_step(const SentencePair& pair, ModelParams& params,
                                          const TrainConfig& config, Rng& rng,
                                          std::vector<std::string>* diagnostics = nullptr);

// theta <- theta - lr * grad, block by block.
void sgd_update(ModelParams& params, const ModelParams& grads, double learning_rate);

// Invoked every log_interval iterations with the interval means and the
// current parameter state (for metric streaming and periodic checkpoints).
using IntervalCallback = std::function<void(long long iteration, double mean_loss,
                                            double mean_concentration, const ModelParams& params)>;

// Full training run: parameters initialized from config.rng_seed, pairs
// sampled uniformly with replacement, interval means recorded. Throws
// NumericalError the first time the loss stops being finite.
TrainReport train(const std::vector<SentencePair>& dataset, const TrainConfig& config,
                  Regime regime, int src_vocab_size, int tgt_vocab_size,
                  const IntervalCallback& on_interval = nullptr);

// Same loop from explicit initial parameters and random stream.
TrainReport train_from(const std::vector<SentencePair>& dataset, const TrainConfig& config,
                       Regime regime, ModelParams params, Rng& rng,
                       const IntervalCallback& on_interval = nullptr);

// ---- Dataset selection ----

using TokenPair = std::pair<std::vector<std::string>, std::vector<std::string>>;

struct TokenPairSet {
  std::vector<TokenPair> pairs;
  long long excluded_emails = 0;      // paragraph-count mismatches
  long long dropped_over_length = 0;  // pairs past max_length
};

// Token-level (source, target) units for one regime and direction.
// email level: one unit per record over the full texts. paragraph level: one
// unit per aligned paragraph; records whose two sides split into different
// paragraph counts are excluded with a diagnostic.
TokenPairSet regime_token_pairs(const std::vector<EmailRecord>& records, Regime regime,
                                Direction direction, int max_length = 2000,
                                std::vector<std::string>* diagnostics = nullptr);

// The same selection, encoded against the given vocabularies.
std::vector<SentencePair> prepare_regime(const std::vector<EmailRecord>& records, Regime regime,
                                         Direction direction, const Vocabulary& src_vocab,
                                         const Vocabulary& tgt_vocab, int max_length = 2000,
                                         std::vector<std::string>* diagnostics = nullptr);

struct PreparedDataset {
  std::vector<SentencePair> pairs;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  long long email_count = 0;
  long long excluded_emails = 0;
  long long dropped_over_length = 0;
  std::vector<std::string> diagnostics;
};

// Selection + vocabulary construction + encoding in one pass. Vocabularies
// are built from exactly the units that survive selection.
PreparedDataset prepare_dataset(const std::vector<EmailRecord>& records, Regime regime,
                                Direction direction, int max_length = 2000);

// Append-only metrics rows (iteration, mean_loss, context_concentration).
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, char delimiter = '\t');
  void append(long long iteration, double mean_loss, double mean_concentration);

 private:
  std::ofstream out_;
  char delimiter_;
};

}  // namespace nmt
