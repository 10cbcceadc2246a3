#include "nmt/training.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nmt/errors.hpp"
#include "nmt/format.hpp"

namespace nmt {

void TrainConfig::validate() const {
  if (hidden_size <= 0) throw std::invalid_argument("hidden_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (teacher_forcing_prob < 0.0 || teacher_forcing_prob > 1.0) {
    throw std::invalid_argument("teacher_forcing_prob must lie in [0, 1]");
  }
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (max_length < 1) throw std::invalid_argument("max_length must be at least 1");
  if (log_interval < 1) throw std::invalid_argument("log_interval must be at least 1");
}

double context_concentration(const Eigen::MatrixXd& alphas) {
  if (alphas.rows() == 0) throw std::invalid_argument("context_concentration of empty alphas");
  double sum = 0.0;
  for (Eigen::Index p = 0; p < alphas.rows(); ++p) sum += alphas.row(p).maxCoeff();
  return sum / static_cast<double>(alphas.rows());
}

std::optional<TrainStepResult> train_step(const SentencePair& pair, ModelParams& params,
                                          const TrainConfig& config, Rng& rng,
                                          std::vector<std::string>* diagnostics) {
  const auto max_len = static_cast<std::size_t>(config.max_length);
  if (pair.source.size() > max_len || pair.target.size() > max_len) {
    if (diagnostics) {
      diagnostics->push_back("pair of lengths " + std::to_string(pair.source.size()) + "/" +
                             std::to_string(pair.target.size()) + " exceeds max_length " +
                             std::to_string(config.max_length) + ", skipped");
    }
    return std::nullopt;
  }
  const bool teacher = rng.bernoulli(config.teacher_forcing_prob);
  ForwardCache cache =
      teacher ? forward_teacher_forced(pair, params) : forward_free_running(pair, params);
  ModelParams grads = backward(cache, params);
  sgd_update(params, grads, config.learning_rate);
  return TrainStepResult{cache.loss, context_concentration(cache.alphas)};
}

void sgd_update(ModelParams& params, const ModelParams& grads, double learning_rate) {
  auto prefs = params.parameters();
  auto grefs = grads.parameters();
  for (std::size_t i = 0; i < prefs.size(); ++i) {
    if (prefs[i].size() != grefs[i].size()) {
      throw std::invalid_argument("sgd_update: gradient shape mismatch");
    }
    for (Eigen::Index k = 0; k < prefs[i].size(); ++k) {
      prefs[i].data[k] -= learning_rate * grefs[i].data[k];
    }
  }
}

TrainReport train_from(const std::vector<SentencePair>& dataset, const TrainConfig& config,
                       Regime regime, ModelParams params, Rng& rng,
                       const IntervalCallback& on_interval) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  TrainReport report;
  report.regime = regime;

  double interval_loss = 0.0;
  double interval_conc = 0.0;
  long long interval_count = 0;

  for (long long it = 1; it <= config.iterations; ++it) {
    const SentencePair& pair = dataset[rng.uniform_int(dataset.size())];
    std::optional<TrainStepResult> step =
        train_step(pair, params, config, rng, &report.diagnostics);
    if (step) {
      if (!std::isfinite(step->loss)) {
        throw NumericalError("non-finite training loss", it);
      }
      interval_loss += step->loss;
      interval_conc += step->context_concentration;
      ++interval_count;
    }
    if (it % config.log_interval == 0) {
      const double mean_loss = interval_count > 0
                                   ? interval_loss / static_cast<double>(interval_count)
                                   : std::numeric_limits<double>::quiet_NaN();
      const double mean_conc = interval_count > 0
                                   ? interval_conc / static_cast<double>(interval_count)
                                   : std::numeric_limits<double>::quiet_NaN();
      report.loss_log.push_back({it, mean_loss});
      report.context_log.push_back({it, mean_conc});
      if (on_interval) on_interval(it, mean_loss, mean_conc, params);
      interval_loss = 0.0;
      interval_conc = 0.0;
      interval_count = 0;
    }
  }
  report.final_params = std::move(params);
  return report;
}

TrainReport train(const std::vector<SentencePair>& dataset, const TrainConfig& config,
                  Regime regime, int src_vocab_size, int tgt_vocab_size,
                  const IntervalCallback& on_interval) {
  config.validate();
  ModelHyper hyper;
  hyper.src_vocab = src_vocab_size;
  hyper.tgt_vocab = tgt_vocab_size;
  hyper.hidden = config.hidden_size;
  hyper.embed = config.hidden_size;
  hyper.attn = config.hidden_size;
  Rng rng(config.rng_seed);
  ModelParams params = init_model_params(hyper, rng);
  return train_from(dataset, config, regime, std::move(params), rng, on_interval);
}

TokenPairSet regime_token_pairs(const std::vector<EmailRecord>& records, Regime regime,
                                Direction direction, int max_length,
                                std::vector<std::string>* diagnostics) {
  TokenPairSet out;
  const auto keep = [&](std::vector<std::string> src, std::vector<std::string> tgt,
                        int email_id) {
    if (src.empty() || tgt.empty()) {
      if (diagnostics) {
        diagnostics->push_back("email " + std::to_string(email_id) +
                               ": empty token sequence, unit dropped");
      }
      return;
    }
    // +1 for the EOS appended at encoding time
    if (static_cast<int>(src.size()) + 1 > max_length ||
        static_cast<int>(tgt.size()) + 1 > max_length) {
      ++out.dropped_over_length;
      if (diagnostics) {
        diagnostics->push_back("email " + std::to_string(email_id) +
                               ": unit exceeds max_length, dropped");
      }
      return;
    }
    out.pairs.emplace_back(std::move(src), std::move(tgt));
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const EmailRecord& r = records[i];
    const int id = static_cast<int>(i);
    const std::string& src_text =
        direction == Direction::kMalayToEnglish ? r.malay_human : r.eng_human;
    const std::string& tgt_text =
        direction == Direction::kMalayToEnglish ? r.eng_human : r.malay_human;

    if (regime == Regime::kEmailLevel) {
      keep(tokenize(src_text), tokenize(tgt_text), id);
      continue;
    }
    std::vector<Paragraph> src_paras = tokenize_paragraphs(src_text, id);
    std::vector<Paragraph> tgt_paras = tokenize_paragraphs(tgt_text, id);
    if (src_paras.size() != tgt_paras.size()) {
      ++out.excluded_emails;
      if (diagnostics) {
        diagnostics->push_back("email " + std::to_string(id) + ": paragraph counts differ (" +
                               std::to_string(src_paras.size()) + " vs " +
                               std::to_string(tgt_paras.size()) + "), excluded");
      }
      continue;
    }
    for (std::size_t p = 0; p < src_paras.size(); ++p) {
      keep(std::move(src_paras[p].tokens), std::move(tgt_paras[p].tokens), id);
    }
  }
  return out;
}

std::vector<SentencePair> prepare_regime(const std::vector<EmailRecord>& records, Regime regime,
                                         Direction direction, const Vocabulary& src_vocab,
                                         const Vocabulary& tgt_vocab, int max_length,
                                         std::vector<std::string>* diagnostics) {
  TokenPairSet set = regime_token_pairs(records, regime, direction, max_length, diagnostics);
  std::vector<SentencePair> pairs;
  pairs.reserve(set.pairs.size());
  for (const TokenPair& tp : set.pairs) {
    pairs.push_back(encode_pair(src_vocab, tgt_vocab, tp.first, tp.second));
  }
  return pairs;
}

PreparedDataset prepare_dataset(const std::vector<EmailRecord>& records, Regime regime,
                                Direction direction, int max_length) {
  PreparedDataset out;
  out.email_count = static_cast<long long>(records.size());
  TokenPairSet set =
      regime_token_pairs(records, regime, direction, max_length, &out.diagnostics);
  out.excluded_emails = set.excluded_emails;
  out.dropped_over_length = set.dropped_over_length;

  std::vector<std::vector<std::string>> src_seqs, tgt_seqs;
  src_seqs.reserve(set.pairs.size());
  tgt_seqs.reserve(set.pairs.size());
  for (const TokenPair& tp : set.pairs) {
    src_seqs.push_back(tp.first);
    tgt_seqs.push_back(tp.second);
  }
  out.src_vocab = build_vocabulary(src_seqs);
  out.tgt_vocab = build_vocabulary(tgt_seqs);

  out.pairs.reserve(set.pairs.size());
  for (const TokenPair& tp : set.pairs) {
    out.pairs.push_back(encode_pair(out.src_vocab, out.tgt_vocab, tp.first, tp.second));
  }
  return out;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, char delimiter)
    : out_(path), delimiter_(delimiter) {
  if (!out_) throw IoError("cannot write metrics file " + path.string());
}

void MetricsWriter::append(long long iteration, double mean_loss, double mean_concentration) {
  out_ << iteration << delimiter_ << format_double(mean_loss) << delimiter_
       << format_double(mean_concentration) << '\n';
  out_.flush();
}

}  // namespace nmt
