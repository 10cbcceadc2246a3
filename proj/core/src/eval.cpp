#include "nmt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "nmt/errors.hpp"
#include "nmt/format.hpp"
#include "nmt/rng.hpp"

namespace nmt {
namespace {

// n-gram key: tokens joined on an unprintable separator
std::string ngram_key(const std::vector<std::string>& tokens, std::size_t start, int n) {
  std::string key = tokens[start];
  for (int k = 1; k < n; ++k) {
    key.push_back('\x1f');
    key += tokens[start + static_cast<std::size_t>(k)];
  }
  return key;
}

std::unordered_map<std::string, long long> ngram_counts(const std::vector<std::string>& tokens,
                                                        int n) {
  std::unordered_map<std::string, long long> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    ++counts[ngram_key(tokens, i, n)];
  }
  return counts;
}

// closest reference length to c; ties go to the shorter reference
long long closest_reference_length(long long candidate_length,
                                   const std::vector<std::vector<std::string>>& references) {
  long long best = -1;
  for (const auto& ref : references) {
    const auto len = static_cast<long long>(ref.size());
    if (best < 0) {
      best = len;
      continue;
    }
    const long long d = std::llabs(len - candidate_length);
    const long long bd = std::llabs(best - candidate_length);
    if (d < bd || (d == bd && len < best)) best = len;
  }
  return best < 0 ? 0 : best;
}

double precision_of(const NgramCounts& c, int n, bool smoothing) {
  if (smoothing && n >= 2) {
    return static_cast<double>(c.matches + 1) / static_cast<double>(c.total + 1);
  }
  if (c.total == 0) return 0.0;
  return static_cast<double>(c.matches) / static_cast<double>(c.total);
}

// Orders that no reference reaches (all references shorter than n) are left
// out of the geometric mean; this keeps the identity score at 1 for short
// sentences while a candidate that fails to reproduce reachable n-grams still
// scores 0 unsmoothed.
BleuBreakdown assemble_bleu(const std::vector<NgramCounts>& counts,
                            const std::vector<bool>& order_live, long long candidate_length,
                            long long reference_length, int max_n, bool smoothing) {
  BleuBreakdown b;
  b.candidate_length = candidate_length;
  b.reference_length = reference_length;
  if (candidate_length == 0) {
    b.brevity_penalty = 0.0;
    return b;
  }
  b.brevity_penalty =
      candidate_length > reference_length
          ? 1.0
          : std::exp(1.0 - static_cast<double>(reference_length) /
                               static_cast<double>(candidate_length));
  double log_sum = 0.0;
  int live_orders = 0;
  bool any_zero = false;
  for (int n = 1; n <= max_n; ++n) {
    if (!order_live[static_cast<std::size_t>(n - 1)]) continue;
    const double p = precision_of(counts[static_cast<std::size_t>(n - 1)], n, smoothing);
    b.ngram_precisions[static_cast<std::size_t>(n - 1)] = p;
    ++live_orders;
    if (p <= 0.0) {
      any_zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  if (any_zero || live_orders == 0) {
    b.score = 0.0;
  } else {
    b.score = b.brevity_penalty * std::exp(log_sum / live_orders);
  }
  return b;
}

std::vector<bool> live_orders_of(const std::vector<std::vector<std::string>>& references,
                                 int max_n) {
  std::size_t longest = 0;
  for (const auto& ref : references) longest = std::max(longest, ref.size());
  std::vector<bool> live(static_cast<std::size_t>(max_n));
  for (int n = 1; n <= max_n; ++n) {
    live[static_cast<std::size_t>(n - 1)] = longest >= static_cast<std::size_t>(n);
  }
  return live;
}

void check_max_n(int max_n) {
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("max_n must lie in [1, 4]");
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

const char* to_string(EvalSystem s) {
  return s == EvalSystem::kModelVsHuman ? "model_vs_human" : "baseline_vs_human";
}

std::vector<int> greedy_decode(const std::vector<int>& source, const ModelParams& params,
                               int max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy_decode: max_len must be at least 1");
  EncoderOutput enc = encoder_forward(source, params);
  std::vector<int> out;
  int y_prev = Vocabulary::kSosIndex;
  Eigen::VectorXd state = enc.final_hidden;
  for (int i = 0; i < max_len; ++i) {
    DecoderStepResult step = decoder_step(y_prev, state, enc.annotations, params);
    const int best = argmax(step.probs);
    if (best == Vocabulary::kEosIndex) break;
    out.push_back(best);
    y_prev = best;
    state = std::move(step.state);
  }
  return out;
}

NgramCounts modified_ngram_precision(const std::vector<std::string>& candidate,
                                     const std::vector<std::vector<std::string>>& references,
                                     int n) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  NgramCounts out;
  if (static_cast<int>(candidate.size()) < n) return out;
  out.total = static_cast<long long>(candidate.size()) - n + 1;

  const auto cand_counts = ngram_counts(candidate, n);
  std::vector<std::unordered_map<std::string, long long>> ref_counts;
  ref_counts.reserve(references.size());
  for (const auto& ref : references) ref_counts.push_back(ngram_counts(ref, n));

  for (const auto& [key, count] : cand_counts) {
    long long clip = 0;
    for (const auto& rc : ref_counts) {
      auto it = rc.find(key);
      if (it != rc.end()) clip = std::max(clip, it->second);
    }
    out.matches += std::min(count, clip);
  }
  return out;
}

BleuBreakdown sentence_bleu(const std::vector<std::string>& candidate,
                            const std::vector<std::vector<std::string>>& references, int max_n,
                            bool smoothing, std::vector<std::string>* diagnostics) {
  check_max_n(max_n);
  if (references.empty()) throw std::invalid_argument("sentence_bleu: no references");
  const long long ref_len = closest_reference_length(
      static_cast<long long>(candidate.size()), references);
  if (candidate.empty()) {
    if (diagnostics) diagnostics->push_back("empty candidate scored 0");
    BleuBreakdown b;
    b.reference_length = ref_len;
    b.brevity_penalty = 0.0;
    return b;
  }
  std::vector<NgramCounts> counts;
  counts.reserve(static_cast<std::size_t>(max_n));
  for (int n = 1; n <= max_n; ++n) {
    counts.push_back(modified_ngram_precision(candidate, references, n));
  }
  return assemble_bleu(counts, live_orders_of(references, max_n),
                       static_cast<long long>(candidate.size()), ref_len, max_n, smoothing);
}

BleuBreakdown corpus_bleu(const std::vector<ScoredPair>& pairs, int max_n, bool smoothing) {
  check_max_n(max_n);
  if (pairs.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");
  std::vector<NgramCounts> pooled(static_cast<std::size_t>(max_n));
  std::vector<bool> live(static_cast<std::size_t>(max_n), false);
  long long cand_len = 0;
  long long ref_len = 0;
  for (const ScoredPair& pair : pairs) {
    if (pair.references.empty()) throw std::invalid_argument("corpus_bleu: pair without references");
    const std::vector<bool> pair_live = live_orders_of(pair.references, max_n);
    for (int n = 1; n <= max_n; ++n) {
      const NgramCounts c = modified_ngram_precision(pair.candidate, pair.references, n);
      pooled[static_cast<std::size_t>(n - 1)].matches += c.matches;
      pooled[static_cast<std::size_t>(n - 1)].total += c.total;
      if (pair_live[static_cast<std::size_t>(n - 1)]) live[static_cast<std::size_t>(n - 1)] = true;
    }
    cand_len += static_cast<long long>(pair.candidate.size());
    ref_len += closest_reference_length(static_cast<long long>(pair.candidate.size()),
                                        pair.references);
  }
  return assemble_bleu(pooled, live, cand_len, ref_len, max_n, smoothing);
}

std::vector<EmailRecord> paragraph_records(const std::vector<EmailRecord>& records,
                                           std::vector<std::string>* diagnostics) {
  std::vector<EmailRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EmailRecord& r = records[i];
    const std::vector<std::string> eng = split_contextual_paragraphs(r.eng_human);
    const std::vector<std::string> malay = split_contextual_paragraphs(r.malay_human);
    const std::vector<std::string> malay_base = split_contextual_paragraphs(r.malay_baseline);
    const std::vector<std::string> eng_base = split_contextual_paragraphs(r.eng_baseline);
    if (eng.size() != malay.size() || eng.size() != malay_base.size() ||
        eng.size() != eng_base.size()) {
      if (diagnostics) {
        diagnostics->push_back("email " + std::to_string(i) +
                               ": paragraph counts differ across columns, excluded");
      }
      continue;
    }
    for (std::size_t p = 0; p < eng.size(); ++p) {
      out.push_back({eng[p], malay[p], malay_base[p], eng_base[p]});
    }
  }
  return out;
}

EvalReport evaluate_full(const ModelParams& params, const Vocabulary& src_vocab,
                         const Vocabulary& tgt_vocab, const std::vector<EmailRecord>& eval_set,
                         const EvalConfig& config) {
  if (eval_set.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
  if (config.sample_size < 1) throw std::invalid_argument("evaluate: sample_size must be >= 1");

  EvalReport report;
  report.direction = config.direction;
  report.seed = config.seed;

  // Seeded sample without replacement; oversized requests use everything.
  const std::size_t population = eval_set.size();
  std::size_t take = static_cast<std::size_t>(config.sample_size);
  if (take >= population) {
    if (take > population) {
      report.diagnostics.push_back("sample_size " + std::to_string(take) +
                                   " exceeds population " + std::to_string(population) +
                                   ", using full population");
    }
    take = population;
  }
  std::vector<std::size_t> indices(population);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  Rng rng(config.seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(population - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(take);
  report.sample_size = static_cast<int>(take);

  SystemEval model_eval{EvalSystem::kModelVsHuman, {}, 0.0, {}};
  SystemEval baseline_eval{EvalSystem::kBaselineVsHuman, {}, 0.0, {}};
  std::vector<ScoredPair> model_pairs, baseline_pairs;
  model_pairs.reserve(take);
  baseline_pairs.reserve(take);

  const bool m2e = config.direction == Direction::kMalayToEnglish;
  for (const std::size_t idx : indices) {
    const EmailRecord& r = eval_set[idx];
    const std::string& src_text = m2e ? r.malay_human : r.eng_human;
    const std::string& ref_text = m2e ? r.eng_human : r.malay_human;
    const std::string& base_text = m2e ? r.eng_baseline : r.malay_baseline;

    const std::vector<std::string> src_tokens = tokenize(src_text);
    const std::vector<std::string> ref_tokens = tokenize(ref_text);
    const std::vector<std::string> base_tokens = tokenize(base_text);
    if (src_tokens.empty() || ref_tokens.empty()) {
      report.diagnostics.push_back("paragraph " + std::to_string(idx) +
                                   ": empty after tokenization, skipped");
      continue;
    }

    std::vector<int> source;
    source.reserve(src_tokens.size() + 1);
    for (const std::string& tok : src_tokens) source.push_back(src_vocab.lookup(tok));
    source.push_back(Vocabulary::kEosIndex);

    std::vector<int> hyp_indices = greedy_decode(source, params, config.max_decode_len);
    std::vector<std::string> hyp_tokens;
    hyp_tokens.reserve(hyp_indices.size());
    for (int t : hyp_indices) hyp_tokens.push_back(tgt_vocab.word(t));

    const BleuBreakdown model_sent =
        sentence_bleu(hyp_tokens, {ref_tokens}, 4, config.smoothing, &report.diagnostics);
    const BleuBreakdown base_sent =
        sentence_bleu(base_tokens, {ref_tokens}, 4, config.smoothing, &report.diagnostics);

    model_eval.details.push_back({join_tokens(src_tokens), join_tokens(ref_tokens),
                                  join_tokens(hyp_tokens), model_sent.score});
    baseline_eval.details.push_back({join_tokens(src_tokens), join_tokens(ref_tokens),
                                     join_tokens(base_tokens), base_sent.score});
    model_pairs.push_back({std::move(hyp_tokens), {ref_tokens}});
    baseline_pairs.push_back({std::move(base_tokens), {std::move(ref_tokens)}});
  }

  if (model_pairs.empty()) throw std::invalid_argument("evaluate: nothing scorable in sample");

  model_eval.pooled = corpus_bleu(model_pairs, 4, config.smoothing);
  baseline_eval.pooled = corpus_bleu(baseline_pairs, 4, config.smoothing);
  for (const SentenceDetail& d : model_eval.details) model_eval.mean_sentence_bleu += d.sentence_bleu;
  for (const SentenceDetail& d : baseline_eval.details) {
    baseline_eval.mean_sentence_bleu += d.sentence_bleu;
  }
  model_eval.mean_sentence_bleu /= static_cast<double>(model_eval.details.size());
  baseline_eval.mean_sentence_bleu /= static_cast<double>(baseline_eval.details.size());

  report.sample_size = static_cast<int>(model_eval.details.size());
  report.systems.push_back(std::move(model_eval));
  report.systems.push_back(std::move(baseline_eval));
  return report;
}

std::vector<ComparisonRow> evaluate_against_table2(const ModelParams& params,
                                                   const Vocabulary& src_vocab,
                                                   const Vocabulary& tgt_vocab,
                                                   const std::vector<EmailRecord>& eval_set,
                                                   Direction direction, int sample_size,
                                                   std::uint64_t rng_seed) {
  EvalConfig config;
  config.direction = direction;
  config.sample_size = sample_size;
  config.seed = rng_seed;
  EvalReport report = evaluate_full(params, src_vocab, tgt_vocab, eval_set, config);
  std::vector<ComparisonRow> rows;
  rows.reserve(report.systems.size());
  for (const SystemEval& s : report.systems) {
    rows.push_back({report.direction, s.system, s.pooled.score});
  }
  return rows;
}

void write_eval_report(const std::filesystem::path& path, const EvalReport& report,
                       char delimiter) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report file " + path.string());
  const char d = delimiter;
  out << "direction" << d << "system" << d << "corpus_bleu" << d << "p1" << d << "p2" << d
      << "p3" << d << "p4" << d << "brevity_penalty" << d << "sample_size" << d << "seed" << d
      << "mean_sentence_bleu" << '\n';
  for (const SystemEval& s : report.systems) {
    out << to_string(report.direction) << d << to_string(s.system) << d
        << format_double(s.pooled.score);
    for (double p : s.pooled.ngram_precisions) out << d << format_double(p);
    out << d << format_double(s.pooled.brevity_penalty) << d << report.sample_size << d
        << report.seed << d << format_double(s.mean_sentence_bleu) << '\n';
  }
}

void write_eval_details(const std::filesystem::path& path, const EvalReport& report,
                        char delimiter) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write details file " + path.string());
  const char d = delimiter;
  out << "system" << d << "source" << d << "reference" << d << "hypothesis" << d
      << "sentence_bleu" << '\n';
  for (const SystemEval& s : report.systems) {
    for (const SentenceDetail& detail : s.details) {
      out << to_string(s.system) << d << detail.source << d << detail.reference << d
          << detail.hypothesis << d << format_double(detail.sentence_bleu) << '\n';
    }
  }
}

}  // namespace nmt
