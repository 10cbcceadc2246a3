#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nmt/corpus.hpp"
#include "nmt/model.hpp"

namespace nmt {

// BLEU with its canonical settings: modified n-gram precisions up to max_n
// with uniform weights, geometric mean, multiplied by the brevity penalty.
// Without smoothing a zero precision zeroes the score. Orders that no
// reference reaches (every reference shorter than n) stay out of the mean, so
// an exact match scores 1 regardless of length; their stored precision is 0.
struct BleuBreakdown {
  double score = 0.0;
  std::array<double, 4> ngram_precisions{};  // p_1..p_4; entries past max_n stay 0
  double brevity_penalty = 1.0;
  long long candidate_length = 0;
  long long reference_length = 0;  // closest reference length (pooled across a corpus)
};

enum class EvalSystem { kModelVsHuman, kBaselineVsHuman };
const char* to_string(EvalSystem s);

struct ComparisonRow {
  Direction direction;
  EvalSystem system;
  double corpus_bleu;
};

struct NgramCounts {
  long long matches = 0;
  long long total = 0;
};

// Greedy decoding from SOS and the encoder's final hidden state; argmax per
// step (ties to the lowest index) until EOS or max_len emitted tokens. The
// result carries neither SOS bootstrap nor terminating EOS.
std::vector<int> greedy_decode(const std::vector<int>& source, const ModelParams& params,
                               int max_len);

// Candidate n-gram counts clipped by the maximum count of the same n-gram in
// any single reference. total = number of candidate n-grams.
NgramCounts modified_ngram_precision(const std::vector<std::string>& candidate,
                                     const std::vector<std::vector<std::string>>& references,
                                     int n);

// Smoothing adds one to matches and total for n >= 2 only.
BleuBreakdown sentence_bleu(const std::vector<std::string>& candidate,
                            const std::vector<std::vector<std::string>>& references,
                            int max_n = 4, bool smoothing = false,
                            std::vector<std::string>* diagnostics = nullptr);

struct ScoredPair {
  std::vector<std::string> candidate;
  std::vector<std::vector<std::string>> references;
};

// Pools matched/total counts and lengths across the corpus before computing
// precisions and the brevity penalty (not an average of sentence scores).
BleuBreakdown corpus_bleu(const std::vector<ScoredPair>& pairs, int max_n = 4,
                          bool smoothing = false);

struct SentenceDetail {
  std::string source;
  std::string reference;
  std::string hypothesis;
  double sentence_bleu = 0.0;
};

struct SystemEval {
  EvalSystem system;
  BleuBreakdown pooled;
  double mean_sentence_bleu = 0.0;
  std::vector<SentenceDetail> details;
};

struct EvalConfig {
  Direction direction = Direction::kMalayToEnglish;
  int sample_size = 100;
  std::uint64_t seed = 0;
  int max_decode_len = 2000;
  bool smoothing = false;
};

struct EvalReport {
  Direction direction = Direction::kMalayToEnglish;
  int sample_size = 0;  // paragraphs actually scored
  std::uint64_t seed = 0;
  std::vector<SystemEval> systems;  // model first, then baseline
  std::vector<std::string> diagnostics;
};

// Splits each email record into aligned paragraph records across all four
// columns; emails whose columns disagree on paragraph count are excluded
// with a diagnostic.
std::vector<EmailRecord> paragraph_records(const std::vector<EmailRecord>& records,
                                           std::vector<std::string>* diagnostics = nullptr);

// Scores the model's greedy translations and the stored baseline column
// against the human column over a seeded sample of paragraph records.
// sample_size past the population falls back to the full population with a
// diagnostic.
EvalReport evaluate_full(const ModelParams& params, const Vocabulary& src_vocab,
                         const Vocabulary& tgt_vocab, const std::vector<EmailRecord>& eval_set,
                         const EvalConfig& config);

// Corpus-BLEU comparison rows (model vs human, baseline vs human).
std::vector<ComparisonRow> evaluate_against_table2(const ModelParams& params,
                                                   const Vocabulary& src_vocab,
                                                   const Vocabulary& tgt_vocab,
                                                   const std::vector<EmailRecord>& eval_set,
                                                   Direction direction, int sample_size = 100,
                                                   std::uint64_t rng_seed = 0);

// Report file: one row per system with the pooled breakdown; the
// sentence-averaged score rides along as the last column.
void write_eval_report(const std::filesystem::path& path, const EvalReport& report,
                       char delimiter = '\t');

// Per-sentence rows (system, source, reference, hypothesis, sentence_bleu).
void write_eval_details(const std::filesystem::path& path, const EvalReport& report,
                        char delimiter = '\t');

}  // namespace nmt
