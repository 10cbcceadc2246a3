// Command-line front end: prepare / train / translate / evaluate over the
// 4-column bilingual email corpus. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmt/checkpoint.hpp"
#include "nmt/corpus.hpp"
#include "nmt/errors.hpp"
#include "nmt/eval.hpp"
#include "nmt/format.hpp"
#include "nmt/model.hpp"
#include "nmt/training.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

char parse_delimiter(const std::string& s) {
  if (s == "tab" || s == "\\t") return '\t';
  if (s == "comma") return ',';
  if (s == "semicolon") return ';';
  if (s == "pipe") return '|';
  if (s.size() == 1) return s[0];
  throw UsageError("delimiter must be a single character or one of tab/comma/semicolon/pipe");
}

void print_diagnostics(const std::vector<std::string>& diags) {
  for (const std::string& d : diags) std::cerr << "note: " << d << '\n';
}

struct PrepareArgs {
  std::string corpus;
  std::string out;
  std::string regime = "paragraph";
  std::string direction = "m2e";
  std::string delimiter = "tab";
  int max_length = 2000;
};

int run_prepare(const PrepareArgs& a) {
  const char delim = parse_delimiter(a.delimiter);
  std::vector<std::string> diags;
  const std::vector<nmt::EmailRecord> records = nmt::load_email_corpus(a.corpus, delim, &diags);
  const nmt::Regime regime = nmt::regime_from_string(a.regime);
  const nmt::Direction direction = nmt::direction_from_string(a.direction);

  nmt::PreparedDataset ds = nmt::prepare_dataset(records, regime, direction, a.max_length);

  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  nmt::write_pairs_jsonl(out_dir / "pairs.jsonl", ds.pairs);
  nmt::write_vocab_file(out_dir / "vocab.src.txt", ds.src_vocab);
  nmt::write_vocab_file(out_dir / "vocab.tgt.txt", ds.tgt_vocab);

  nlohmann::json stats;
  stats["direction"] = nmt::to_string(direction);
  stats["regime"] = nmt::to_string(regime);
  stats["emails"] = ds.email_count;
  stats["excluded_emails"] = ds.excluded_emails;
  stats["dropped_over_length"] = ds.dropped_over_length;
  stats["pairs"] = ds.pairs.size();
  stats["source_vocab_size"] = ds.src_vocab.size();
  stats["target_vocab_size"] = ds.tgt_vocab.size();
  stats["max_length"] = a.max_length;
  std::ofstream stats_out(out_dir / "stats.json");
  stats_out << stats.dump(2) << '\n';

  print_diagnostics(diags);
  print_diagnostics(ds.diagnostics);
  std::cout << "emails: " << ds.email_count << '\n'
            << "pairs: " << ds.pairs.size() << '\n'
            << "source vocab: " << ds.src_vocab.size() << '\n'
            << "target vocab: " << ds.tgt_vocab.size() << '\n';
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string regime = "paragraph";
  int hidden = 256;
  double lr = 0.01;
  double teacher_forcing = 0.5;
  long long iterations = 0;
  int max_length = 2000;
  long long log_interval = 100;
  std::uint64_t seed = 0;
  long long checkpoint_every = 0;
};

int run_train(const TrainArgs& a) {
  const fs::path data_dir(a.data);
  const std::vector<nmt::SentencePair> pairs = nmt::read_pairs_jsonl(data_dir / "pairs.jsonl");
  const nmt::Vocabulary src_vocab = nmt::read_vocab_file(data_dir / "vocab.src.txt");
  const nmt::Vocabulary tgt_vocab = nmt::read_vocab_file(data_dir / "vocab.tgt.txt");

  nmt::TrainConfig config;
  config.hidden_size = a.hidden;
  config.learning_rate = a.lr;
  config.teacher_forcing_prob = a.teacher_forcing;
  config.iterations = a.iterations;
  config.max_length = a.max_length;
  config.log_interval = a.log_interval;
  config.rng_seed = a.seed;
  config.validate();

  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  nmt::MetricsWriter metrics(out_dir / "metrics.tsv");

  long long last_checkpoint = 0;
  const auto on_interval = [&](long long it, double mean_loss, double mean_conc,
                               const nmt::ModelParams& params) {
    metrics.append(it, mean_loss, mean_conc);
    if (a.checkpoint_every > 0 && it - last_checkpoint >= a.checkpoint_every) {
      nmt::save_checkpoint(out_dir / ("checkpoint-" + std::to_string(it) + ".nmt"),
                           {params, src_vocab, tgt_vocab});
      last_checkpoint = it;
    }
  };

  nmt::TrainReport report = nmt::train(pairs, config, nmt::regime_from_string(a.regime),
                                       src_vocab.size(), tgt_vocab.size(), on_interval);
  nmt::save_checkpoint(out_dir / "checkpoint.nmt",
                       {report.final_params, src_vocab, tgt_vocab});

  print_diagnostics(report.diagnostics);
  if (!report.loss_log.empty()) {
    std::cout << "final interval mean loss: "
              << nmt::format_double(report.loss_log.back().mean_loss) << '\n';
  }
  std::cout << "checkpoint: " << (out_dir / "checkpoint.nmt").string() << '\n'
            << "metrics: " << (out_dir / "metrics.tsv").string() << '\n';
  return 0;
}

struct TranslateArgs {
  std::string checkpoint;
  std::string input;  // empty = stdin
  int max_length = 2000;
};

int run_translate(const TranslateArgs& a) {
  const nmt::Checkpoint ckpt = nmt::load_checkpoint(a.checkpoint);

  std::string text;
  if (a.input.empty()) {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    text = buf.str();
  } else {
    std::ifstream in(a.input);
    if (!in) throw nmt::IoError("cannot open input file " + a.input);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  bool first = true;
  for (const std::string& para : nmt::split_contextual_paragraphs(text)) {
    const std::vector<std::string> tokens = nmt::tokenize(para);
    if (tokens.empty()) continue;
    std::vector<int> source;
    source.reserve(tokens.size() + 1);
    for (const std::string& tok : tokens) source.push_back(ckpt.src_vocab.lookup(tok));
    source.push_back(nmt::Vocabulary::kEosIndex);

    const std::vector<int> out = nmt::greedy_decode(source, ckpt.params, a.max_length);
    if (!first) std::cout << '\n';
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i > 0) std::cout << ' ';
      std::cout << ckpt.tgt_vocab.word(out[i]);
    }
    std::cout << '\n';
    first = false;
  }
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string corpus;
  std::string out;
  std::string direction = "m2e";
  std::string delimiter = "tab";
  int sample_size = 100;
  std::uint64_t seed = 0;
  bool smoothing = false;
  int max_length = 2000;
};

int run_evaluate(const EvaluateArgs& a) {
  const nmt::Checkpoint ckpt = nmt::load_checkpoint(a.checkpoint);
  std::vector<std::string> diags;
  const std::vector<nmt::EmailRecord> records =
      nmt::load_email_corpus(a.corpus, parse_delimiter(a.delimiter), &diags);
  const std::vector<nmt::EmailRecord> paragraphs = nmt::paragraph_records(records, &diags);

  nmt::EvalConfig config;
  config.direction = nmt::direction_from_string(a.direction);
  config.sample_size = a.sample_size;
  config.seed = a.seed;
  config.max_decode_len = a.max_length;
  config.smoothing = a.smoothing;
  const nmt::EvalReport report =
      nmt::evaluate_full(ckpt.params, ckpt.src_vocab, ckpt.tgt_vocab, paragraphs, config);

  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  nmt::write_eval_report(out_dir / "report.tsv", report);
  nmt::write_eval_details(out_dir / "details.tsv", report);

  print_diagnostics(diags);
  print_diagnostics(report.diagnostics);
  for (const nmt::SystemEval& s : report.systems) {
    std::cout << nmt::to_string(report.direction) << ' ' << nmt::to_string(s.system)
              << " corpus_bleu=" << nmt::format_double(s.pooled.score) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRU encoder / attention-decoder translation toolkit for 4-column bilingual email corpora"};
  app.set_config("--config", "", "configuration file; command-line flags take precedence");
  app.require_subcommand(1);

  PrepareArgs prepare_args;
  CLI::App* prepare = app.add_subcommand("prepare", "split, tokenize and encode a corpus file");
  prepare->add_option("--corpus", prepare_args.corpus, "4-column corpus file")
      ->required()
      ->check(CLI::ExistingFile);
  prepare->add_option("--out", prepare_args.out, "output directory")->required();
  prepare->add_option("--regime", prepare_args.regime, "training unit")
      ->check(CLI::IsMember({"email", "paragraph"}));
  prepare->add_option("--direction", prepare_args.direction, "translation direction")
      ->check(CLI::IsMember({"m2e", "e2m"}));
  prepare->add_option("--delimiter", prepare_args.delimiter, "corpus field delimiter");
  prepare->add_option("--max-length", prepare_args.max_length, "max tokens per unit");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "run SGD over a prepared dataset");
  train->add_option("--data", train_args.data, "directory written by prepare")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_option("--regime", train_args.regime, "regime label for the run")
      ->check(CLI::IsMember({"email", "paragraph"}));
  train->add_option("--hidden", train_args.hidden, "hidden (and embedding) size");
  train->add_option("--lr", train_args.lr, "SGD learning rate");
  train->add_option("--teacher-forcing", train_args.teacher_forcing,
                    "probability of feeding ground truth");
  train->add_option("--iterations", train_args.iterations, "training iterations")->required();
  train->add_option("--max-length", train_args.max_length, "skip pairs longer than this");
  train->add_option("--log-interval", train_args.log_interval, "iterations per metrics row");
  train->add_option("--seed", train_args.seed, "random seed");
  train->add_option("--checkpoint-every", train_args.checkpoint_every,
                    "periodic checkpoint cadence (0 = final only)");

  TranslateArgs translate_args;
  CLI::App* translate = app.add_subcommand("translate", "greedy-decode text with a checkpoint");
  translate->add_option("--checkpoint", translate_args.checkpoint, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  translate->add_option("--input", translate_args.input, "input text file (default: stdin)");
  translate->add_option("--max-length", translate_args.max_length, "decoding length cap");

  EvaluateArgs evaluate_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "BLEU of model and baseline vs human");
  evaluate->add_option("--checkpoint", evaluate_args.checkpoint, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--corpus", evaluate_args.corpus, "4-column corpus file")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", evaluate_args.out, "output directory")->required();
  evaluate->add_option("--direction", evaluate_args.direction, "translation direction")
      ->check(CLI::IsMember({"m2e", "e2m"}));
  evaluate->add_option("--delimiter", evaluate_args.delimiter, "corpus field delimiter");
  evaluate->add_option("--sample-size", evaluate_args.sample_size, "paragraphs to score");
  evaluate->add_option("--seed", evaluate_args.seed, "sampling seed");
  evaluate->add_flag("--smoothing", evaluate_args.smoothing, "add-one smoothing for n >= 2");
  evaluate->add_option("--max-length", evaluate_args.max_length, "decoding length cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (prepare->parsed()) return run_prepare(prepare_args);
    if (train->parsed()) return run_train(train_args);
    if (translate->parsed()) return run_translate(translate_args);
    if (evaluate->parsed()) return run_evaluate(evaluate_args);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const nmt::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
