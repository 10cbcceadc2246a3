#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "nmt/errors.hpp"
#include "nmt/eval.hpp"
#include "nmt/training.hpp"
#include "test_util.hpp"

using namespace nmt;

TEST_CASE("context_concentration: one-hot, uniform, range, contract") {
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(3, 4);
  onehot(0, 1) = 1.0;
  onehot(1, 3) = 1.0;
  onehot(2, 0) = 1.0;
  CHECK(context_concentration(onehot) == 1.0);

  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(2, 5, 0.2);
  CHECK(context_concentration(uniform) == doctest::Approx(0.2).epsilon(1e-15));

  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform_int(5));
    const int cols = 1 + static_cast<int>(rng.uniform_int(6));
    Eigen::MatrixXd alphas(rows, cols);
    for (int r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (int c = 0; c < cols; ++c) {
        alphas(r, c) = rng.uniform_range(0.0001, 1.0);
        sum += alphas(r, c);
      }
      alphas.row(r) /= sum;
    }
    const double v = context_concentration(alphas);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }

  CHECK_THROWS_AS(context_concentration(Eigen::MatrixXd(0, 3)), std::invalid_argument);
}

TEST_CASE("train_step applies exactly one SGD step of lr * grad") {
  auto params = test_util::random_model(8, 8, 4, 33);
  SentencePair pair{{3, 4, 1}, {5, 1}};

  TrainConfig config;
  config.hidden_size = 4;
  config.learning_rate = 0.25;
  config.teacher_forcing_prob = 1.0;  // deterministic path
  config.iterations = 1;

  // expected state computed independently of train_step
  ModelParams expected = params;
  ModelParams grads = backward(forward_teacher_forced(pair, expected), expected);
  sgd_update(expected, grads, config.learning_rate);

  ModelParams actual = params;
  Rng rng(1);
  auto result = train_step(pair, actual, config, rng);
  REQUIRE(result.has_value());
  CHECK(result->loss == forward_teacher_forced(pair, params).loss);  // pre-update loss

  auto erefs = expected.parameters();
  auto arefs = actual.parameters();
  for (std::size_t b = 0; b < erefs.size(); ++b) {
    for (Eigen::Index i = 0; i < erefs[b].size(); ++i) {
      CHECK(arefs[b].data[i] == erefs[b].data[i]);
    }
  }
}

TEST_CASE("train_step skips over-length pairs with a diagnostic") {
  auto params = test_util::random_model(8, 8, 4, 3);
  SentencePair pair{{3, 4, 5, 6, 1}, {5, 1}};
  TrainConfig config;
  config.hidden_size = 4;
  config.max_length = 4;  // source is 5 long
  std::vector<std::string> diags;
  Rng rng(1);
  ModelParams before = params;
  auto result = train_step(pair, params, config, rng, &diags);
  CHECK_FALSE(result.has_value());
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].find("max_length") != std::string::npos);
  // parameters untouched
  auto brefs = before.parameters();
  auto arefs = params.parameters();
  for (std::size_t b = 0; b < brefs.size(); ++b) {
    for (Eigen::Index i = 0; i < brefs[b].size(); ++i) {
      CHECK(arefs[b].data[i] == brefs[b].data[i]);
    }
  }
}

TEST_CASE("teacher forcing probability selects the decoder input rule") {
  auto params = test_util::random_model(8, 8, 4, 44);
  SentencePair pair{{3, 4, 1}, {5, 6, 7, 1}};

  // p = 1: inputs are the shifted ground truth
  ForwardCache forced = forward_teacher_forced(pair, params);
  CHECK(forced.decoder_inputs == std::vector<int>{Vocabulary::kSosIndex, 5, 6, 7});

  // p = 0: inputs after SOS are the model's own argmaxes
  ForwardCache free_run = forward_free_running(pair, params);
  for (std::size_t p = 1; p < free_run.decoder_inputs.size(); ++p) {
    CHECK(free_run.decoder_inputs[p] == argmax(free_run.probs[p - 1]));
  }

  // and train_step at p=1 / p=0 matches those paths exactly
  for (double tf : {1.0, 0.0}) {
    ModelParams expected = params;
    ForwardCache cache = tf == 1.0 ? forward_teacher_forced(pair, expected)
                                   : forward_free_running(pair, expected);
    sgd_update(expected, backward(cache, expected), 0.01);

    ModelParams actual = params;
    TrainConfig config;
    config.hidden_size = 4;
    config.learning_rate = 0.01;
    config.teacher_forcing_prob = tf;
    Rng rng(9);
    auto result = train_step(pair, actual, config, rng);
    REQUIRE(result.has_value());
    CHECK(result->loss == cache.loss);
    auto erefs = expected.parameters();
    auto arefs = actual.parameters();
    for (std::size_t b = 0; b < erefs.size(); ++b) {
      for (Eigen::Index i = 0; i < erefs[b].size(); ++i) {
        CHECK(arefs[b].data[i] == erefs[b].data[i]);
      }
    }
  }
}

TEST_CASE("train: logging cadence and seeded determinism") {
  Rng data_rng(10);
  std::vector<SentencePair> dataset;
  for (int i = 0; i < 5; ++i) dataset.push_back(test_util::random_pair(10, 10, 4, data_rng));

  TrainConfig config;
  config.hidden_size = 6;
  config.learning_rate = 0.1;
  config.iterations = 100;
  config.log_interval = 100;
  config.rng_seed = 42;
  TrainReport one = train(dataset, config, Regime::kParagraphLevel, 10, 10);
  REQUIRE(one.loss_log.size() == 1);
  CHECK(one.loss_log[0].iteration == 100);
  CHECK(one.context_log.size() == 1);

  config.iterations = 250;
  TrainReport a = train(dataset, config, Regime::kParagraphLevel, 10, 10);
  TrainReport b = train(dataset, config, Regime::kParagraphLevel, 10, 10);
  REQUIRE(a.loss_log.size() == 2);  // at 100 and 200
  CHECK(a.loss_log[1].iteration == 200);
  for (std::size_t i = 0; i < a.loss_log.size(); ++i) {
    CHECK(a.loss_log[i].mean_loss == b.loss_log[i].mean_loss);
    CHECK(a.context_log[i].mean_concentration == b.context_log[i].mean_concentration);
  }
  CHECK(a.regime == Regime::kParagraphLevel);

  CHECK_THROWS_AS(train({}, config, Regime::kEmailLevel, 10, 10), std::invalid_argument);
}

TEST_CASE("train aborts with the iteration number on non-finite loss") {
  Rng data_rng(4);
  std::vector<SentencePair> dataset = {test_util::random_pair(8, 8, 3, data_rng)};
  auto params = test_util::random_model(8, 8, 4, 77);
  params.w_out(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig config;
  config.hidden_size = 4;
  config.iterations = 10;
  Rng rng(1);
  try {
    train_from(dataset, config, Regime::kEmailLevel, std::move(params), rng);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.iteration() == 1);
    CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
  }
}

TEST_CASE("config validation rejects out-of-range settings") {
  TrainConfig c;
  c.iterations = 10;
  c.validate();
  TrainConfig bad = c;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.teacher_forcing_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.log_interval = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("a single pair is memorized and reproduced by greedy decoding") {
  std::vector<SentencePair> dataset = {{{3, 4, 5, 6, 1}, {7, 3, 8, 1}}};
  TrainConfig config;
  config.hidden_size = 16;
  config.learning_rate = 0.5;
  config.teacher_forcing_prob = 0.5;
  config.iterations = 800;
  config.log_interval = 100;
  config.rng_seed = 1;
  TrainReport report = train(dataset, config, Regime::kParagraphLevel, 10, 10);
  const double final_loss = teacher_forced_loss(dataset[0], report.final_params);
  INFO("final loss ", final_loss);
  CHECK(final_loss < 0.05);
  CHECK(greedy_decode(dataset[0].source, report.final_params, 50) ==
        std::vector<int>{7, 3, 8});
}

TEST_CASE("after memorization the teacher-forcing flag stops mattering") {
  std::vector<SentencePair> dataset = {{{3, 4, 1}, {5, 6, 1}}};
  TrainConfig config;
  config.hidden_size = 16;
  config.learning_rate = 0.5;
  config.teacher_forcing_prob = 1.0;
  config.iterations = 600;
  config.rng_seed = 3;
  TrainReport report = train(dataset, config, Regime::kParagraphLevel, 8, 8);

  // precondition: argmax equals ground truth at every step
  ForwardCache forced = forward_teacher_forced(dataset[0], report.final_params);
  for (std::size_t p = 0; p < forced.probs.size(); ++p) {
    REQUIRE(argmax(forced.probs[p]) == dataset[0].target[p]);
  }
  ForwardCache free_run = forward_free_running(dataset[0], report.final_params);
  CHECK(forced.loss == free_run.loss);  // identical trajectories, identical bits
}

TEST_CASE("regime_token_pairs counts units per regime and excludes mismatches") {
  EmailRecord aligned;
  aligned.eng_human = "one two\n\nthree four\n\nfive six";
  aligned.malay_human = "satu dua\n\ntiga empat\n\nlima enam";
  aligned.malay_baseline = "x";
  aligned.eng_baseline = "y";

  auto para = regime_token_pairs({aligned}, Regime::kParagraphLevel,
                                 Direction::kMalayToEnglish);
  CHECK(para.pairs.size() == 3);
  CHECK(para.pairs[0].first == std::vector<std::string>{"satu", "dua"});
  CHECK(para.pairs[0].second == std::vector<std::string>{"one", "two"});

  auto email = regime_token_pairs({aligned}, Regime::kEmailLevel, Direction::kMalayToEnglish);
  CHECK(email.pairs.size() == 1);
  CHECK(email.pairs[0].first.size() == 6);

  EmailRecord mismatched = aligned;
  mismatched.malay_human = "satu dua\n\ntiga empat";  // 2 paragraphs vs 3
  std::vector<std::string> diags;
  auto dropped = regime_token_pairs({mismatched}, Regime::kParagraphLevel,
                                    Direction::kMalayToEnglish, 2000, &diags);
  CHECK(dropped.pairs.empty());
  CHECK(dropped.excluded_emails == 1);
  REQUIRE_FALSE(diags.empty());
  CHECK(diags[0].find("paragraph counts differ") != std::string::npos);
}

TEST_CASE("regime_token_pairs drops over-length units") {
  EmailRecord r;
  r.eng_human = "a b c d e";
  r.malay_human = "f g h i j";
  r.malay_baseline = "x";
  r.eng_baseline = "y";
  auto set = regime_token_pairs({r}, Regime::kEmailLevel, Direction::kEnglishToMalay, 4);
  CHECK(set.pairs.empty());
  CHECK(set.dropped_over_length == 1);
}

TEST_CASE("prepare_regime and prepare_dataset agree") {
  EmailRecord r;
  r.eng_human = "hello team\n\nsee you";
  r.malay_human = "salam semua\n\njumpa lagi";
  r.malay_baseline = "salam semua\n\njumpa lagi";
  r.eng_baseline = "hello team\n\nsee you";

  PreparedDataset ds =
      prepare_dataset({r}, Regime::kParagraphLevel, Direction::kMalayToEnglish);
  CHECK(ds.pairs.size() == 2);
  CHECK(ds.email_count == 1);
  CHECK(ds.src_vocab.size() == 3 + 4);
  CHECK(ds.tgt_vocab.size() == 3 + 4);

  auto direct = prepare_regime({r}, Regime::kParagraphLevel, Direction::kMalayToEnglish,
                               ds.src_vocab, ds.tgt_vocab);
  REQUIRE(direct.size() == ds.pairs.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(direct[i].source == ds.pairs[i].source);
    CHECK(direct[i].target == ds.pairs[i].target);
  }
  // every pair ends with EOS
  for (const auto& p : ds.pairs) {
    CHECK(p.source.back() == Vocabulary::kEosIndex);
    CHECK(p.target.back() == Vocabulary::kEosIndex);
  }
}

TEST_CASE("metrics writer emits one deterministic row per interval") {
  auto dir = test_util::fresh_dir("metrics");
  {
    MetricsWriter w(dir / "m.tsv");
    w.append(100, 3.25, 0.5);
    w.append(200, 1.0 / 3.0, 0.25);
  }
  const std::string content = test_util::slurp(dir / "m.tsv");
  CHECK(content == "100\t3.25\t0.5\n200\t0.3333333333333333\t0.25\n");
}
