#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "nmt/corpus.hpp"
#include "nmt/errors.hpp"
#include "nmt/rng.hpp"
#include "test_util.hpp"

using namespace nmt;

TEST_CASE("load_email_corpus reads 4-column rows in order") {
  auto dir = test_util::fresh_dir("corpus_load");
  test_util::spit(dir / "c.tsv",
                  "eng human\tmalay human\tmalay google translate\teng google translate\n"
                  "Dear Students\tPelajar yang dihormati\tPelajar yang dihormati\tDear student\n"
                  "Good morning\tSelamat pagi\tSelamat pagi\tGood morning\n");
  auto records = load_email_corpus(dir / "c.tsv");
  REQUIRE(records.size() == 2);
  CHECK(records[0].eng_human == "Dear Students");
  CHECK(records[0].malay_human == "Pelajar yang dihormati");
  CHECK(records[0].malay_baseline == "Pelajar yang dihormati");
  CHECK(records[0].eng_baseline == "Dear student");
  CHECK(records[1].eng_human == "Good morning");
}

TEST_CASE("load_email_corpus: empty file and header-only file give empty lists") {
  auto dir = test_util::fresh_dir("corpus_empty");
  test_util::spit(dir / "empty.tsv", "");
  CHECK(load_email_corpus(dir / "empty.tsv").empty());
  test_util::spit(dir / "hdr.tsv", "eng human\tmalay human\tmalay google translate\teng google translate\n");
  CHECK(load_email_corpus(dir / "hdr.tsv").empty());
}

TEST_CASE("load_email_corpus: wrong field count names the row") {
  auto dir = test_util::fresh_dir("corpus_badrow");
  test_util::spit(dir / "c.tsv", "a\tb\tc\td\none\ttwo\tthree\n");
  try {
    load_email_corpus(dir / "c.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("load_email_corpus: missing file is an IoError") {
  CHECK_THROWS_AS(load_email_corpus("no_such_file.tsv"), IoError);
}

TEST_CASE("load_email_corpus: empty-field rows are dropped with a diagnostic") {
  auto dir = test_util::fresh_dir("corpus_emptyfield");
  test_util::spit(dir / "c.tsv", "a\tb\tc\td\na\t \tc\td\n");
  std::vector<std::string> diags;
  auto records = load_email_corpus(dir / "c.tsv", '\t', &diags);
  CHECK(records.size() == 1);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].find("row 2") != std::string::npos);
}

TEST_CASE("load_email_corpus: backslash escapes reconstruct paragraph breaks") {
  auto dir = test_util::fresh_dir("corpus_escapes");
  test_util::spit(dir / "c.tsv", "one\\n\\ntwo\tsatu\\n\\ndua\tsatu\\n\\ndua\tone\\n\\ntwo\n");
  auto records = load_email_corpus(dir / "c.tsv");
  REQUIRE(records.size() == 1);
  CHECK(records[0].eng_human == "one\n\ntwo");
  CHECK(split_contextual_paragraphs(records[0].eng_human).size() == 2);
}

TEST_CASE("load_email_corpus honors a custom delimiter") {
  auto dir = test_util::fresh_dir("corpus_delim");
  test_util::spit(dir / "c.csv", "a,b,c,d\n");
  auto records = load_email_corpus(dir / "c.csv", ',');
  REQUIRE(records.size() == 1);
  CHECK(records[0].eng_baseline == "d");
}

TEST_CASE("split_contextual_paragraphs splits on blank lines") {
  CHECK(split_contextual_paragraphs("para one.\n\npara two.") ==
        std::vector<std::string>{"para one.", "para two."});
  CHECK(split_contextual_paragraphs("single paragraph") ==
        std::vector<std::string>{"single paragraph"});
  CHECK(split_contextual_paragraphs("").empty());
  CHECK(split_contextual_paragraphs("  \n\t\n   ").empty());
  // runs of blank lines form one boundary
  CHECK(split_contextual_paragraphs("a\n\n\n\nb").size() == 2);
  // lines inside a paragraph stay together
  CHECK(split_contextual_paragraphs("a\nb\n\nc") == std::vector<std::string>{"a\nb", "c"});
}

TEST_CASE("split_contextual_paragraphs keeps every non-boundary character") {
  Rng rng(41);
  const std::string alphabet = "ab .\n\n\n";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const auto len = rng.uniform_int(60);
    for (std::uint64_t i = 0; i < len; ++i) {
      text.push_back(alphabet[rng.uniform_int(alphabet.size())]);
    }
    // independent oracle: non-blank lines joined on newline
    std::string expected;
    std::string line;
    std::vector<std::string> kept;
    std::istringstream lines(text);
    while (std::getline(lines, line)) {
      bool blank = true;
      for (char c : line) {
        if (c != ' ' && c != '\t') blank = false;
      }
      if (!blank) kept.push_back(line);
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (i > 0) expected.push_back('\n');
      expected += kept[i];
    }

    std::string joined;
    auto paras = split_contextual_paragraphs(text);
    for (std::size_t i = 0; i < paras.size(); ++i) {
      if (i > 0) joined.push_back('\n');
      joined += paras[i];
    }
    CHECK(joined == expected);
  }
}

TEST_CASE("tokenize lowercases, detaches punctuation, splits whitespace") {
  CHECK(tokenize("Dear Students") == std::vector<std::string>{"dear", "students"});
  CHECK(tokenize("program ini.") == std::vector<std::string>{"program", "ini", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Hello,  world!") == std::vector<std::string>{"hello", ",", "world", "!"});
  CHECK(tokenize(" \t\n ").empty());
}

TEST_CASE("tokenize is idempotent on its own space-joined output") {
  Rng rng(77);
  const std::string alphabet = "aB c.D,e'f-2 \n\t!";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const auto len = rng.uniform_int(40);
    for (std::uint64_t i = 0; i < len; ++i) {
      text.push_back(alphabet[rng.uniform_int(alphabet.size())]);
    }
    auto tokens = tokenize(text);
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) joined.push_back(' ');
      joined += tokens[i];
    }
    CHECK(tokenize(joined) == tokens);
  }
}

TEST_CASE("tokenize_paragraphs tags email id and paragraph order") {
  auto paras = tokenize_paragraphs("First one.\n\nSecond, two", 7);
  REQUIRE(paras.size() == 2);
  CHECK(paras[0].tokens == std::vector<std::string>{"first", "one", "."});
  CHECK(paras[0].source_email_id == 7);
  CHECK(paras[0].paragraph_index == 0);
  CHECK(paras[1].paragraph_index == 1);
}

TEST_CASE("build_vocabulary: reserved block plus first-appearance order") {
  auto vocab = build_vocabulary({{"a", "b"}, {"b", "c"}});
  CHECK(vocab.size() == 6);
  CHECK(vocab.lookup("a") == 3);
  CHECK(vocab.lookup("b") == 4);
  CHECK(vocab.lookup("c") == 5);
  CHECK(vocab.word(Vocabulary::kSosIndex) == Vocabulary::sos_word());
  CHECK(vocab.word(Vocabulary::kEosIndex) == Vocabulary::eos_word());
  CHECK(vocab.word(Vocabulary::kUnkIndex) == Vocabulary::unk_word());

  CHECK(build_vocabulary({}).size() == 3);
}

TEST_CASE("vocabulary maps are exact inverses over a contiguous index range") {
  Rng rng(11);
  std::vector<std::vector<std::string>> seqs;
  for (int i = 0; i < 20; ++i) {
    std::vector<std::string> seq;
    const auto len = 1 + rng.uniform_int(8);
    for (std::uint64_t k = 0; k < len; ++k) {
      seq.push_back("w" + std::to_string(rng.uniform_int(40)));
    }
    seqs.push_back(seq);
  }
  auto vocab = build_vocabulary(seqs);
  for (int i = 0; i < vocab.size(); ++i) {
    CHECK(vocab.lookup(vocab.word(i)) == i);
  }
  CHECK_THROWS_AS(vocab.word(vocab.size()), std::out_of_range);
  CHECK_THROWS_AS(vocab.word(-1), std::out_of_range);
  CHECK(vocab.lookup("never-seen") == Vocabulary::kUnkIndex);
}

TEST_CASE("encode_pair maps tokens and appends EOS once") {
  auto src = build_vocabulary({{"a"}});
  auto tgt = build_vocabulary({{"b"}});
  auto pair = encode_pair(src, tgt, {"a"}, {"b"});
  CHECK(pair.source == std::vector<int>{3, Vocabulary::kEosIndex});
  CHECK(pair.target == std::vector<int>{3, Vocabulary::kEosIndex});

  auto with_unk = encode_pair(src, tgt, {"a", "zzz"}, {"b"});
  CHECK(with_unk.source == std::vector<int>{3, Vocabulary::kUnkIndex, Vocabulary::kEosIndex});

  CHECK_THROWS_AS(encode_pair(src, tgt, {}, {"b"}), std::invalid_argument);
  CHECK_THROWS_AS(encode_pair(src, tgt, {"a"}, {}), std::invalid_argument);
}

TEST_CASE("encode_pair then decode reproduces in-vocabulary tokens") {
  auto vocab = build_vocabulary({{"x", "y", "z", "q"}});
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tokens;
    const auto len = 1 + rng.uniform_int(6);
    const std::vector<std::string> words = {"x", "y", "z", "q"};
    for (std::uint64_t i = 0; i < len; ++i) tokens.push_back(words[rng.uniform_int(4)]);
    auto pair = encode_pair(vocab, vocab, tokens, tokens);
    CHECK(pair.source.size() == tokens.size() + 1);
    CHECK(pair.source.back() == Vocabulary::kEosIndex);
    std::vector<std::string> decoded;
    for (std::size_t i = 0; i + 1 < pair.source.size(); ++i) {
      decoded.push_back(vocab.word(pair.source[i]));
    }
    CHECK(decoded == tokens);
  }
}

TEST_CASE("pairs jsonl and vocab files round-trip") {
  auto dir = test_util::fresh_dir("corpus_files");
  std::vector<SentencePair> pairs = {{{3, 4, 1}, {5, 1}}, {{6, 1}, {3, 3, 3, 1}}};
  write_pairs_jsonl(dir / "pairs.jsonl", pairs);
  auto loaded = read_pairs_jsonl(dir / "pairs.jsonl");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].source == pairs[0].source);
  CHECK(loaded[1].target == pairs[1].target);

  auto vocab = build_vocabulary({{"alpha", "beta", "gamma"}});
  write_vocab_file(dir / "vocab.txt", vocab);
  CHECK(test_util::slurp(dir / "vocab.txt") == "alpha\nbeta\ngamma\n");
  auto vocab2 = read_vocab_file(dir / "vocab.txt");
  CHECK(vocab2.size() == vocab.size());
  CHECK(vocab2.lookup("gamma") == vocab.lookup("gamma"));

  CHECK_THROWS_AS(read_pairs_jsonl(dir / "missing.jsonl"), IoError);
  test_util::spit(dir / "bad.jsonl", "{not json\n");
  CHECK_THROWS_AS(read_pairs_jsonl(dir / "bad.jsonl"), ParseError);
}
