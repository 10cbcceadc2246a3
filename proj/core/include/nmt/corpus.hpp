#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace nmt {

// Translation direction between the two human columns of the corpus.
enum class Direction { kMalayToEnglish, kEnglishToMalay };

// Training-unit selection: whole emails vs. blank-line contextual paragraphs.
enum class Regime { kEmailLevel, kParagraphLevel };

const char* to_string(Direction d);
const char* to_string(Regime r);
Direction direction_from_string(const std::string& s);  // "m2e" | "e2m"
Regime regime_from_string(const std::string& s);        // "email" | "paragraph"

// One row of the 4-column bilingual email corpus. The last two columns hold
// pre-computed baseline translations (stored in the file, never fetched live).
struct EmailRecord {
  std::string eng_human;
  std::string malay_human;
  std::string malay_baseline;  // machine translation of eng_human into Malay
  std::string eng_baseline;    // machine translation of malay_human into English
};

// A contextual paragraph: one blank-line-delimited block of an email,
// tokenized, tagged with where it came from.
struct Paragraph {
  std::vector<std::string> tokens;
  int source_email_id = 0;
  int paragraph_index = 0;  // 0-based within the email
};

// Encoded training unit. Both sequences end with the EOS index.
struct SentencePair {
  std::vector<int> source;
  std::vector<int> target;
};

// Bidirectional word<->index map. Indices 0/1/2 are reserved for SOS/EOS/UNK;
// real words follow in first-appearance order. Immutable once built.
class Vocabulary {
 public:
  static constexpr int kSosIndex = 0;
  static constexpr int kEosIndex = 1;
  static constexpr int kUnkIndex = 2;
  static constexpr int kReservedCount = 3;

  static const char* sos_word() { return "<sos>"; }
  static const char* eos_word() { return "<eos>"; }
  static const char* unk_word() { return "<unk>"; }

  // Reserved entries only.
  Vocabulary();

  // Non-reserved words in index order (index = position + 3). Duplicates are
  // a contract violation.
  static Vocabulary from_words(const std::vector<std::string>& words);

  // Index of the word, or kUnkIndex when absent.
  int lookup(const std::string& word) const;

  bool contains(const std::string& word) const;

  // Word at the index; throws std::out_of_range for indices outside [0, size).
  const std::string& word(int index) const;

  int size() const { return static_cast<int>(index_to_word_.size()); }

  // All entries in index order, reserved block first.
  const std::vector<std::string>& words() const { return index_to_word_; }

 private:
  std::vector<std::string> index_to_word_;
  std::unordered_map<std::string, int> word_to_index_;
};

// Reads the 4-column delimiter-separated corpus. An optional header row
// (the canonical column names) is skipped. Rows with a wrong field count
// throw ParseError with the row number; rows with an empty field are dropped
// with a note in `diagnostics`. Fields may contain \n, \t and \\ escapes.
std::vector<EmailRecord> load_email_corpus(const std::filesystem::path& path,
                                           char delimiter = '\t',
                                           std::vector<std::string>* diagnostics = nullptr);

// Maximal runs of text between blank lines. Joining the result with single
// blank lines reproduces the input up to boundary whitespace. Whitespace-only
// input gives an empty list.
std::vector<std::string> split_contextual_paragraphs(const std::string& text);

// Lowercases ASCII, detaches punctuation into standalone tokens, splits on
// whitespace. Deterministic; idempotent on its own space-joined output.
std::vector<std::string> tokenize(const std::string& text);

// Tokenized paragraphs of one email, tagged with email id and position.
std::vector<Paragraph> tokenize_paragraphs(const std::string& email_text, int email_id);

// Vocabulary over every distinct token in the sequences, first-appearance
// order after the reserved block.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sequences);

// Maps tokens to indices (UNK for out-of-vocabulary) and appends EOS to both
// sides. Empty token sequences are a contract violation.
SentencePair encode_pair(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                         const std::vector<std::string>& src_tokens,
                         const std::vector<std::string>& tgt_tokens);

// ---- Prepared-dataset files ----

// One JSON object per line: {"source":[ints],"target":[ints]}.
void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<SentencePair>& pairs);
std::vector<SentencePair> read_pairs_jsonl(const std::filesystem::path& path);

// Sidecar vocabulary file: non-reserved words, one per line, line i holding
// index i+3.
void write_vocab_file(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocab_file(const std::filesystem::path& path);

}  // namespace nmt
