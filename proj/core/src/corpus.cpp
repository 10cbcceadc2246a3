#include "nmt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nmt/errors.hpp"
#include "json.hpp"

namespace nmt {
namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string unescape_field(const std::string& field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] == '\\' && i + 1 < field.size()) {
      switch (field[i + 1]) {
        case 'n': out.push_back('\n'); ++i; continue;
        case 't': out.push_back('\t'); ++i; continue;
        case '\\': out.push_back('\\'); ++i; continue;
        default: break;
      }
    }
    out.push_back(field[i]);
  }
  return out;
}

// Canonical column names of the corpus table, used for header detection.
const char* kHeaderNames[4] = {"eng human", "malay human", "malay google translate",
                               "eng google translate"};

std::string normalize_header_field(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = ' ';
  }
  // collapse runs of spaces and trim
  std::string out;
  for (char c : s) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

bool is_header_row(const std::vector<std::string>& fields) {
  if (fields.size() != 4) return false;
  for (int i = 0; i < 4; ++i) {
    if (normalize_header_field(fields[i]) != kHeaderNames[i]) return false;
  }
  return true;
}

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == delimiter) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

const char* to_string(Direction d) {
  return d == Direction::kMalayToEnglish ? "m2e" : "e2m";
}

const char* to_string(Regime r) {
  return r == Regime::kEmailLevel ? "email" : "paragraph";
}

Direction direction_from_string(const std::string& s) {
  if (s == "m2e") return Direction::kMalayToEnglish;
  if (s == "e2m") return Direction::kEnglishToMalay;
  throw std::invalid_argument("unknown direction '" + s + "' (expected m2e or e2m)");
}

Regime regime_from_string(const std::string& s) {
  if (s == "email") return Regime::kEmailLevel;
  if (s == "paragraph") return Regime::kParagraphLevel;
  throw std::invalid_argument("unknown regime '" + s + "' (expected email or paragraph)");
}

Vocabulary::Vocabulary() {
  index_to_word_ = {sos_word(), eos_word(), unk_word()};
  for (int i = 0; i < kReservedCount; ++i) word_to_index_[index_to_word_[i]] = i;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const std::string& w : words) {
    if (v.word_to_index_.count(w) != 0) {
      throw std::invalid_argument("duplicate vocabulary word '" + w + "'");
    }
    v.word_to_index_[w] = v.size();
    v.index_to_word_.push_back(w);
  }
  return v;
}

int Vocabulary::lookup(const std::string& word) const {
  auto it = word_to_index_.find(word);
  return it == word_to_index_.end() ? kUnkIndex : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
  return word_to_index_.count(word) != 0;
}

const std::string& Vocabulary::word(int index) const {
  if (index < 0 || index >= size()) {
    throw std::out_of_range("vocabulary index " + std::to_string(index) +
                            " outside [0, " + std::to_string(size()) + ")");
  }
  return index_to_word_[static_cast<std::size_t>(index)];
}

std::vector<EmailRecord> load_email_corpus(const std::filesystem::path& path, char delimiter,
                                           std::vector<std::string>* diagnostics) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());

  std::vector<EmailRecord> records;
  std::string line;
  long long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line, delimiter);
    if (row == 1 && is_header_row(fields)) continue;
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), row);
    }
    for (std::string& f : fields) f = unescape_field(f);
    if (std::any_of(fields.begin(), fields.end(), [](const std::string& f) { return is_blank(f); })) {
      if (diagnostics) {
        diagnostics->push_back("row " + std::to_string(row) + ": empty field, record dropped");
      }
      continue;
    }
    records.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return records;
}

std::vector<std::string> split_contextual_paragraphs(const std::string& text) {
  std::vector<std::string> paragraphs;
  std::vector<std::string> block;
  std::istringstream lines(text);
  std::string line;

  auto flush = [&] {
    if (block.empty()) return;
    std::string para = block[0];
    for (std::size_t i = 1; i < block.size(); ++i) {
      para += '\n';
      para += block[i];
    }
    paragraphs.push_back(std::move(para));
    block.clear();
  };

  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
    } else {
      block.push_back(line);
    }
  }
  flush();
  return paragraphs;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

std::vector<Paragraph> tokenize_paragraphs(const std::string& email_text, int email_id) {
  std::vector<Paragraph> out;
  int idx = 0;
  for (const std::string& text : split_contextual_paragraphs(email_text)) {
    std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) continue;  // punctuation-free whitespace blocks
    out.push_back({std::move(tokens), email_id, idx++});
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sequences) {
  std::vector<std::string> words;
  std::unordered_map<std::string, int> seen;
  for (const auto& seq : sequences) {
    for (const std::string& tok : seq) {
      if (seen.emplace(tok, 0).second) words.push_back(tok);
    }
  }
  return Vocabulary::from_words(words);
}

SentencePair encode_pair(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                         const std::vector<std::string>& src_tokens,
                         const std::vector<std::string>& tgt_tokens) {
  if (src_tokens.empty() || tgt_tokens.empty()) {
    throw std::invalid_argument("encode_pair requires non-empty token sequences");
  }
  SentencePair pair;
  pair.source.reserve(src_tokens.size() + 1);
  pair.target.reserve(tgt_tokens.size() + 1);
  for (const std::string& tok : src_tokens) pair.source.push_back(src_vocab.lookup(tok));
  for (const std::string& tok : tgt_tokens) pair.target.push_back(tgt_vocab.lookup(tok));
  pair.source.push_back(Vocabulary::kEosIndex);
  pair.target.push_back(Vocabulary::kEosIndex);
  return pair;
}

void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<SentencePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file " + path.string());
  for (const SentencePair& p : pairs) {
    nlohmann::json obj;
    obj["source"] = p.source;
    obj["target"] = p.target;
    out << obj.dump() << '\n';
  }
}

std::vector<SentencePair> read_pairs_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  std::vector<SentencePair> pairs;
  std::string line;
  long long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (is_blank(line)) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.contains("source") || !obj.contains("target")) {
      throw ParseError("malformed dataset line", row);
    }
    SentencePair p;
    p.source = obj["source"].get<std::vector<int>>();
    p.target = obj["target"].get<std::vector<int>>();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_vocab_file(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  const auto& words = vocab.words();
  for (std::size_t i = Vocabulary::kReservedCount; i < words.size(); ++i) {
    out << words[i] << '\n';
  }
}

Vocabulary read_vocab_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return Vocabulary::from_words(words);
}

}  // namespace nmt
