#include "nmt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "nmt/errors.hpp"

namespace nmt {
namespace {

constexpr char kMagic[8] = {'N', 'M', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("truncated checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw CheckpointError("truncated checkpoint");
  return s;
}

void write_vocab(std::ostream& out, const Vocabulary& vocab) {
  const auto& words = vocab.words();
  write_u32(out, static_cast<std::uint32_t>(words.size()));
  for (const std::string& w : words) write_string(out, w);
}

Vocabulary read_vocab(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  if (n < Vocabulary::kReservedCount) throw CheckpointError("vocabulary smaller than reserved block");
  std::vector<std::string> words;
  words.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) words.push_back(read_string(in));
  for (int i = 0; i < Vocabulary::kReservedCount; ++i) {
    const char* expected = i == 0   ? Vocabulary::sos_word()
                           : i == 1 ? Vocabulary::eos_word()
                                    : Vocabulary::unk_word();
    if (words[static_cast<std::size_t>(i)] != expected) {
      throw CheckpointError("reserved vocabulary entries out of order");
    }
  }
  return Vocabulary::from_words(
      std::vector<std::string>(words.begin() + Vocabulary::kReservedCount, words.end()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint file " + path.string());

  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  const ModelHyper& d = ckpt.params.dims;
  write_u32(out, static_cast<std::uint32_t>(d.hidden));
  write_u32(out, static_cast<std::uint32_t>(d.embed));
  write_u32(out, static_cast<std::uint32_t>(d.attn));
  write_u32(out, static_cast<std::uint32_t>(d.src_vocab));
  write_u32(out, static_cast<std::uint32_t>(d.tgt_vocab));

  write_vocab(out, ckpt.src_vocab);
  write_vocab(out, ckpt.tgt_vocab);

  const auto refs = ckpt.params.parameters();
  write_u32(out, static_cast<std::uint32_t>(refs.size()));
  for (const ConstParamRef& ref : refs) {
    write_string(out, ref.name);
    write_u32(out, static_cast<std::uint32_t>(ref.rows));
    write_u32(out, static_cast<std::uint32_t>(ref.cols));
    // row-major on disk; storage is column-major
    for (Eigen::Index r = 0; r < ref.rows; ++r) {
      for (Eigen::Index c = 0; c < ref.cols; ++c) {
        write_f64(out, ref.data[c * ref.rows + r]);
      }
    }
  }
  if (!out) throw IoError("failed writing checkpoint file " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint file " + path.string());

  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }

  ModelHyper hyper;
  hyper.hidden = static_cast<int>(read_u32(in));
  hyper.embed = static_cast<int>(read_u32(in));
  hyper.attn = static_cast<int>(read_u32(in));
  hyper.src_vocab = static_cast<int>(read_u32(in));
  hyper.tgt_vocab = static_cast<int>(read_u32(in));

  Checkpoint ckpt;
  ckpt.src_vocab = read_vocab(in);
  ckpt.tgt_vocab = read_vocab(in);
  if (ckpt.src_vocab.size() != hyper.src_vocab || ckpt.tgt_vocab.size() != hyper.tgt_vocab) {
    throw CheckpointError("vocabulary sizes disagree with header");
  }

  ckpt.params = ModelParams(hyper);
  auto refs = ckpt.params.parameters();
  const std::uint32_t count = read_u32(in);
  if (count != refs.size()) {
    throw CheckpointError("unexpected parameter block count " + std::to_string(count));
  }
  for (ParamRef& ref : refs) {
    const std::string name = read_string(in);
    const auto rows = static_cast<Eigen::Index>(read_u32(in));
    const auto cols = static_cast<Eigen::Index>(read_u32(in));
    if (name != ref.name || rows != ref.rows || cols != ref.cols) {
      throw CheckpointError("parameter block '" + name + "' does not match expected '" +
                            ref.name + "' " + std::to_string(ref.rows) + "x" +
                            std::to_string(ref.cols));
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        ref.data[c * rows + r] = read_f64(in);
      }
    }
  }
  // Anything left over means the file was not produced by this writer.
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError("trailing bytes after parameter blocks");
  }
  return ckpt;
}

}  // namespace nmt
