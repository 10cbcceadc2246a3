#pragma once

#include <filesystem>

#include "nmt/corpus.hpp"
#include "nmt/model.hpp"

namespace nmt {

// Model weights plus the vocabularies they were trained against.
struct Checkpoint {
  ModelParams params;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
};

// Binary container: magic + version, hyperparameters, both vocabularies,
// then every parameter block (name, shape, row-major doubles). All integers
// little-endian, doubles as raw IEEE-754 bits, so save -> load -> save is
// byte-identical.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws CheckpointError on bad magic/version, truncation, or shape
// disagreement with the declared hyperparameters.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nmt
