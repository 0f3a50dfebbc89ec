#pragma once

#include <filesystem>

#include "bslrec/model.hpp"

namespace bslrec {

struct Checkpoint {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  EmbeddingTable emb;
  AdamState adam;

  bool operator==(const Checkpoint&) const = default;
};

// Binary little-endian container: magic, format version, header, both
// embedding matrices and the Adam state, then an FNV-1a checksum of
// everything before it. Round trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws Error(Corrupt) on a bad magic, version, size or checksum.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bslrec
