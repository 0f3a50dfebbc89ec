#include "bslrec/random.hpp"

#include <fstream>
#include <vector>

#include "bslrec/types.hpp"

namespace bslrec {

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * stream.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h) {
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text) {
  return fnv1a(std::as_bytes(std::span(text.data(), text.size())));
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open file for hashing: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    auto n = static_cast<std::size_t>(in.gcount());
    h = fnv1a(std::as_bytes(std::span(buf.data(), n)), h);
  }
  return h;
}

}  // namespace bslrec
