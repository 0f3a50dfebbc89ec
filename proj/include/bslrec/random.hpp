#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace bslrec {

using Rng = std::mt19937_64;

// Independent generator for a (seed, stream...) tuple. Streams let each
// epoch, worker or user draw from its own sequence so results do not depend
// on scheduling order.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {});

// 64-bit FNV-1a, used for dataset identity and checkpoint integrity.
std::uint64_t fnv1a(std::span<const std::byte> bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text);
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace bslrec
