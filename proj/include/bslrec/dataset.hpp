#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bslrec/types.hpp"

namespace bslrec {

// Implicit-feedback interactions split into train and test. Items a user has
// not interacted with in train form that user's negative pool; it is never
// materialized.
struct Dataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::vector<ItemId>> train_pos;  // per user, strictly sorted
  std::vector<std::vector<ItemId>> test_pos;   // per user, strictly sorted
  std::vector<std::size_t> item_popularity;    // train interaction counts

  std::size_t n_train_interactions() const;
  std::size_t n_test_interactions() const;

  bool is_train_positive(UserId u, ItemId i) const;
  bool is_test_positive(UserId u, ItemId i) const;

  bool operator==(const Dataset&) const = default;
};

// Checks every structural invariant, throwing Error(InvalidArgument) on the
// first violation.
void validate(const Dataset& ds);

// Builds a dataset from raw per-user lists: sorts, de-duplicates, drops test
// items already present in train, sizes the tables and recounts popularity.
Dataset make_dataset(std::vector<std::vector<ItemId>> train,
                     std::vector<std::vector<ItemId>> test,
                     std::size_t min_users = 0, std::size_t min_items = 0);

void recompute_popularity(Dataset& ds);

struct IdMaps {
  std::vector<std::int64_t> user_raw;  // dense id -> raw id
  std::vector<std::int64_t> item_raw;
};

struct LoadOptions {
  // Remap raw (possibly sparse or negative) ids to dense 0-based ids, ordered
  // by raw value.
  bool remap = false;
};

// Reads adjacency-list files: each nonempty line is `user item item ...`.
Dataset load_dataset(const std::filesystem::path& train_path,
                     const std::filesystem::path& test_path,
                     const LoadOptions& opts = {}, IdMaps* maps = nullptr);

// Writes the same format back, one line per user (a bare id for users with
// no items) so n_users survives a round trip.
void save_split(const std::vector<std::vector<ItemId>>& lists,
                const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& train_path,
                  const std::filesystem::path& test_path);

// Buckets items by ascending popularity (ties by id) into n_groups contiguous
// groups whose sizes differ by at most one. Group n_groups-1 is the most
// popular.
std::vector<std::size_t> popularity_groups(const Dataset& ds, std::size_t n_groups);

}  // namespace bslrec
