#include "bslrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace bslrec {

namespace {

bool contains(const std::vector<ItemId>& sorted, ItemId i) {
  return std::binary_search(sorted.begin(), sorted.end(), i);
}

void sort_unique(std::vector<ItemId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

using RawLists = std::map<std::int64_t, std::vector<std::int64_t>>;

RawLists read_adjacency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open dataset file: " + path.string());
  RawLists lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    std::string tok;
    bool first = true;
    std::int64_t user = 0;
    while (tokens >> tok) {
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) +
                                   ": not an integer: '" + tok + "'");
      }
      if (first) {
        user = value;
        lists[user];
        first = false;
      } else {
        lists[user].push_back(value);
      }
    }
  }
  return lists;
}

std::vector<std::vector<ItemId>> to_dense(const RawLists& raw,
                                          const std::map<std::int64_t, UserId>* users,
                                          const std::map<std::int64_t, ItemId>* items,
                                          const std::string& what) {
  std::vector<std::vector<ItemId>> out;
  for (const auto& [u_raw, its] : raw) {
    std::int64_t u = users ? users->at(u_raw) : u_raw;
    if (u < 0 || u > std::int64_t{UINT32_MAX} - 1)
      fail(ErrorCode::Parse, what + ": user id out of range: " + std::to_string(u_raw));
    if (static_cast<std::size_t>(u) >= out.size()) out.resize(static_cast<std::size_t>(u) + 1);
    for (std::int64_t i_raw : its) {
      std::int64_t i = items ? items->at(i_raw) : i_raw;
      if (i < 0 || i > std::int64_t{UINT32_MAX} - 1)
        fail(ErrorCode::Parse, what + ": item id out of range: " + std::to_string(i_raw));
      out[static_cast<std::size_t>(u)].push_back(static_cast<ItemId>(i));
    }
  }
  return out;
}

}  // namespace

std::size_t Dataset::n_train_interactions() const {
  std::size_t n = 0;
  for (const auto& v : train_pos) n += v.size();
  return n;
}

std::size_t Dataset::n_test_interactions() const {
  std::size_t n = 0;
  for (const auto& v : test_pos) n += v.size();
  return n;
}

bool Dataset::is_train_positive(UserId u, ItemId i) const {
  return contains(train_pos[u], i);
}

bool Dataset::is_test_positive(UserId u, ItemId i) const {
  return contains(test_pos[u], i);
}

void validate(const Dataset& ds) {
  require(ds.train_pos.size() == ds.n_users && ds.test_pos.size() == ds.n_users,
          "dataset: per-user lists must have n_users entries");
  require(ds.item_popularity.size() == ds.n_items,
          "dataset: item_popularity must have n_items entries");
  std::vector<std::size_t> counts(ds.n_items, 0);
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    for (const auto* list : {&ds.train_pos[u], &ds.test_pos[u]}) {
      for (std::size_t k = 0; k < list->size(); ++k) {
        require((*list)[k] < ds.n_items, "dataset: item id out of range");
        require(k == 0 || (*list)[k - 1] < (*list)[k],
                "dataset: per-user lists must be strictly sorted");
      }
    }
    for (ItemId i : ds.train_pos[u]) {
      ++counts[i];
      require(!contains(ds.test_pos[u], i), "dataset: train and test overlap");
    }
  }
  require(counts == ds.item_popularity, "dataset: item_popularity is stale");
}

void recompute_popularity(Dataset& ds) {
  ds.item_popularity.assign(ds.n_items, 0);
  for (const auto& list : ds.train_pos)
    for (ItemId i : list) ++ds.item_popularity[i];
}

Dataset make_dataset(std::vector<std::vector<ItemId>> train,
                     std::vector<std::vector<ItemId>> test, std::size_t min_users,
                     std::size_t min_items) {
  Dataset ds;
  ds.n_users = std::max({train.size(), test.size(), min_users});
  train.resize(ds.n_users);
  test.resize(ds.n_users);
  std::size_t n_items = min_items;
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    sort_unique(train[u]);
    sort_unique(test[u]);
    std::erase_if(test[u], [&](ItemId i) { return contains(train[u], i); });
    for (const auto* list : {&train[u], &test[u]})
      if (!list->empty()) n_items = std::max<std::size_t>(n_items, list->back() + std::size_t{1});
  }
  ds.n_items = n_items;
  ds.train_pos = std::move(train);
  ds.test_pos = std::move(test);
  recompute_popularity(ds);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& train_path,
                     const std::filesystem::path& test_path, const LoadOptions& opts,
                     IdMaps* maps) {
  RawLists train_raw = read_adjacency(train_path);
  RawLists test_raw = read_adjacency(test_path);

  if (!opts.remap) {
    return make_dataset(to_dense(train_raw, nullptr, nullptr, train_path.string()),
                        to_dense(test_raw, nullptr, nullptr, test_path.string()));
  }

  std::map<std::int64_t, UserId> users;
  std::map<std::int64_t, ItemId> items;
  for (const auto* raw : {&train_raw, &test_raw}) {
    for (const auto& [u, its] : *raw) {
      users.emplace(u, 0);
      for (auto i : its) items.emplace(i, 0);
    }
  }
  IdMaps local;
  for (auto& [raw, dense] : users) {
    dense = static_cast<UserId>(local.user_raw.size());
    local.user_raw.push_back(raw);
  }
  for (auto& [raw, dense] : items) {
    dense = static_cast<ItemId>(local.item_raw.size());
    local.item_raw.push_back(raw);
  }
  Dataset ds = make_dataset(to_dense(train_raw, &users, &items, train_path.string()),
                            to_dense(test_raw, &users, &items, test_path.string()),
                            users.size(), items.size());
  if (maps) *maps = std::move(local);
  return ds;
}

void save_split(const std::vector<std::vector<ItemId>>& lists,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write dataset file: " + path.string());
  for (std::size_t u = 0; u < lists.size(); ++u) {
    out << u;
    for (ItemId i : lists[u]) out << ' ' << i;
    out << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

void save_dataset(const Dataset& ds, const std::filesystem::path& train_path,
                  const std::filesystem::path& test_path) {
  save_split(ds.train_pos, train_path);
  save_split(ds.test_pos, test_path);
}

std::vector<std::size_t> popularity_groups(const Dataset& ds, std::size_t n_groups) {
  require(n_groups >= 1, "popularity_groups: n_groups must be >= 1");
  require(n_groups <= ds.n_items, "popularity_groups: more groups than items");
  std::vector<ItemId> order(ds.n_items);
  std::iota(order.begin(), order.end(), ItemId{0});
  std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
    return ds.item_popularity[a] < ds.item_popularity[b];
  });
  std::vector<std::size_t> group(ds.n_items);
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    group[order[pos]] = pos * n_groups / ds.n_items;
  return group;
}

}  // namespace bslrec
