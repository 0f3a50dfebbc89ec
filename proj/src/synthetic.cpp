#include "bslrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bslrec/random.hpp"

namespace bslrec::synthetic {

namespace {

// Moves round(test_fraction * n) of each user's items to test, keeping at
// least one in train.
Dataset split(std::vector<std::vector<ItemId>> all, double test_fraction, std::size_t n_items,
              Rng& rng) {
  std::vector<std::vector<ItemId>> train(all.size()), test(all.size());
  for (std::size_t u = 0; u < all.size(); ++u) {
    auto& items = all[u];
    std::shuffle(items.begin(), items.end(), rng);
    std::size_t n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(items.size())));
    if (n_test >= items.size()) n_test = items.empty() ? 0 : items.size() - 1;
    test[u].assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_test));
    train[u].assign(items.begin() + static_cast<std::ptrdiff_t>(n_test), items.end());
  }
  return make_dataset(std::move(train), std::move(test), all.size(), n_items);
}

}  // namespace

bool same_cluster(const PlantedSpec& spec, UserId u, ItemId i) {
  return (u % spec.user_clusters) % spec.item_clusters == i % spec.item_clusters;
}

Dataset planted(const PlantedSpec& spec) {
  require(spec.user_clusters >= 1 && spec.item_clusters >= 1, "planted: cluster counts must be >= 1");
  Rng rng = make_rng(spec.seed, {0x9A7ULL});
  std::bernoulli_distribution in(spec.p_in), out(spec.p_out);
  std::vector<std::vector<ItemId>> all(spec.n_users);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    for (std::size_t i = 0; i < spec.n_items; ++i) {
      bool hit = same_cluster(spec, static_cast<UserId>(u), static_cast<ItemId>(i)) ? in(rng) : out(rng);
      if (hit) all[u].push_back(static_cast<ItemId>(i));
    }
    if (all[u].empty()) {
      // Every user needs a training interaction.
      std::uniform_int_distribution<std::size_t> pick(0, spec.n_items - 1);
      all[u].push_back(static_cast<ItemId>(pick(rng)));
    }
  }
  return split(std::move(all), spec.test_fraction, spec.n_items, rng);
}

Dataset zipf(const ZipfSpec& spec) {
  require(spec.per_user <= spec.n_items, "zipf: per_user exceeds n_items");
  Rng rng = make_rng(spec.seed, {0x21FULL});
  // Popularity rank is a random permutation so rank and cluster are unrelated.
  std::vector<std::size_t> rank(spec.n_items);
  std::iota(rank.begin(), rank.end(), std::size_t{1});
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<std::vector<ItemId>> all(spec.n_users);
  std::vector<double> w(spec.n_items);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    for (std::size_t i = 0; i < spec.n_items; ++i) {
      double affinity = (u % spec.clusters) == (i % spec.clusters) ? 1.0 : spec.out_affinity;
      w[i] = affinity * std::pow(static_cast<double>(rank[i]), -spec.zipf_exponent);
    }
    // Sequential weighted sampling without replacement.
    std::vector<double> left = w;
    for (std::size_t k = 0; k < spec.per_user; ++k) {
      std::discrete_distribution<std::size_t> pick(left.begin(), left.end());
      std::size_t i = pick(rng);
      all[u].push_back(static_cast<ItemId>(i));
      left[i] = 0.0;
    }
  }
  return split(std::move(all), spec.test_fraction, spec.n_items, rng);
}

}  // namespace bslrec::synthetic
