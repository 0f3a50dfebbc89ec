#pragma once

#include <cstdint>

#include "bslrec/dataset.hpp"

namespace bslrec::synthetic {

// Block-structured interactions: user cluster c interacts with item cluster c
// at rate p_in and with every other cluster at rate p_out. Cluster membership
// is id modulo the cluster count.
struct PlantedSpec {
  std::size_t n_users = 200;
  std::size_t n_items = 100;
  std::size_t user_clusters = 2;
  std::size_t item_clusters = 2;
  double p_in = 0.3;
  double p_out = 0.01;
  double test_fraction = 0.2;
  std::uint64_t seed = 7;
};

// Long-tailed popularity on top of a cluster structure: each user draws
// `per_user` distinct items with probability proportional to
// rank^-zipf_exponent, scaled by out_affinity outside the user's cluster.
struct ZipfSpec {
  std::size_t n_users = 300;
  std::size_t n_items = 200;
  std::size_t clusters = 4;
  std::size_t per_user = 25;
  double zipf_exponent = 1.0;
  double out_affinity = 0.1;
  double test_fraction = 0.2;
  std::uint64_t seed = 11;
};

Dataset planted(const PlantedSpec& spec);
Dataset zipf(const ZipfSpec& spec);

// Items of the same cluster as the user, the Bayes-optimal candidates of the
// planted generator.
bool same_cluster(const PlantedSpec& spec, UserId u, ItemId i);

}  // namespace bslrec::synthetic
