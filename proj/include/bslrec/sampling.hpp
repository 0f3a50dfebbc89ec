#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bslrec/config.hpp"
#include "bslrec/dataset.hpp"
#include "bslrec/random.hpp"

namespace bslrec {

// Negative sampler with an optional false-negative knob. r_noise is the
// relative probability of drawing one of the user's own positives compared
// to a true negative. Single-owner: give each worker its own instance.
class SamplerState {
 public:
  SamplerState(Rng rng, NegSampler mode, double r_noise,
               std::optional<std::vector<double>> popularity_weights = std::nullopt);

  // Uniform base sampler.
  static SamplerState uniform(std::uint64_t seed, double r_noise = 0.0);
  // Popularity-proportional base sampler, weight = count^exponent.
  static SamplerState popularity(std::uint64_t seed, const Dataset& ds, double exponent = 1.0,
                                 double r_noise = 0.0);

  NegSampler mode() const noexcept { return mode_; }
  double r_noise() const noexcept { return r_noise_; }
  const std::optional<std::vector<double>>& popularity_weights() const noexcept {
    return weights_;
  }
  Rng& rng() noexcept { return rng_; }

  // Probability that a single draw for `user` lands in the user's positives.
  double positive_draw_probability(const Dataset& ds, UserId user) const;

 private:
  friend std::vector<ItemId> sample_negatives(SamplerState&, const Dataset&, UserId,
                                              std::size_t);
  Rng rng_;
  NegSampler mode_;
  double r_noise_;
  std::optional<std::vector<double>> weights_;
  std::optional<std::discrete_distribution<std::size_t>> item_dist_;
  double total_weight_ = 0.0;
};

// Draws n items with replacement from the r_noise mixture over the user's
// positives and negatives.
std::vector<ItemId> sample_negatives(SamplerState& st, const Dataset& ds, UserId user,
                                     std::size_t n);

struct ContaminationResult {
  Dataset dataset;
  std::size_t injected = 0;
  std::size_t short_users = 0;  // users who had fewer candidates than requested
};

// Adds ceil(ratio * |train_pos[u]|) uniformly drawn non-interacted items to
// every user's training positives. Test items are never injected.
ContaminationResult contaminate_positives(const Dataset& ds, double ratio, std::uint64_t seed);

// Items per user that contaminate_positives will try to inject.
std::size_t contamination_count(std::size_t n_pos, double ratio);

// B x B mask (row-major, 1 = negative) marking every off-diagonal entry.
std::vector<std::uint8_t> in_batch_negatives(std::span<const UserId> batch_users,
                                             std::span<const ItemId> batch_items);

}  // namespace bslrec
