#include "bslrec/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bslrec {

SamplerState::SamplerState(Rng rng, NegSampler mode, double r_noise,
                           std::optional<std::vector<double>> popularity_weights)
    : rng_(std::move(rng)), mode_(mode), r_noise_(r_noise), weights_(std::move(popularity_weights)) {
  require(r_noise >= 0 && std::isfinite(r_noise), "sampler: r_noise must be >= 0");
  require(weights_.has_value() == (mode == NegSampler::Popularity),
          "sampler: popularity weights required exactly in popularity mode");
  if (weights_) {
    for (double w : *weights_) require(w >= 0 && std::isfinite(w), "sampler: negative weight");
    total_weight_ = std::accumulate(weights_->begin(), weights_->end(), 0.0);
    require(total_weight_ > 0, "sampler: popularity weights are all zero");
    item_dist_.emplace(weights_->begin(), weights_->end());
  }
}

SamplerState SamplerState::uniform(std::uint64_t seed, double r_noise) {
  return SamplerState(make_rng(seed), NegSampler::Uniform, r_noise);
}

SamplerState SamplerState::popularity(std::uint64_t seed, const Dataset& ds, double exponent,
                                      double r_noise) {
  std::vector<double> w(ds.n_items);
  for (std::size_t i = 0; i < ds.n_items; ++i)
    w[i] = std::pow(static_cast<double>(ds.item_popularity[i]), exponent);
  return SamplerState(make_rng(seed), NegSampler::Popularity, r_noise, std::move(w));
}

namespace {

struct MixtureMass {
  double pos = 0.0;  // base mass on S+ (unweighted by r_noise)
  double neg = 0.0;  // base mass on S-
};

MixtureMass mixture_mass(const Dataset& ds, UserId user, const std::optional<std::vector<double>>& w,
                         double total) {
  const auto& pos = ds.train_pos[user];
  MixtureMass m;
  if (!w) {
    m.pos = static_cast<double>(pos.size());
    m.neg = static_cast<double>(ds.n_items - pos.size());
  } else {
    for (ItemId i : pos) m.pos += (*w)[i];
    m.neg = std::max(total - m.pos, 0.0);
  }
  return m;
}

}  // namespace

double SamplerState::positive_draw_probability(const Dataset& ds, UserId user) const {
  auto m = mixture_mass(ds, user, weights_, total_weight_);
  double num = r_noise_ * m.pos;
  double den = num + m.neg;
  return den > 0 ? num / den : 0.0;
}

std::vector<ItemId> sample_negatives(SamplerState& st, const Dataset& ds, UserId user,
                                     std::size_t n) {
  require(n >= 1, "sample_negatives: n must be >= 1");
  require(user < ds.n_users, "sample_negatives: user out of range");
  const auto& pos = ds.train_pos[user];
  auto mass = mixture_mass(ds, user, st.weights_, st.total_weight_);
  const double pos_mass = st.r_noise_ * mass.pos;
  if (mass.neg <= 0 && pos_mass <= 0)
    fail(ErrorCode::InvalidArgument,
         "sample_negatives: user " + std::to_string(user) + " has no negatives to draw");
  const double p_pos = pos_mass / (pos_mass + mass.neg);

  std::bernoulli_distribution pick_pos(p_pos);
  std::uniform_int_distribution<std::size_t> any_item(0, ds.n_items - 1);
  std::optional<std::discrete_distribution<std::size_t>> pos_dist;
  if (st.weights_ && p_pos > 0) {
    std::vector<double> pw;
    pw.reserve(pos.size());
    for (ItemId i : pos) pw.push_back((*st.weights_)[i]);
    pos_dist.emplace(pw.begin(), pw.end());
  }
  // Rejection from the base sampler is cheap unless S- is nearly empty.
  std::optional<std::discrete_distribution<std::size_t>> neg_fallback;
  const bool sparse_neg = mass.neg < 0.05 * (mass.neg + mass.pos);
  if (sparse_neg && mass.neg > 0) {
    std::vector<double> nw(ds.n_items);
    for (std::size_t i = 0; i < ds.n_items; ++i)
      nw[i] = ds.is_train_positive(user, static_cast<ItemId>(i))
                  ? 0.0
                  : (st.weights_ ? (*st.weights_)[i] : 1.0);
    neg_fallback.emplace(nw.begin(), nw.end());
  }

  std::vector<ItemId> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (p_pos > 0 && pick_pos(st.rng_)) {
      if (pos_dist) {
        out.push_back(pos[(*pos_dist)(st.rng_)]);
      } else {
        std::uniform_int_distribution<std::size_t> idx(0, pos.size() - 1);
        out.push_back(pos[idx(st.rng_)]);
      }
      continue;
    }
    if (neg_fallback) {
      out.push_back(static_cast<ItemId>((*neg_fallback)(st.rng_)));
      continue;
    }
    while (true) {
      auto i = static_cast<ItemId>(st.item_dist_ ? (*st.item_dist_)(st.rng_) : any_item(st.rng_));
      if (!std::binary_search(pos.begin(), pos.end(), i)) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::size_t contamination_count(std::size_t n_pos, double ratio) {
  // The small slack keeps products like 0.2 * 15 from rounding up to 4.
  return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n_pos) - 1e-9));
}

ContaminationResult contaminate_positives(const Dataset& ds, double ratio, std::uint64_t seed) {
  require(ratio >= 0 && ratio < 1, "contaminate_positives: ratio must lie in [0, 1)");
  ContaminationResult res;
  res.dataset = ds;
  if (ratio == 0) return res;
  Rng rng = make_rng(seed, {0xC0117A111ULL});
  std::vector<ItemId> candidates;
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    std::size_t want = contamination_count(ds.train_pos[u].size(), ratio);
    if (want == 0) continue;
    candidates.clear();
    for (std::size_t i = 0; i < ds.n_items; ++i) {
      auto item = static_cast<ItemId>(i);
      if (!ds.is_train_positive(static_cast<UserId>(u), item) &&
          !ds.is_test_positive(static_cast<UserId>(u), item))
        candidates.push_back(item);
    }
    if (candidates.size() < want) ++res.short_users;
    std::size_t take = std::min(want, candidates.size());
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    for (std::size_t k = 0; k < take; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
      std::swap(candidates[k], candidates[pick(rng)]);
    }
    auto& list = res.dataset.train_pos[u];
    list.insert(list.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(list.begin(), list.end());
    res.injected += take;
  }
  recompute_popularity(res.dataset);
  return res;
}

std::vector<std::uint8_t> in_batch_negatives(std::span<const UserId> batch_users,
                                             std::span<const ItemId> batch_items) {
  require(batch_users.size() == batch_items.size(),
          "in_batch_negatives: users and items differ in length");
  const std::size_t b = batch_users.size();
  require(b >= 2, "in_batch_negatives: batch must hold at least two examples");
  std::vector<std::uint8_t> mask(b * b, 1);
  for (std::size_t i = 0; i < b; ++i) mask[i * b + i] = 0;
  return mask;
}

}  // namespace bslrec
