#include "bslrec/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "bslrec/random.hpp"
#include "bslrec/sampling.hpp"

namespace bslrec {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Row index lookup for the sparse gradient of one batch.
template <class Id>
class RowIndex {
 public:
  std::size_t get(Id id) {
    auto [it, inserted] = index_.try_emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
  }
  const std::vector<Id>& ids() const { return ids_; }

 private:
  std::unordered_map<Id, std::size_t> index_;
  std::vector<Id> ids_;
};

void add_rows(Matrix& dst, std::size_t dst_row, std::span<const double> src) {
  auto row = dst.row(dst_row);
  for (std::size_t k = 0; k < src.size(); ++k) row[k] += src[k];
}

}  // namespace

AdamState AdamState::for_table(const EmbeddingTable& emb) {
  AdamState a;
  a.user_m = Matrix(emb.user_vecs.rows(), emb.dim);
  a.user_v = Matrix(emb.user_vecs.rows(), emb.dim);
  a.item_m = Matrix(emb.item_vecs.rows(), emb.dim);
  a.item_v = Matrix(emb.item_vecs.rows(), emb.dim);
  return a;
}

EmbeddingTable init_embeddings(std::size_t n_users, std::size_t n_items, std::size_t dim,
                               std::uint64_t seed) {
  require(dim >= 1, "init_embeddings: dim must be >= 1");
  EmbeddingTable emb;
  emb.dim = dim;
  emb.user_vecs = Matrix(n_users, dim);
  emb.item_vecs = Matrix(n_items, dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(dim + dim));
  Rng rng = make_rng(seed, {0xE3B0ULL});
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : emb.user_vecs.data()) x = dist(rng);
  for (double& x : emb.item_vecs.data()) x = dist(rng);
  return emb;
}

CosineScores cosine_score(const EmbeddingTable& emb, UserId user, std::span<const ItemId> items) {
  require(user < emb.n_users(), "cosine_score: user out of range");
  CosineScores c;
  const std::size_t d = emb.dim;
  auto u = emb.user_vecs.row(user);
  c.user_norm = std::max(norm(u), kNormEpsilon);
  c.user_hat.resize(d);
  for (std::size_t k = 0; k < d; ++k) c.user_hat[k] = u[k] / c.user_norm;

  c.items.assign(items.begin(), items.end());
  c.item_hat = Matrix(items.size(), d);
  c.item_norm.resize(items.size());
  c.scores.resize(items.size());
  for (std::size_t r = 0; r < items.size(); ++r) {
    require(items[r] < emb.n_items(), "cosine_score: item out of range");
    auto v = emb.item_vecs.row(items[r]);
    double n = std::max(norm(v), kNormEpsilon);
    c.item_norm[r] = n;
    auto hat = c.item_hat.row(r);
    for (std::size_t k = 0; k < d; ++k) hat[k] = v[k] / n;
    c.scores[r] = dot(c.user_hat, hat);
  }
  return c;
}

void cosine_backward(const CosineScores& ctx, std::span<const double> grad_scores,
                     std::span<double> grad_user, Matrix& grad_items_rows) {
  const std::size_t d = ctx.user_hat.size();
  for (std::size_t r = 0; r < ctx.scores.size(); ++r) {
    const double g = grad_scores[r];
    if (g == 0.0) continue;
    const double s = ctx.scores[r];
    auto ihat = ctx.item_hat.row(r);
    auto gi = grad_items_rows.row(r);
    const double gu_scale = g / ctx.user_norm;
    const double gi_scale = g / ctx.item_norm[r];
    for (std::size_t k = 0; k < d; ++k) {
      grad_user[k] += gu_scale * (ihat[k] - s * ctx.user_hat[k]);
      gi[k] += gi_scale * (ctx.user_hat[k] - s * ihat[k]);
    }
  }
}

std::vector<double> score_all_items(const EmbeddingTable& emb, UserId user, ScoreMode mode) {
  require(user < emb.n_users(), "score_all_items: user out of range");
  auto u = emb.user_vecs.row(user);
  std::vector<double> out(emb.n_items());
  if (mode == ScoreMode::InnerProduct) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(u, emb.item_vecs.row(i));
    return out;
  }
  const double un = std::max(norm(u), kNormEpsilon);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto v = emb.item_vecs.row(i);
    // Same operation order as cosine_score so both agree bit for bit.
    const double vn = std::max(norm(v), kNormEpsilon);
    double s = 0.0;
    for (std::size_t k = 0; k < emb.dim; ++k) s += (u[k] / un) * (v[k] / vn);
    out[i] = s;
  }
  return out;
}

BatchGradient batch_gradient(const EmbeddingTable& emb, const Batch& batch, const LossSpec& spec) {
  const std::size_t n = batch.users.size();
  require(n > 0 && batch.items.size() == n, "batch_gradient: malformed batch");
  const bool in_batch = batch.negatives.empty();
  if (in_batch) {
    in_batch_negatives(batch.users, batch.items);  // validates shape
  } else {
    require(batch.negatives.size() == n, "batch_gradient: one negative list per example");
  }

  std::vector<CosineScores> ctx;
  ctx.reserve(n);
  std::vector<ItemId> list;
  for (std::size_t b = 0; b < n; ++b) {
    list.clear();
    list.push_back(batch.items[b]);
    if (in_batch) {
      for (std::size_t o = 0; o < n; ++o)
        if (o != b) list.push_back(batch.items[o]);
    } else {
      list.insert(list.end(), batch.negatives[b].begin(), batch.negatives[b].end());
    }
    ctx.push_back(cosine_score(emb, batch.users[b], list));
  }

  const std::size_t n_neg = ctx.front().scores.size() - 1;
  ScoreBatch sb;
  sb.pos.resize(n);
  sb.neg = Matrix(n, n_neg);
  for (std::size_t b = 0; b < n; ++b) {
    require(ctx[b].scores.size() == n_neg + 1, "batch_gradient: ragged negative lists");
    sb.pos[b] = ctx[b].scores[0];
    std::copy(ctx[b].scores.begin() + 1, ctx[b].scores.end(), sb.neg.row(b).begin());
  }

  std::vector<std::size_t> groups;
  if (spec.kind == LossKind::Bilateral && spec.bsl_form == BslForm::Canonical &&
      spec.bsl_grouping == BslGrouping::PerUser) {
    RowIndex<UserId> gid;
    groups.resize(n);
    for (std::size_t b = 0; b < n; ++b) groups[b] = gid.get(batch.users[b]);
  }
  LossResult lr = compute_loss(sb, spec, groups);

  BatchGradient g;
  g.loss = lr.value;
  RowIndex<UserId> urows;
  RowIndex<ItemId> irows;
  for (std::size_t b = 0; b < n; ++b) {
    urows.get(batch.users[b]);
    for (ItemId i : ctx[b].items) irows.get(i);
  }
  const std::size_t d = emb.dim;
  g.user_grad = Matrix(urows.ids().size(), d);
  g.item_grad = Matrix(irows.ids().size(), d);

  std::vector<double> grad_scores(n_neg + 1);
  std::vector<double> gu(d);
  for (std::size_t b = 0; b < n; ++b) {
    grad_scores[0] = lr.grad_pos[b];
    auto gn = lr.grad_neg.row(b);
    std::copy(gn.begin(), gn.end(), grad_scores.begin() + 1);
    std::fill(gu.begin(), gu.end(), 0.0);
    Matrix gi(ctx[b].items.size(), d);
    cosine_backward(ctx[b], grad_scores, gu, gi);
    add_rows(g.user_grad, urows.get(batch.users[b]), gu);
    for (std::size_t r = 0; r < ctx[b].items.size(); ++r)
      add_rows(g.item_grad, irows.get(ctx[b].items[r]), gi.row(r));
  }
  g.user_rows = urows.ids();
  g.item_rows = irows.ids();
  return g;
}

void add_l2(const EmbeddingTable& emb, BatchGradient& g, double l2) {
  if (l2 == 0.0) return;
  for (std::size_t r = 0; r < g.user_rows.size(); ++r) {
    auto src = emb.user_vecs.row(g.user_rows[r]);
    auto dst = g.user_grad.row(r);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += l2 * src[k];
  }
  for (std::size_t r = 0; r < g.item_rows.size(); ++r) {
    auto src = emb.item_vecs.row(g.item_rows[r]);
    auto dst = g.item_grad.row(r);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += l2 * src[k];
  }
}

void adam_update(EmbeddingTable& emb, AdamState& adam, const BatchGradient& g, double lr) {
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  auto apply = [&](Matrix& param, Matrix& m, Matrix& v, std::size_t row, std::span<const double> grad) {
    auto p = param.row(row);
    auto mr = m.row(row);
    auto vr = v.row(row);
    for (std::size_t k = 0; k < p.size(); ++k) {
      mr[k] = adam.beta1 * mr[k] + (1.0 - adam.beta1) * grad[k];
      vr[k] = adam.beta2 * vr[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
      const double mhat = mr[k] / c1;
      const double vhat = vr[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + adam.eps);
    }
  };
  for (std::size_t r = 0; r < g.user_rows.size(); ++r)
    apply(emb.user_vecs, adam.user_m, adam.user_v, g.user_rows[r], g.user_grad.row(r));
  for (std::size_t r = 0; r < g.item_rows.size(); ++r)
    apply(emb.item_vecs, adam.item_m, adam.item_v, g.item_rows[r], g.item_grad.row(r));
}

namespace {

// Generates one epoch's minibatches lazily so negatives never exist for more
// than a batch at a time.
class EpochPlan {
 public:
  EpochPlan(const Dataset& ds, const TrainConfig& cfg, std::size_t epoch)
      : ds_(ds), cfg_(cfg), sampler_(make_sampler(ds, cfg, epoch)) {
    for (std::size_t u = 0; u < ds.n_users; ++u)
      for (ItemId i : ds.train_pos[u]) pairs_.emplace_back(static_cast<UserId>(u), i);
    require(!pairs_.empty(), "train: dataset has no training interactions");
    Rng shuffle_rng = make_rng(cfg.rng_seed, {epoch, 0});
    std::shuffle(pairs_.begin(), pairs_.end(), shuffle_rng);
  }

  bool next(Batch& out) {
    if (cursor_ >= pairs_.size()) return false;
    std::size_t end = std::min(pairs_.size(), cursor_ + cfg_.batch_size);
    // A trailing singleton cannot form an in-batch negative; fold it into the
    // previous batch by extending that batch instead.
    if (cfg_.sampling_mode == SamplingMode::InBatch && pairs_.size() - end == 1) ++end;
    out.users.clear();
    out.items.clear();
    out.negatives.clear();
    for (std::size_t k = cursor_; k < end; ++k) {
      out.users.push_back(pairs_[k].first);
      out.items.push_back(pairs_[k].second);
      if (cfg_.sampling_mode == SamplingMode::NegativeSampling)
        out.negatives.push_back(sample_negatives(sampler_, ds_, pairs_[k].first, cfg_.n_negatives));
    }
    cursor_ = end;
    return true;
  }

 private:
  static SamplerState make_sampler(const Dataset& ds, const TrainConfig& cfg, std::size_t epoch) {
    std::uint64_t seed = make_rng(cfg.rng_seed, {epoch, 1})();
    if (cfg.neg_sampler == NegSampler::Popularity)
      return SamplerState::popularity(seed, ds, cfg.popularity_exponent, cfg.r_noise);
    return SamplerState::uniform(seed, cfg.r_noise);
  }

  const Dataset& ds_;
  const TrainConfig& cfg_;
  SamplerState sampler_;
  std::vector<std::pair<UserId, ItemId>> pairs_;
  std::size_t cursor_ = 0;
};

}  // namespace

std::vector<Batch> epoch_batches(const Dataset& ds, const TrainConfig& cfg, std::size_t epoch) {
  EpochPlan plan(ds, cfg, epoch);
  std::vector<Batch> out;
  Batch b;
  while (plan.next(b)) out.push_back(b);
  return out;
}

TrainState init_train_state(const Dataset& ds, const TrainConfig& cfg) {
  TrainState st;
  st.emb = init_embeddings(ds.n_users, ds.n_items, cfg.embedding_dim, cfg.rng_seed);
  st.adam = AdamState::for_table(st.emb);
  return st;
}

TrainLog train(const Dataset& ds, const TrainConfig& cfg, const LossSpec& spec, TrainState& state,
               const EpochCallback& on_epoch) {
  validate(cfg);
  validate(spec);
  require(state.emb.n_users() == ds.n_users && state.emb.n_items() == ds.n_items,
          "train: embedding table does not match dataset");
  TrainLog log;
  for (std::size_t epoch = state.epochs_done + 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    EpochPlan plan(ds, cfg, epoch);
    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    Batch batch;
    while (plan.next(batch)) {
      BatchGradient g = batch_gradient(state.emb, batch, spec);
      if (!std::isfinite(g.loss))
        fail(ErrorCode::Numeric, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(stats.n_batches));
      add_l2(state.emb, g, cfg.l2_reg);
      adam_update(state.emb, state.adam, g, cfg.learning_rate);
      loss_sum += g.loss;
      ++stats.n_batches;
    }
    stats.mean_loss = loss_sum / static_cast<double>(stats.n_batches);
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.epochs_done = epoch;
    log.push_back(stats);
    if (on_epoch) on_epoch(stats, state);
  }
  return log;
}

std::pair<EmbeddingTable, TrainLog> train(const Dataset& ds, const TrainConfig& cfg,
                                          const LossSpec& spec) {
  TrainState st = init_train_state(ds, cfg);
  TrainLog log = train(ds, cfg, spec, st, {});
  return {std::move(st.emb), std::move(log)};
}

}  // namespace bslrec
