#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bslrec/config.hpp"
#include "bslrec/dataset.hpp"
#include "bslrec/losses.hpp"
#include "bslrec/types.hpp"

namespace bslrec {

// Matrix-factorization parameters: one row per user and per item.
struct EmbeddingTable {
  std::size_t dim = 0;
  Matrix user_vecs;
  Matrix item_vecs;

  std::size_t n_users() const noexcept { return user_vecs.rows(); }
  std::size_t n_items() const noexcept { return item_vecs.rows(); }
  bool operator==(const EmbeddingTable&) const = default;
};

// Lazy Adam: the step counter advances once per update, and moments of rows
// absent from a batch are left untouched.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  Matrix user_m, user_v;
  Matrix item_m, item_v;

  static AdamState for_table(const EmbeddingTable& emb);
  bool operator==(const AdamState&) const = default;
};

// Xavier-uniform in [-sqrt(6 / 2d), sqrt(6 / 2d)].
EmbeddingTable init_embeddings(std::size_t n_users, std::size_t n_items, std::size_t dim,
                               std::uint64_t seed);

inline constexpr double kNormEpsilon = 1e-12;  // floor on vector norms

// Cosine scores of one user against a list of items, with what the backward
// pass needs: the normalized vectors and the norms they were divided by.
struct CosineScores {
  std::vector<double> scores;
  std::vector<double> user_hat;
  double user_norm = 0.0;
  std::vector<ItemId> items;
  Matrix item_hat;
  std::vector<double> item_norm;
};

CosineScores cosine_score(const EmbeddingTable& emb, UserId user, std::span<const ItemId> items);

// Pushes d(loss)/d(score_k) back to raw embeddings through the normalization
// Jacobian (I - x_hat x_hat^T) / |x|, accumulating into the gradient rows.
void cosine_backward(const CosineScores& ctx, std::span<const double> grad_scores,
                     std::span<double> grad_user, Matrix& grad_items_rows);

std::vector<double> score_all_items(const EmbeddingTable& emb, UserId user,
                                    ScoreMode mode = ScoreMode::Cosine);

// One minibatch. With negatives.rows() == 0 the batch runs in in-batch mode:
// example b uses every other example's item as a negative.
struct Batch {
  std::vector<UserId> users;
  std::vector<ItemId> items;
  std::vector<std::vector<ItemId>> negatives;  // empty in in-batch mode
};

// Sparse gradient over the rows a batch touched.
struct BatchGradient {
  double loss = 0.0;
  std::vector<UserId> user_rows;
  Matrix user_grad;  // one row per entry of user_rows
  std::vector<ItemId> item_rows;
  Matrix item_grad;
};

// Loss (without L2) and its gradient with respect to raw embeddings.
BatchGradient batch_gradient(const EmbeddingTable& emb, const Batch& batch, const LossSpec& spec);

// Adds l2 * row to every touched gradient row.
void add_l2(const EmbeddingTable& emb, BatchGradient& g, double l2);

void adam_update(EmbeddingTable& emb, AdamState& adam, const BatchGradient& g, double lr);

struct TrainState {
  EmbeddingTable emb;
  AdamState adam;
  std::size_t epochs_done = 0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::size_t n_batches = 0;
  double seconds = 0.0;
};

using TrainLog = std::vector<EpochStats>;
using EpochCallback = std::function<void(const EpochStats&, const TrainState&)>;

TrainState init_train_state(const Dataset& ds, const TrainConfig& cfg);

// Runs epochs (state.epochs_done, cfg.epochs] in place. Each epoch draws from
// its own generator derived from (rng_seed, epoch), so resuming from a saved
// state reproduces an uninterrupted run.
TrainLog train(const Dataset& ds, const TrainConfig& cfg, const LossSpec& spec, TrainState& state,
               const EpochCallback& on_epoch = {});

std::pair<EmbeddingTable, TrainLog> train(const Dataset& ds, const TrainConfig& cfg,
                                          const LossSpec& spec);

// The minibatches of one epoch exactly as train() builds them.
std::vector<Batch> epoch_batches(const Dataset& ds, const TrainConfig& cfg, std::size_t epoch);

}  // namespace bslrec
