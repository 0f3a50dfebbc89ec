#pragma once

#include <span>
#include <vector>

#include "bslrec/config.hpp"
#include "bslrec/types.hpp"

namespace bslrec {

/// Prediction scores for one minibatch: pos[b] is f(u_b, i_b) and row b of
/// neg holds the scores f(u_b, j) of that example's negatives.
struct ScoreBatch {
  std::vector<double> pos;
  Matrix neg;
};

/// Loss value (mean over the batch) and its exact gradient with respect to
/// every input score.
struct LossResult {
  double value = 0.0;
  std::vector<double> grad_pos;
  Matrix grad_neg;
};

// Smallest temperature the softmax family accepts.
inline constexpr double kMinTemperature = 1e-8;

/// Pairwise BPR: mean over all (positive, negative) pairs of
/// -log sigmoid(pos - neg).
LossResult bpr_loss(const ScoreBatch& b);

/// Pointwise BCE: mean[-log sigmoid(pos)] + c * mean[-log(1 - sigmoid(neg))].
LossResult bce_loss(const ScoreBatch& b, double c);

/// Pointwise MSE: mean[(pos - 1)^2] + c * mean[neg^2].
LossResult mse_loss(const ScoreBatch& b, double c);

/// Softmax loss without the positive term in the denominator:
/// -pos + tau * log sum_j exp(neg_j / tau), averaged over the batch.
///
/// The denominator sums over the sampled negatives. Replacing the sum with a
/// mean only shifts the value by tau * log N, so gradients are identical.
/// The gradient over a row of negatives is the softmax of neg / tau, which is
/// also the worst-case distribution of a KL ball around the uniform one.
LossResult softmax_loss(const ScoreBatch& b, double tau);

/// Bilateral softmax loss.
///
/// Pseudocode form, one positive per example:
///   -pos / tau_pos + (tau_pos / tau_neg) * log sum_j exp(neg_j / tau_neg)
/// which equals softmax_loss / tau when both temperatures agree.
///
/// Canonical form wraps the positives of each group in a log-mean-exp:
///   -tau_pos * log mean_{i in g} exp(pos_i / tau_pos)
///     + mean_{r in g} tau_neg * log sum_j exp(neg_rj / tau_neg)
/// averaged over groups. `groups[b]` assigns example b to a group in
/// [0, G); every group must be nonempty. An empty span puts each example in
/// its own group, in which case the value equals softmax_loss at tau_neg
/// whenever tau_pos == tau_neg.
LossResult bsl_loss(const ScoreBatch& b, double tau_pos, double tau_neg, BslForm form,
                    std::span<const std::size_t> groups = {});

/// Softmax loss with the variance penalty of its second-order expansion
/// dropped: -pos + mean_j neg_j. The remaining expansion terms do not depend
/// on the scores. tau is validated but does not enter the value.
LossResult softmax_loss_no_variance(const ScoreBatch& b, double tau);

/// Dispatches on spec.kind. `groups` is forwarded to Canonical BSL only.
LossResult compute_loss(const ScoreBatch& b, const LossSpec& spec,
                        std::span<const std::size_t> groups = {});

/// log sum_j exp(x_j / tau), max-shifted. Writes softmax(x / tau) into
/// `weights` when it is non-empty.
double log_sum_exp(std::span<const double> x, double tau, std::span<double> weights = {});

}  // namespace bslrec
