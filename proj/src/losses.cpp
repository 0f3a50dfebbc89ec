#include "bslrec/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bslrec {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void check_batch(const ScoreBatch& b) {
  require(b.neg.rows() == b.pos.size(), "loss: negative rows must match positive count");
  require(!b.pos.empty(), "loss: empty batch");
}

void check_tau(double tau) {
  require(std::isfinite(tau) && tau >= kMinTemperature,
          "loss: temperature must be >= 1e-8");
}

LossResult zero_result(const ScoreBatch& b) {
  LossResult r;
  r.grad_pos.assign(b.pos.size(), 0.0);
  r.grad_neg = Matrix(b.neg.rows(), b.neg.cols());
  return r;
}

}  // namespace

double log_sum_exp(std::span<const double> x, double tau, std::span<double> weights) {
  require(!x.empty(), "log_sum_exp: empty input");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v / tau);
  double sum = 0.0;
  for (double v : x) sum += std::exp(v / tau - mx);
  if (!weights.empty()) {
    for (std::size_t j = 0; j < x.size(); ++j) weights[j] = std::exp(x[j] / tau - mx) / sum;
  }
  return mx + std::log(sum);
}

LossResult bpr_loss(const ScoreBatch& b) {
  check_batch(b);
  LossResult r = zero_result(b);
  const double scale = 1.0 / static_cast<double>(b.neg.rows() * b.neg.cols());
  require(b.neg.cols() > 0, "bpr_loss: need at least one negative");
  for (std::size_t e = 0; e < b.pos.size(); ++e) {
    for (std::size_t j = 0; j < b.neg.cols(); ++j) {
      double diff = b.pos[e] - b.neg(e, j);
      r.value += softplus(-diff) * scale;
      double g = sigmoid(-diff) * scale;
      r.grad_pos[e] -= g;
      r.grad_neg(e, j) = g;
    }
  }
  return r;
}

LossResult bce_loss(const ScoreBatch& b, double c) {
  check_batch(b);
  require(c >= 0, "bce_loss: balance must be >= 0");
  LossResult r = zero_result(b);
  const double pos_scale = 1.0 / static_cast<double>(b.pos.size());
  for (std::size_t e = 0; e < b.pos.size(); ++e) {
    r.value += softplus(-b.pos[e]) * pos_scale;
    r.grad_pos[e] = -sigmoid(-b.pos[e]) * pos_scale;
  }
  if (b.neg.size() > 0) {
    const double neg_scale = c / static_cast<double>(b.neg.size());
    for (std::size_t k = 0; k < b.neg.size(); ++k) {
      double s = b.neg.data()[k];
      r.value += softplus(s) * neg_scale;
      r.grad_neg.data()[k] = sigmoid(s) * neg_scale;
    }
  }
  return r;
}

LossResult mse_loss(const ScoreBatch& b, double c) {
  check_batch(b);
  require(c >= 0, "mse_loss: balance must be >= 0");
  LossResult r = zero_result(b);
  const double pos_scale = 1.0 / static_cast<double>(b.pos.size());
  for (std::size_t e = 0; e < b.pos.size(); ++e) {
    double d = b.pos[e] - 1.0;
    r.value += d * d * pos_scale;
    r.grad_pos[e] = 2.0 * d * pos_scale;
  }
  if (b.neg.size() > 0) {
    const double neg_scale = c / static_cast<double>(b.neg.size());
    for (std::size_t k = 0; k < b.neg.size(); ++k) {
      double s = b.neg.data()[k];
      r.value += s * s * neg_scale;
      r.grad_neg.data()[k] = 2.0 * s * neg_scale;
    }
  }
  return r;
}

LossResult softmax_loss(const ScoreBatch& b, double tau) {
  check_batch(b);
  check_tau(tau);
  require(b.neg.cols() > 0, "softmax_loss: need at least one negative");
  LossResult r = zero_result(b);
  const double scale = 1.0 / static_cast<double>(b.pos.size());
  for (std::size_t e = 0; e < b.pos.size(); ++e) {
    auto w = r.grad_neg.row(e);
    double lse = log_sum_exp(b.neg.row(e), tau, w);
    r.value += (-b.pos[e] + tau * lse) * scale;
    r.grad_pos[e] = -scale;
    for (double& x : w) x *= scale;
  }
  return r;
}

LossResult bsl_loss(const ScoreBatch& b, double tau_pos, double tau_neg, BslForm form,
                    std::span<const std::size_t> groups) {
  check_batch(b);
  check_tau(tau_pos);
  check_tau(tau_neg);
  require(b.neg.cols() > 0, "bsl_loss: need at least one negative");
  LossResult r = zero_result(b);
  const std::size_t n = b.pos.size();

  if (form == BslForm::Pseudocode) {
    const double scale = 1.0 / static_cast<double>(n);
    const double ratio = tau_pos / tau_neg;
    for (std::size_t e = 0; e < n; ++e) {
      auto w = r.grad_neg.row(e);
      double lse = log_sum_exp(b.neg.row(e), tau_neg, w);
      r.value += (-b.pos[e] / tau_pos + ratio * lse) * scale;
      r.grad_pos[e] = -scale / tau_pos;
      for (double& x : w) x *= scale * ratio / tau_neg;
    }
    return r;
  }

  std::vector<std::size_t> group_of(n);
  std::size_t n_groups = n;
  if (groups.empty()) {
    for (std::size_t e = 0; e < n; ++e) group_of[e] = e;
  } else {
    require(groups.size() == n, "bsl_loss: one group id per example required");
    n_groups = *std::max_element(groups.begin(), groups.end()) + 1;
    std::copy(groups.begin(), groups.end(), group_of.begin());
  }
  std::vector<std::vector<std::size_t>> members(n_groups);
  for (std::size_t e = 0; e < n; ++e) members[group_of[e]].push_back(e);
  for (const auto& m : members)
    require(!m.empty(), "bsl_loss: canonical form needs at least one positive per group");

  const double gscale = 1.0 / static_cast<double>(n_groups);
  std::vector<double> pos_vals, pos_w;
  for (const auto& m : members) {
    const double k = static_cast<double>(m.size());
    pos_vals.resize(m.size());
    pos_w.resize(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) pos_vals[a] = b.pos[m[a]];
    // -tau_pos * log((1/k) sum exp(pos/tau_pos))
    double lse = log_sum_exp(pos_vals, tau_pos, pos_w);
    r.value += -tau_pos * (lse - std::log(k)) * gscale;
    for (std::size_t a = 0; a < m.size(); ++a) {
      std::size_t e = m[a];
      r.grad_pos[e] = -pos_w[a] * gscale;
      auto w = r.grad_neg.row(e);
      double nlse = log_sum_exp(b.neg.row(e), tau_neg, w);
      r.value += tau_neg * nlse * gscale / k;
      for (double& x : w) x *= gscale / k;
    }
  }
  return r;
}

LossResult softmax_loss_no_variance(const ScoreBatch& b, double tau) {
  check_batch(b);
  check_tau(tau);
  require(b.neg.cols() >= 2, "softmax_loss_no_variance: need at least two negatives");
  LossResult r = zero_result(b);
  const double scale = 1.0 / static_cast<double>(b.pos.size());
  const double nscale = scale / static_cast<double>(b.neg.cols());
  for (std::size_t e = 0; e < b.pos.size(); ++e) {
    double mean = 0.0;
    for (double s : b.neg.row(e)) mean += s;
    mean /= static_cast<double>(b.neg.cols());
    r.value += (-b.pos[e] + mean) * scale;
    r.grad_pos[e] = -scale;
    for (double& x : r.grad_neg.row(e)) x = nscale;
  }
  return r;
}

LossResult compute_loss(const ScoreBatch& b, const LossSpec& spec,
                        std::span<const std::size_t> groups) {
  switch (spec.kind) {
    case LossKind::BPR: return bpr_loss(b);
    case LossKind::BCE: return bce_loss(b, spec.bce_mse_balance);
    case LossKind::MSE: return mse_loss(b, spec.bce_mse_balance);
    case LossKind::Softmax: return softmax_loss(b, spec.tau);
    case LossKind::Bilateral:
      return bsl_loss(b, spec.tau_pos, spec.tau_neg, spec.bsl_form,
                      spec.bsl_form == BslForm::Canonical ? groups : std::span<const std::size_t>{});
    case LossKind::SoftmaxNoVariance: return softmax_loss_no_variance(b, spec.tau);
  }
  fail(ErrorCode::InvalidArgument, "compute_loss: unknown loss kind");
}

}  // namespace bslrec
