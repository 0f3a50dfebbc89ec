#include "bslrec/dro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bslrec/types.hpp"

namespace bslrec::dro {

namespace {

void check_base(std::span<const double> scores, std::span<const double> base) {
  require(scores.size() == base.size(), "dro: scores and base lengths differ");
  require(!scores.empty(), "dro: empty input");
  double sum = 0.0;
  for (double p : base) {
    require(p > 0 && std::isfinite(p), "dro: base probabilities must be positive");
    sum += p;
  }
  require(std::abs(sum - 1.0) < 1e-9, "dro: base must sum to 1");
}

// log sum_j base[j] exp(s[j] / tau); fills the normalized tilt when asked.
double log_tilt(std::span<const double> s, std::span<const double> base, double tau,
                std::vector<double>* weights) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < s.size(); ++j) mx = std::max(mx, s[j] / tau + std::log(base[j]));
  double sum = 0.0;
  if (weights) weights->resize(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    double e = std::exp(s[j] / tau + std::log(base[j]) - mx);
    sum += e;
    if (weights) (*weights)[j] = e;
  }
  if (weights)
    for (double& w : *weights) w /= sum;
  return mx + std::log(sum);
}

double tilt_kl(std::span<const double> s, std::span<const double> base, double tau,
               std::vector<double>& w) {
  log_tilt(s, base, tau, &w);
  return kl_divergence(w, base);
}

}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> base) {
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p[j] > 0) kl += p[j] * std::log(p[j] / base[j]);
  return std::max(kl, 0.0);
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0) h -= x * std::log(x);
  return h;
}

std::vector<double> uniform_base(std::size_t n) {
  require(n > 0, "uniform_base: n must be positive");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

double weighted_mean(std::span<const double> scores, std::span<const double> base) {
  double m = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) m += base[j] * scores[j];
  return m;
}

double weighted_variance(std::span<const double> scores, std::span<const double> base) {
  double m = weighted_mean(scores, base);
  double v = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) v += base[j] * (scores[j] - m) * (scores[j] - m);
  return v;
}

WorstCaseDistribution worst_case_weights(std::span<const double> scores,
                                         std::span<const double> base, double tau) {
  check_base(scores, base);
  require(tau > 0 && std::isfinite(tau), "worst_case_weights: tau must be positive");
  WorstCaseDistribution out;
  out.tau = tau;
  log_tilt(scores, base, tau, &out.weights);
  out.kl_radius = kl_divergence(out.weights, base);
  return out;
}

double dual_value(std::span<const double> scores, std::span<const double> base, double tau,
                  double eta) {
  check_base(scores, base);
  require(tau > 0 && std::isfinite(tau), "dual_value: tau must be positive");
  require(eta >= 0, "dual_value: eta must be non-negative");
  return tau * log_tilt(scores, base, tau, nullptr) + tau * eta;
}

KlBallSolution kl_ball_sup(std::span<const double> scores, std::span<const double> base,
                           double eta) {
  check_base(scores, base);
  require(eta >= 0 && std::isfinite(eta), "kl_ball_sup: eta must be non-negative");

  const double top = *std::max_element(scores.begin(), scores.end());
  const double bottom = *std::min_element(scores.begin(), scores.end());
  KlBallSolution sol;
  if (eta == 0.0 || top == bottom) {
    sol.value = weighted_mean(scores, base);
    sol.argmax.assign(base.begin(), base.end());
    return sol;
  }

  // tau -> 0 limit: base conditioned on the top-scoring atoms.
  double top_mass = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (scores[j] == top) top_mass += base[j];
  const double kl_limit = -std::log(top_mass);
  if (eta >= kl_limit) {
    sol.value = top;
    sol.argmax.assign(scores.size(), 0.0);
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (scores[j] == top) sol.argmax[j] = base[j] / top_mass;
    return sol;
  }

  // Bracket in log(tau): KL(lo) > eta > KL(hi).
  std::vector<double> w;
  const double spread = top - bottom;
  double log_lo = std::log(spread), log_hi = std::log(spread);
  while (tilt_kl(scores, base, std::exp(log_hi), w) > eta) log_hi += 2.0;
  while (tilt_kl(scores, base, std::exp(log_lo), w) < eta) {
    log_lo -= 2.0;
    if (log_lo < -700.0) break;
  }

  constexpr int kMaxSteps = 200;
  constexpr double kTol = 1e-12;
  for (int step = 0; step < kMaxSteps; ++step) {
    double mid = 0.5 * (log_lo + log_hi);
    double kl = tilt_kl(scores, base, std::exp(mid), w);
    if (std::abs(kl - eta) <= kTol * std::max(1.0, eta) || log_hi - log_lo < 1e-15) {
      sol.tau = std::exp(mid);
      sol.argmax = w;
      sol.value = weighted_mean(scores, w);
      return sol;
    }
    (kl > eta ? log_lo : log_hi) = mid;
  }
  fail(ErrorCode::Numeric, "kl_ball_sup: bisection did not converge");
}

double taylor_negative_part(std::span<const double> scores, std::span<const double> base,
                            double tau) {
  check_base(scores, base);
  require(tau > 0, "taylor_negative_part: tau must be positive");
  return weighted_mean(scores, base) + weighted_variance(scores, base) / (2.0 * tau);
}

double tau_star(double variance, double eta) {
  require(variance >= 0, "tau_star: variance must be non-negative");
  require(eta > 0, "tau_star: eta must be positive");
  return std::sqrt(variance / (2.0 * eta));
}

double estimate_eta(std::span<const double> scores, std::span<const double> base, double tau) {
  check_base(scores, base);
  require(tau > 0, "estimate_eta: tau must be positive");
  return weighted_variance(scores, base) / (2.0 * tau * tau);
}

}  // namespace bslrec::dro
