#pragma once

#include <span>
#include <vector>

namespace bslrec::dro {

// Exponentially tilted version of a base distribution over a negative batch.
struct WorstCaseDistribution {
  std::vector<double> weights;  // probability vector
  double kl_radius = 0.0;       // KL(weights || base)
  double tau = 0.0;
};

struct KlBallSolution {
  double value = 0.0;           // sup of E_p[scores] over the KL ball
  std::vector<double> argmax;   // maximizing distribution
  double tau = 0.0;             // tilt temperature reaching the boundary; 0 when clamped
};

// weights[j] proportional to base[j] * exp(scores[j] / tau).
WorstCaseDistribution worst_case_weights(std::span<const double> scores,
                                         std::span<const double> base, double tau);

// tau * log sum_j base[j] exp(scores[j] / tau) + tau * eta.
double dual_value(std::span<const double> scores, std::span<const double> base, double tau,
                  double eta);

/// Maximizes E_p[scores] subject to KL(p || base) <= eta.
///
/// The maximizer is a tilt of base, and the KL of the tilt falls
/// monotonically from -log(base mass on the top scores) at tau -> 0 to 0 as
/// tau -> infinity. The boundary temperature is found by bisection in
/// log(tau). Radii at or beyond the tau -> 0 limit return the base restricted
/// to the highest-scoring atoms.
KlBallSolution kl_ball_sup(std::span<const double> scores, std::span<const double> base,
                           double eta);

// E_base[s] + Var_base[s] / (2 tau), the second-order expansion of the
// negative part of the softmax loss.
double taylor_negative_part(std::span<const double> scores, std::span<const double> base,
                            double tau);

// sqrt(variance / (2 eta)).
double tau_star(double variance, double eta);

// Var_base[s] / (2 tau^2); inverse of tau_star.
double estimate_eta(std::span<const double> scores, std::span<const double> base, double tau);

// Base-weighted mean and population variance.
double weighted_mean(std::span<const double> scores, std::span<const double> base);
double weighted_variance(std::span<const double> scores, std::span<const double> base);

double kl_divergence(std::span<const double> p, std::span<const double> base);
double entropy(std::span<const double> p);

std::vector<double> uniform_base(std::size_t n);

}  // namespace bslrec::dro
