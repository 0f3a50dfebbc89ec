#include <doctest.h>

#include <cmath>
#include <random>

#include "bslrec/dro.hpp"
#include "bslrec/losses.hpp"
#include "oracles.hpp"

using namespace bslrec;

namespace {

ScoreBatch random_batch(std::mt19937_64& rng, std::size_t B, std::size_t N, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  ScoreBatch b;
  b.pos.resize(B);
  for (auto& p : b.pos) p = u(rng);
  b.neg = Matrix(B, N);
  for (auto& x : b.neg.data()) x = u(rng);
  return b;
}

std::vector<double> flatten(const ScoreBatch& b) {
  std::vector<double> x = b.pos;
  x.insert(x.end(), b.neg.data().begin(), b.neg.data().end());
  return x;
}

ScoreBatch unflatten(const std::vector<double>& x, std::size_t B, std::size_t N) {
  ScoreBatch b;
  b.pos.assign(x.begin(), x.begin() + B);
  b.neg = Matrix(B, N);
  std::copy(x.begin() + B, x.end(), b.neg.data().begin());
  return b;
}

std::vector<double> flat_grad(const LossResult& r) {
  std::vector<double> g = r.grad_pos;
  g.insert(g.end(), r.grad_neg.data().begin(), r.grad_neg.data().end());
  return g;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

using LossFn = std::function<LossResult(const ScoreBatch&)>;

double fd_check(const LossFn& fn, const ScoreBatch& b, double h = 1e-5) {
  const std::size_t B = b.pos.size(), N = b.neg.cols();
  auto f = [&](const std::vector<double>& x) { return fn(unflatten(x, B, N)).value; };
  return oracle::max_rel_err(flat_grad(fn(b)), oracle::fd_gradient(f, flatten(b), h));
}

std::vector<std::pair<const char*, LossFn>> all_losses() {
  return {
      {"bpr", [](const ScoreBatch& b) { return bpr_loss(b); }},
      {"bce", [](const ScoreBatch& b) { return bce_loss(b, 0.7); }},
      {"mse", [](const ScoreBatch& b) { return mse_loss(b, 0.7); }},
      {"sl", [](const ScoreBatch& b) { return softmax_loss(b, 0.2); }},
      {"bsl-pseudo", [](const ScoreBatch& b) { return bsl_loss(b, 0.3, 0.15, BslForm::Pseudocode); }},
      {"bsl-canon", [](const ScoreBatch& b) { return bsl_loss(b, 0.3, 0.15, BslForm::Canonical); }},
      {"sl-novar", [](const ScoreBatch& b) { return softmax_loss_no_variance(b, 0.2); }},
  };
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("bpr tie") {
  ScoreBatch b{{0.4}, Matrix(1, 1, 0.4)};
  auto r = bpr_loss(b);
  CHECK(r.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(r.grad_pos[0] == doctest::Approx(-0.5));
  CHECK(r.grad_neg(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("bpr dominant positive goes to zero") {
  ScoreBatch b{{50.0}, Matrix(1, 3, -50.0)};
  CHECK(bpr_loss(b).value < 1e-40);
}

TEST_CASE("bpr small batch against finite differences") {
  ScoreBatch b{{0.8}, Matrix(1, 2)};
  b.neg(0, 0) = 0.1;
  b.neg(0, 1) = -0.3;
  CHECK(fd_check([](const ScoreBatch& x) { return bpr_loss(x); }, b) < 1e-6);
  double expect = 0.5 * (std::log1p(std::exp(-0.7)) + std::log1p(std::exp(-1.1)));
  CHECK(bpr_loss(b).value == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("bce values") {
  ScoreBatch b{{0.0}, Matrix(1, 1, 0.0)};
  CHECK(bce_loss(b, 1.0).value == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));
  std::mt19937_64 rng(3);
  auto rb = random_batch(rng, 4, 5);
  auto r = bce_loss(rb, 0.0);
  for (double g : r.grad_neg.data()) CHECK(g == 0.0);
  CHECK(r.value == doctest::Approx(bce_loss({rb.pos, Matrix(4, 5, -30.0)}, 1.0).value).epsilon(1e-9));
}

TEST_CASE("mse values") {
  ScoreBatch perfect{{1.0}, Matrix(1, 1, 0.0)};
  auto r = mse_loss(perfect, 1.0);
  CHECK(r.value == 0.0);
  CHECK(r.grad_pos[0] == 0.0);
  CHECK(r.grad_neg(0, 0) == 0.0);
  ScoreBatch worst{{0.0}, Matrix(1, 1, 1.0)};
  CHECK(mse_loss(worst, 1.0).value == doctest::Approx(2.0));
}

TEST_CASE("softmax equal scores") {
  const double tau = 0.3, s = 0.25;
  const std::size_t N = 7;
  ScoreBatch b{{s}, Matrix(1, N, s)};
  auto r = softmax_loss(b, tau);
  CHECK(r.value == doctest::Approx(tau * std::log(double(N))).epsilon(1e-14));
  for (std::size_t j = 0; j < N; ++j) CHECK(r.grad_neg(0, j) == doctest::Approx(1.0 / N).epsilon(1e-14));
  CHECK(r.grad_pos[0] == -1.0);
}

TEST_CASE("softmax equals the dual objective minus tau*eta") {
  std::mt19937_64 rng(11);
  const double tau = 0.15, eta = 0.3;
  for (int t = 0; t < 20; ++t) {
    auto b = random_batch(rng, 1, 9);
    auto base = dro::uniform_base(9);
    std::vector<double> row(b.neg.row(0).begin(), b.neg.row(0).end());
    double dual = dro::dual_value(row, base, tau, eta);
    // the loss sums over negatives; the dual averages, which shifts by tau*log N
    double expect = -b.pos[0] + dual - tau * eta + tau * std::log(9.0);
    CHECK(softmax_loss(b, tau).value == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("softmax grad_neg is shift invariant") {
  std::mt19937_64 rng(5);
  auto b = random_batch(rng, 6, 11);
  auto shifted = b;
  for (auto& x : shifted.neg.data()) x += 0.37;
  auto g1 = softmax_loss(b, 0.1).grad_neg.data();
  auto g2 = softmax_loss(shifted, 0.1).grad_neg.data();
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(g1[i] - g2[i]) < 1e-12);
}

TEST_CASE("bsl pseudocode equals softmax over tau") {
  std::mt19937_64 rng(9);
  for (double tau : {0.05, 0.1, 0.5, 1.0}) {
    auto b = random_batch(rng, 5, 8);
    CHECK(bsl_loss(b, tau, tau, BslForm::Pseudocode).value ==
          doctest::Approx(softmax_loss(b, tau).value / tau).epsilon(1e-12));
  }
}

TEST_CASE("bsl canonical singleton groups reduce to softmax") {
  std::mt19937_64 rng(10);
  auto b = random_batch(rng, 5, 8);
  auto sl = softmax_loss(b, 0.2);
  auto bsl = bsl_loss(b, 0.2, 0.2, BslForm::Canonical);
  CHECK(bsl.value == doctest::Approx(sl.value).epsilon(1e-13));
  // one positive: the log-mean-exp of a single score is the score itself
  auto other = bsl_loss(b, 0.9, 0.2, BslForm::Canonical);
  CHECK(other.value == doctest::Approx(sl.value).epsilon(1e-13));
}

TEST_CASE("bsl canonical small tau_pos approaches the minimum positive") {
  // -tau * log mean exp(p / tau) -> -max p as tau -> 0
  ScoreBatch b{{0.2, 0.7, -0.4}, Matrix(3, 4, 0.0)};
  std::vector<std::size_t> groups{0, 0, 0};
  auto r = bsl_loss(b, 1e-4, 0.5, BslForm::Canonical, groups);
  double neg_part = 0.5 * std::log(4.0);
  CHECK(std::abs((r.value - neg_part) - (-0.7)) < 1e-3);
}

TEST_CASE("bsl canonical rejects an empty group") {
  ScoreBatch b{{0.2, 0.7}, Matrix(2, 3, 0.0)};
  std::vector<std::size_t> groups{0, 2};
  CHECK_THROWS_AS(bsl_loss(b, 0.2, 0.2, BslForm::Canonical, groups), Error);
}

TEST_CASE("no-variance ablation") {
  ScoreBatch b{{0.3}, Matrix(1, 4, 0.3)};
  CHECK(softmax_loss_no_variance(b, 0.1).value == doctest::Approx(0.0));
  std::mt19937_64 rng(2);
  auto rb = random_batch(rng, 3, 5);
  auto r = softmax_loss_no_variance(rb, 0.1);
  for (double g : r.grad_neg.data()) CHECK(g == doctest::Approx(1.0 / (5 * 3)).epsilon(1e-15));
}

TEST_CASE("softmax minus ablation tends to the variance penalty") {
  std::mt19937_64 rng(4);
  auto b = random_batch(rng, 1, 16);
  std::vector<double> row(b.neg.row(0).begin(), b.neg.row(0).end());
  double mean = 0, var = 0;
  for (double x : row) mean += x / row.size();
  for (double x : row) var += (x - mean) * (x - mean) / row.size();
  double prev = 1e300;
  for (double tau : {5.0, 10.0, 20.0}) {
    double diff = softmax_loss(b, tau).value - softmax_loss_no_variance(b, tau).value - tau * std::log(16.0);
    double ratio = diff / (var / (2 * tau));
    CHECK(std::abs(ratio - 1) < 0.05);
    CHECK(std::abs(ratio - 1) < prev);
    prev = std::abs(ratio - 1);
  }
}

TEST_CASE("every loss matches finite differences on random batches") {
  std::mt19937_64 rng(2024);
  for (const auto& [name, fn] : all_losses()) {
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
      auto b = random_batch(rng, 1 + t % 4, 1 + t % 7);
      if (std::string(name) == "sl-novar" && b.neg.cols() < 2) b = random_batch(rng, 2, 3);
      worst = std::max(worst, fd_check(fn, b));
    }
    INFO(name);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("canonical bsl with groups matches finite differences") {
  std::mt19937_64 rng(77);
  std::vector<std::size_t> groups{0, 1, 0, 2, 1, 0};
  auto fn = [&](const ScoreBatch& b) { return bsl_loss(b, 0.25, 0.1, BslForm::Canonical, groups); };
  for (int t = 0; t < 20; ++t) CHECK(fd_check(fn, random_batch(rng, 6, 5)) < 1e-5);
}

TEST_CASE("bsl gradients are parallel to softmax at equal temperatures") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    auto b = random_batch(rng, 4, 6);
    const double tau = 0.05 + 0.01 * t;
    auto sl = flat_grad(softmax_loss(b, tau));
    CHECK(cosine(sl, flat_grad(bsl_loss(b, tau, tau, BslForm::Pseudocode))) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(sl, flat_grad(bsl_loss(b, tau, tau, BslForm::Canonical))) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("losses are permutation equivariant over negatives") {
  std::mt19937_64 rng(12);
  auto b = random_batch(rng, 3, 6);
  std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  ScoreBatch p{b.pos, Matrix(3, 6)};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t j = 0; j < 6; ++j) p.neg(r, j) = b.neg(r, perm[j]);
  for (const auto& [name, fn] : all_losses()) {
    auto a = fn(b), c = fn(p);
    INFO(name);
    CHECK(a.value == doctest::Approx(c.value).epsilon(1e-13));
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t j = 0; j < 6; ++j) CHECK(c.grad_neg(r, j) == doctest::Approx(a.grad_neg(r, perm[j])).epsilon(1e-13));
  }
}

TEST_CASE("finite everywhere on the unit box") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 50; ++t) {
    auto b = random_batch(rng, 8, 32);
    for (double tau : {0.01, 0.05, 1.0}) {
      for (auto r : {softmax_loss(b, tau), bsl_loss(b, tau, 0.01, BslForm::Pseudocode),
                     bsl_loss(b, 0.01, tau, BslForm::Canonical)}) {
        CHECK(std::isfinite(r.value));
        for (double g : r.grad_neg.data()) CHECK(std::isfinite(g));
      }
    }
  }
}

TEST_CASE("stable log-sum-exp agrees with the naive formula") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> x(10);
  for (auto& v : x) v = u(rng);
  double naive = 0;
  for (double v : x) naive += std::exp(v / 0.5);
  CHECK(log_sum_exp(x, 0.5) == doctest::Approx(std::log(naive)).epsilon(1e-14));
  std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big, 1.0) == doctest::Approx(1000 + std::log(2.0)));
}

TEST_CASE("invalid inputs are rejected") {
  ScoreBatch b{{0.1}, Matrix(1, 2, 0.0)};
  CHECK_THROWS_AS(softmax_loss(b, 0.0), Error);
  CHECK_THROWS_AS(bce_loss(b, -1.0), Error);
  CHECK_THROWS_AS(softmax_loss_no_variance({{0.1}, Matrix(1, 1, 0.0)}, 0.1), Error);
  ScoreBatch mismatched{{0.1, 0.2}, Matrix(1, 2, 0.0)};
  CHECK_THROWS_AS(bpr_loss(mismatched), Error);
}

TEST_CASE("compute_loss dispatch") {
  std::mt19937_64 rng(15);
  auto b = random_batch(rng, 3, 4);
  LossSpec s;
  s.kind = LossKind::Softmax;
  s.tau = 0.2;
  CHECK(compute_loss(b, s).value == softmax_loss(b, 0.2).value);
  s.kind = LossKind::Bilateral;
  s.tau_pos = 0.4;
  s.tau_neg = 0.1;
  CHECK(compute_loss(b, s).value == bsl_loss(b, 0.4, 0.1, BslForm::Pseudocode).value);
  s.kind = LossKind::BCE;
  s.bce_mse_balance = 0.5;
  CHECK(compute_loss(b, s).value == bce_loss(b, 0.5).value);
}

}
