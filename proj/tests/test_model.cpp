#include <doctest.h>

#include <cmath>
#include <random>

#include "bslrec/eval.hpp"
#include "bslrec/model.hpp"
#include "bslrec/synthetic.hpp"
#include "oracles.hpp"

using namespace bslrec;

namespace {

LossSpec loss_of(LossKind kind, BslForm form = BslForm::Pseudocode) {
  LossSpec s;
  s.kind = kind;
  s.tau = 0.2;
  s.tau_pos = 0.3;
  s.tau_neg = 0.15;
  s.bce_mse_balance = 0.8;
  s.bsl_form = form;
  return s;
}

std::vector<LossSpec> every_loss() {
  return {loss_of(LossKind::BPR),       loss_of(LossKind::BCE),
          loss_of(LossKind::MSE),       loss_of(LossKind::Softmax),
          loss_of(LossKind::Bilateral), loss_of(LossKind::Bilateral, BslForm::Canonical),
          loss_of(LossKind::SoftmaxNoVariance)};
}

// Hand-written cosine similarity and its gradient for one (u, v) pair.
double cos_sim(const std::vector<double>& u, const std::vector<double>& v, std::vector<double>* gu,
               std::vector<double>* gv) {
  double uu = 0, vv = 0, uv = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    uu += u[k] * u[k];
    vv += v[k] * v[k];
    uv += u[k] * v[k];
  }
  const double nu = std::max(std::sqrt(uu), kNormEpsilon), nv = std::max(std::sqrt(vv), kNormEpsilon);
  const double s = uv / (nu * nv);
  if (gu)
    for (std::size_t k = 0; k < u.size(); ++k) (*gu)[k] = v[k] / (nu * nv) - s * u[k] / (nu * nu);
  if (gv)
    for (std::size_t k = 0; k < u.size(); ++k) (*gv)[k] = u[k] / (nu * nv) - s * v[k] / (nv * nv);
  return s;
}

std::vector<double> row_vec(const Matrix& m, std::size_t r) { return {m.row(r).begin(), m.row(r).end()}; }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("xavier initialization") {
  auto emb = init_embeddings(500, 1100, 64, 3);
  const double bound = std::sqrt(6.0 / 128);
  CHECK(bound == doctest::Approx(0.2165).epsilon(1e-3));
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (const Matrix* m : {&emb.user_vecs, &emb.item_vecs})
    for (double x : m->data()) {
      CHECK(std::abs(x) <= bound);
      sum += x;
      sq += x * x;
      ++n;
    }
  CHECK(n > 100000);
  const double var = sq / n - (sum / n) * (sum / n);
  CHECK(std::abs(var / ((2 * bound) * (2 * bound) / 12) - 1) < 0.05);
  CHECK(init_embeddings(500, 1100, 64, 3) == emb);
  CHECK_FALSE(init_embeddings(500, 1100, 64, 4) == emb);
  CHECK_THROWS_AS(init_embeddings(2, 2, 0, 1), Error);
}

TEST_CASE("cosine bounds and scale invariance") {
  EmbeddingTable emb;
  emb.dim = 3;
  emb.user_vecs = Matrix(1, 3);
  emb.item_vecs = Matrix(2, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    emb.user_vecs(0, k) = 0.1 * (k + 1);
    emb.item_vecs(0, k) = 0.1 * (k + 1);
    emb.item_vecs(1, k) = -0.1 * (k + 1);
  }
  std::vector<ItemId> items{0, 1};
  auto c = cosine_score(emb, 0, items);
  CHECK(c.scores[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.scores[1] == doctest::Approx(-1.0).epsilon(1e-12));
  auto scaled = emb;
  for (double& x : scaled.user_vecs.data()) x *= 10;
  auto c2 = cosine_score(scaled, 0, items);
  CHECK(std::abs(c2.scores[0] - c.scores[0]) < 1e-12);
  CHECK(std::abs(c2.scores[1] - c.scores[1]) < 1e-12);
}

TEST_CASE("cosine backward matches finite differences") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    auto emb = init_embeddings(1, 3, 8, 100 + t);
    std::vector<ItemId> items{0, 1, 2};
    std::vector<double> w{0.3, -1.2, 0.7};
    auto f_user = [&](const std::vector<double>& u) {
      auto e = emb;
      std::copy(u.begin(), u.end(), e.user_vecs.row(0).begin());
      auto c = cosine_score(e, 0, items);
      return w[0] * c.scores[0] + w[1] * c.scores[1] + w[2] * c.scores[2];
    };
    auto ctx = cosine_score(emb, 0, items);
    std::vector<double> gu(8, 0.0);
    Matrix gi(3, 8);
    cosine_backward(ctx, w, gu, gi);
    CHECK(oracle::max_rel_err(gu, oracle::fd_gradient(f_user, row_vec(emb.user_vecs, 0))) < 1e-5);
    auto f_item = [&](const std::vector<double>& v) {
      auto e = emb;
      std::copy(v.begin(), v.end(), e.item_vecs.row(1).begin());
      return cosine_score(e, 0, items).scores[1];
    };
    std::vector<double> g1(8, 0.0);
    Matrix gi1(3, 8);
    std::vector<double> unit{0.0, 1.0, 0.0};
    cosine_backward(ctx, unit, g1, gi1);
    CHECK(oracle::max_rel_err(row_vec(gi1, 1), oracle::fd_gradient(f_item, row_vec(emb.item_vecs, 1))) < 1e-5);
  }
}

TEST_CASE("score_all_items agrees with cosine_score and a plain loop") {
  auto emb = init_embeddings(5, 40, 12, 9);
  for (UserId u = 0; u < 5; ++u) {
    auto all = score_all_items(emb, u);
    CHECK(all.size() == 40);
    std::vector<ItemId> items(40);
    std::iota(items.begin(), items.end(), ItemId{0});
    auto c = cosine_score(emb, u, items);
    std::size_t best = 0;
    double best_s = -2;
    for (std::size_t i = 0; i < 40; ++i) {
      CHECK(std::abs(all[i] - c.scores[i]) < 1e-12);
      double s = cos_sim(row_vec(emb.user_vecs, u), row_vec(emb.item_vecs, i), nullptr, nullptr);
      if (s > best_s) best_s = s, best = i;
    }
    CHECK(std::max_element(all.begin(), all.end()) - all.begin() == std::ptrdiff_t(best));
    auto ip = score_all_items(emb, u, ScoreMode::InnerProduct);
    double dot = 0;
    for (std::size_t k = 0; k < 12; ++k) dot += emb.user_vecs(u, k) * emb.item_vecs(3, k);
    CHECK(ip[3] == doctest::Approx(dot).epsilon(1e-14));
  }
}

TEST_CASE("end-to-end gradients match finite differences for every loss") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<ItemId> item(0, 9);
  for (const auto& spec : every_loss()) {
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
      auto emb = init_embeddings(4, 10, 5, 1000 + t);
      Batch batch;
      const std::size_t n = 2 + t % 3;
      for (std::size_t b = 0; b < n; ++b) {
        batch.users.push_back(static_cast<UserId>(b % 4 == 3 ? 0 : b % 4));
        batch.items.push_back(item(rng));
        if (t % 5 != 4) {
          std::vector<ItemId> neg(3);
          for (auto& j : neg) j = item(rng);
          batch.negatives.push_back(neg);
        }
      }
      if (spec.kind == LossKind::SoftmaxNoVariance && batch.negatives.empty() && n < 3) continue;
      auto g = batch_gradient(emb, batch, spec);
      for (std::size_t r = 0; r < g.user_rows.size(); ++r) {
        auto f = [&](const std::vector<double>& x) {
          auto e = emb;
          std::copy(x.begin(), x.end(), e.user_vecs.row(g.user_rows[r]).begin());
          return batch_gradient(e, batch, spec).loss;
        };
        worst = std::max(worst, oracle::max_rel_err(row_vec(g.user_grad, r),
                                                     oracle::fd_gradient(f, row_vec(emb.user_vecs, g.user_rows[r]))));
      }
      for (std::size_t r = 0; r < g.item_rows.size(); ++r) {
        auto f = [&](const std::vector<double>& x) {
          auto e = emb;
          std::copy(x.begin(), x.end(), e.item_vecs.row(g.item_rows[r]).begin());
          return batch_gradient(e, batch, spec).loss;
        };
        worst = std::max(worst, oracle::max_rel_err(row_vec(g.item_grad, r),
                                                     oracle::fd_gradient(f, row_vec(emb.item_vecs, g.item_rows[r]))));
      }
    }
    INFO(to_string(spec.kind), " ", to_string(spec.bsl_form));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("one epoch equals a hand-stepped Adam update") {
  auto ds = make_dataset({{0, 1}, {1, 2}, {3}}, {{}, {}, {}}, 3, 4);
  TrainConfig cfg;
  cfg.embedding_dim = 4;
  cfg.batch_size = 100;
  cfg.n_negatives = 2;
  cfg.epochs = 1;
  cfg.learning_rate = 0.05;
  cfg.l2_reg = 0.01;
  cfg.rng_seed = 17;
  LossSpec spec;
  spec.kind = LossKind::Softmax;
  spec.tau = 0.3;

  auto state = init_train_state(ds, cfg);
  const auto before = state.emb;
  auto batches = epoch_batches(ds, cfg, 1);
  REQUIRE(batches.size() == 1);
  const auto& b = batches[0];
  train(ds, cfg, spec, state);

  // scalar reference: gradient of mean_b [-s_pos + tau * log sum_j exp(s_j / tau)]
  const std::size_t d = 4, B = b.users.size();
  std::vector<std::vector<double>> gu(3, std::vector<double>(d, 0.0)), gi(4, std::vector<double>(d, 0.0));
  std::vector<bool> tu(3, false), ti(4, false);
  for (std::size_t e = 0; e < B; ++e) {
    const auto u = row_vec(before.user_vecs, b.users[e]);
    std::vector<double> s(b.negatives[e].size());
    for (std::size_t j = 0; j < s.size(); ++j)
      s[j] = cos_sim(u, row_vec(before.item_vecs, b.negatives[e][j]), nullptr, nullptr);
    double mx = *std::max_element(s.begin(), s.end()), z = 0;
    for (double x : s) z += std::exp((x - mx) / spec.tau);
    std::vector<std::pair<ItemId, double>> coef{{b.items[e], -1.0 / B}};
    for (std::size_t j = 0; j < s.size(); ++j)
      coef.push_back({b.negatives[e][j], std::exp((s[j] - mx) / spec.tau) / z / B});
    tu[b.users[e]] = true;
    for (auto [it, c] : coef) {
      std::vector<double> du(d), dv(d);
      cos_sim(u, row_vec(before.item_vecs, it), &du, &dv);
      ti[it] = true;
      for (std::size_t k = 0; k < d; ++k) {
        gu[b.users[e]][k] += c * du[k];
        gi[it][k] += c * dv[k];
      }
    }
  }
  // fresh Adam, step 1: m_hat = g, v_hat = g^2
  auto step = [&](double theta, double g) { return theta - cfg.learning_rate * g / (std::abs(g) + 1e-8); };
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t k = 0; k < d; ++k) {
      double th = before.user_vecs(u, k);
      double expect = tu[u] ? step(th, gu[u][k] + cfg.l2_reg * th) : th;
      CHECK(std::abs(state.emb.user_vecs(u, k) - expect) < 1e-10);
    }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      double th = before.item_vecs(i, k);
      double expect = ti[i] ? step(th, gi[i][k] + cfg.l2_reg * th) : th;
      CHECK(std::abs(state.emb.item_vecs(i, k) - expect) < 1e-10);
    }
  CHECK(state.adam.step == 1);
}

TEST_CASE("second Adam step uses bias-corrected moments") {
  EmbeddingTable emb;
  emb.dim = 1;
  emb.user_vecs = Matrix(1, 1, 1.0);
  emb.item_vecs = Matrix(1, 1, 0.0);
  auto adam = AdamState::for_table(emb);
  BatchGradient g;
  g.user_rows = {0};
  g.user_grad = Matrix(1, 1, 0.5);
  g.item_grad = Matrix(0, 1);
  adam_update(emb, adam, g, 0.1);
  g.user_grad(0, 0) = -0.2;
  adam_update(emb, adam, g, 0.1);
  double m = 0.1 * 0.5, v = 0.001 * 0.25, th = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
  m = 0.9 * m + 0.1 * -0.2;
  v = 0.999 * v + 0.001 * 0.04;
  th -= 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(emb.user_vecs(0, 0) == doctest::Approx(th).epsilon(1e-14));
}

TEST_CASE("zero learning rate leaves the table unchanged") {
  auto ds = synthetic::planted({});
  TrainConfig cfg;
  cfg.embedding_dim = 8;
  cfg.epochs = 3;
  cfg.batch_size = 256;
  cfg.learning_rate = 0;
  cfg.n_negatives = 8;
  auto st = init_train_state(ds, cfg);
  auto before = st.emb;
  train(ds, cfg, loss_of(LossKind::Softmax), st);
  CHECK(st.emb == before);
  CHECK(st.epochs_done == 3);
}

TEST_CASE("in-batch mode trains and folds trailing singletons") {
  auto ds = make_dataset({{0, 1}, {1, 2}, {3}}, {{}, {}, {}}, 3, 4);
  TrainConfig cfg;
  cfg.sampling_mode = SamplingMode::InBatch;
  cfg.batch_size = 2;
  cfg.embedding_dim = 4;
  auto batches = epoch_batches(ds, cfg, 1);
  REQUIRE(batches.size() == 2);
  CHECK(batches[1].users.size() == 3);
  for (const auto& b : batches) CHECK(b.negatives.empty());
  cfg.epochs = 2;
  auto [emb, log] = train(ds, cfg, loss_of(LossKind::Softmax));
  CHECK(log.size() == 2);
  CHECK(std::isfinite(log.back().mean_loss));
}

TEST_CASE("epoch batches are deterministic and cover every pair") {
  auto ds = synthetic::planted({});
  TrainConfig cfg;
  cfg.batch_size = 128;
  cfg.n_negatives = 4;
  auto a = epoch_batches(ds, cfg, 3);
  auto b = epoch_batches(ds, cfg, 3);
  auto c = epoch_batches(ds, cfg, 4);
  std::size_t pairs = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].users == b[k].users);
    CHECK(a[k].negatives == b[k].negatives);
    pairs += a[k].users.size();
  }
  CHECK(pairs == ds.n_train_interactions());
  CHECK(a[0].items != c[0].items);
}

TEST_CASE("resuming reproduces an uninterrupted run") {
  auto ds = synthetic::planted({});
  TrainConfig cfg;
  cfg.embedding_dim = 8;
  cfg.batch_size = 256;
  cfg.n_negatives = 8;
  cfg.learning_rate = 0.01;
  cfg.epochs = 4;
  auto spec = loss_of(LossKind::Bilateral);
  auto full = init_train_state(ds, cfg);
  train(ds, cfg, spec, full);
  auto part = init_train_state(ds, cfg);
  auto half = cfg;
  half.epochs = 2;
  train(ds, half, spec, part);
  train(ds, cfg, spec, part);
  CHECK(part.emb == full.emb);
  CHECK(part.adam == full.adam);
}

TEST_CASE("l2 shrinks embedding norms monotonically") {
  auto ds = synthetic::planted({});
  TrainConfig cfg;
  cfg.embedding_dim = 8;
  cfg.batch_size = 256;
  cfg.n_negatives = 8;
  cfg.learning_rate = 0.01;
  cfg.epochs = 5;
  double prev = 1e300;
  for (double l2 : {0.0, 0.1, 1.0, 10.0}) {
    cfg.l2_reg = l2;
    auto [emb, log] = train(ds, cfg, loss_of(LossKind::Softmax));
    double norm = 0;
    for (double x : emb.user_vecs.data()) norm += x * x;
    for (double x : emb.item_vecs.data()) norm += x * x;
    CHECK(norm < prev);
    prev = norm;
  }
}

TEST_CASE("epoch losses trend down on the planted fixture") {
  auto ds = synthetic::planted({});
  TrainConfig cfg;
  cfg.embedding_dim = 16;
  cfg.batch_size = 256;
  cfg.n_negatives = 16;
  cfg.learning_rate = 0.01;
  cfg.epochs = 15;
  for (const auto& spec : every_loss()) {
    auto [emb, log] = train(ds, cfg, spec);
    INFO(to_string(spec.kind), " ", to_string(spec.bsl_form));
    for (std::size_t e = 1; e < log.size(); ++e)
      CHECK(log[e].mean_loss <= log[e - 1].mean_loss + 0.05 * std::abs(log[e - 1].mean_loss));
    CHECK(log.back().mean_loss < log.front().mean_loss);
  }
}

TEST_CASE("planted structure is recovered") {
  synthetic::PlantedSpec pspec;
  auto ds = synthetic::planted(pspec);
  Matrix cluster(ds.n_users, ds.n_items), popular(ds.n_users, ds.n_items);
  for (std::size_t u = 0; u < ds.n_users; ++u)
    for (std::size_t i = 0; i < ds.n_items; ++i) {
      cluster(u, i) = synthetic::same_cluster(pspec, UserId(u), ItemId(i));
      popular(u, i) = double(ds.item_popularity[i]);
    }
  const double oracle_recall = evaluate_scores(cluster, ds, {20}).recall.at(20);
  const double popular_recall = evaluate_scores(popular, ds, {20}).recall.at(20);

  TrainConfig cfg;
  cfg.embedding_dim = 16;
  cfg.n_negatives = 64;
  cfg.epochs = 50;
  cfg.batch_size = 256;
  cfg.learning_rate = 0.01;
  cfg.l2_reg = 0;
  LossSpec spec;
  spec.kind = LossKind::Softmax;
  spec.tau = 0.2;
  auto [emb, log] = train(ds, cfg, spec);
  const double recall = evaluate(emb, ds, {20}).recall.at(20);
  MESSAGE("Recall@20 model=", recall, " cluster oracle=", oracle_recall, " popularity=", popular_recall);
  CHECK(recall >= 0.9 * oracle_recall);
  CHECK(recall >= popular_recall + 0.2);
}

TEST_CASE("non-finite training aborts") {
  auto ds = make_dataset({{0}, {1}}, {{}, {}}, 2, 3);
  TrainConfig cfg;
  cfg.embedding_dim = 2;
  cfg.n_negatives = 1;
  cfg.learning_rate = std::numeric_limits<double>::max();
  cfg.epochs = 5;
  bool thrown = false;
  try {
    train(ds, cfg, loss_of(LossKind::MSE));
  } catch (const Error& e) {
    thrown = true;
    CHECK(e.code() == ErrorCode::Numeric);
  }
  CHECK(thrown);
}

}
