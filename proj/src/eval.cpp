#include "bslrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bslrec/random.hpp"

namespace bslrec {

namespace {

// Neumaier-compensated sum, accumulated in a fixed order so the result does
// not depend on thread count.
class Accumulator {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct UserResult {
  bool evaluated = false;
  std::vector<double> recall;  // parallel to ks
  std::vector<double> ndcg;
  std::vector<double> groups;
  std::size_t var_n = 0;
  double var_mean = 0.0;
  double var_m2 = 0.0;
};

double idcg(std::size_t k, std::size_t n_test) {
  double s = 0.0;
  for (std::size_t r = 1; r <= std::min(k, n_test); ++r) s += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  return s;
}

using ScoreFn = std::function<void(UserId, std::vector<double>&)>;

EvalReport run(const ScoreFn& score_fn, const Dataset& ds, const std::vector<std::size_t>& ks,
               const EvalOptions& opts) {
  require(!ks.empty(), "evaluate: ks must be nonempty");
  for (auto k : ks) require(k >= 1, "evaluate: every K must be >= 1");
  std::vector<std::size_t> sorted_ks = ks;
  std::sort(sorted_ks.begin(), sorted_ks.end());
  sorted_ks.erase(std::unique(sorted_ks.begin(), sorted_ks.end()), sorted_ks.end());

  std::size_t n_eval = 0;
  for (const auto& t : ds.test_pos) n_eval += t.empty() ? 0 : 1;
  if (n_eval == 0) fail(ErrorCode::InvalidArgument, "evaluate: no user has test items");

  const std::size_t n_groups = std::max<std::size_t>(1, std::min(opts.n_groups, ds.n_items));
  const auto group_of = popularity_groups(ds, n_groups);
  const std::size_t max_k = std::max(sorted_ks.back(), opts.group_k);

  std::vector<UserResult> results(ds.n_users);
  auto work = [&](std::size_t u) {
    const auto& test = ds.test_pos[u];
    if (test.empty()) return;
    UserResult& res = results[u];
    res.evaluated = true;
    std::vector<double> scores;
    score_fn(static_cast<UserId>(u), scores);

    std::vector<ItemId> cand;
    cand.reserve(ds.n_items);
    const auto& train = ds.train_pos[u];
    for (std::size_t i = 0, t = 0; i < ds.n_items; ++i) {
      while (t < train.size() && train[t] < i) ++t;
      if (t < train.size() && train[t] == i) continue;
      cand.push_back(static_cast<ItemId>(i));
    }
    auto better = [&](ItemId a, ItemId b) {
      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };
    const std::size_t top = std::min(max_k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(top), cand.end(), better);

    res.recall.assign(sorted_ks.size(), 0.0);
    res.ndcg.assign(sorted_ks.size(), 0.0);
    res.groups.assign(n_groups, 0.0);
    const double group_idcg = idcg(opts.group_k, test.size());
    for (std::size_t r = 0; r < top; ++r) {
      if (!std::binary_search(test.begin(), test.end(), cand[r])) continue;
      const double gain = 1.0 / std::log2(static_cast<double>(r) + 2.0);
      for (std::size_t k = 0; k < sorted_ks.size(); ++k) {
        if (r < sorted_ks[k]) {
          res.recall[k] += 1.0;
          res.ndcg[k] += gain;
        }
      }
      if (r < opts.group_k) res.groups[group_of[cand[r]]] += gain / group_idcg;
    }
    for (std::size_t k = 0; k < sorted_ks.size(); ++k) {
      res.recall[k] /= static_cast<double>(test.size());
      res.ndcg[k] /= idcg(sorted_ks[k], test.size());
    }

    // Variance probe over non-interacted items, Welford-accumulated.
    const std::size_t n_free = ds.n_items - train.size() - test.size();
    if (opts.var_samples > 0 && n_free > 0) {
      Rng rng = make_rng(opts.seed, {0x5A5AULL, u});
      std::uniform_int_distribution<std::size_t> pick(0, ds.n_items - 1);
      for (std::size_t s = 0; s < opts.var_samples;) {
        auto i = static_cast<ItemId>(pick(rng));
        if (std::binary_search(train.begin(), train.end(), i) ||
            std::binary_search(test.begin(), test.end(), i))
          continue;
        ++s;
        ++res.var_n;
        double delta = scores[i] - res.var_mean;
        res.var_mean += delta / static_cast<double>(res.var_n);
        res.var_m2 += delta * (scores[i] - res.var_mean);
      }
    }
  };

  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1) {
    for (std::size_t u = 0; u < ds.n_users; ++u) work(u);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t u = t; u < ds.n_users; u += threads) work(u);
      });
    }
    for (auto& th : pool) th.join();
  }

  EvalReport rep;
  rep.group_k = opts.group_k;
  rep.n_eval_users = n_eval;
  std::vector<Accumulator> rec(sorted_ks.size()), nd(sorted_ks.size()), grp(n_groups);
  Accumulator var_sum;
  std::size_t var_users = 0;
  for (const auto& res : results) {
    if (!res.evaluated) continue;
    for (std::size_t k = 0; k < sorted_ks.size(); ++k) {
      rec[k].add(res.recall[k]);
      nd[k].add(res.ndcg[k]);
    }
    for (std::size_t g = 0; g < n_groups; ++g) grp[g].add(res.groups[g]);
    if (res.var_n > 0) {
      var_sum.add(res.var_m2 / static_cast<double>(res.var_n));
      ++var_users;
    }
  }
  const double denom = static_cast<double>(n_eval);
  for (std::size_t k = 0; k < sorted_ks.size(); ++k) {
    rep.recall[sorted_ks[k]] = rec[k].value() / denom;
    rep.ndcg[sorted_ks[k]] = nd[k].value() / denom;
  }
  rep.group_ndcg.resize(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) rep.group_ndcg[g] = grp[g].value() / denom;
  rep.neg_score_variance = var_users > 0 ? var_sum.value() / static_cast<double>(var_users) : 0.0;
  return rep;
}

}  // namespace

EvalReport evaluate(const EmbeddingTable& emb, const Dataset& ds, const std::vector<std::size_t>& ks,
                    const EvalOptions& opts) {
  require(emb.n_users() == ds.n_users && emb.n_items() == ds.n_items,
          "evaluate: embedding table does not match dataset");
  return run([&](UserId u, std::vector<double>& out) { out = score_all_items(emb, u, opts.score_mode); },
             ds, ks, opts);
}

EvalReport evaluate_scores(const Matrix& scores, const Dataset& ds,
                           const std::vector<std::size_t>& ks, const EvalOptions& opts) {
  require(scores.rows() == ds.n_users && scores.cols() == ds.n_items,
          "evaluate_scores: score matrix does not match dataset");
  return run(
      [&](UserId u, std::vector<double>& out) {
        auto row = scores.row(u);
        out.assign(row.begin(), row.end());
      },
      ds, ks, opts);
}

double group_share(const EvalReport& r, std::size_t first, std::size_t last) {
  double total = std::accumulate(r.group_ndcg.begin(), r.group_ndcg.end(), 0.0);
  if (total <= 0) return 0.0;
  double part = 0.0;
  for (std::size_t g = first; g < std::min(last, r.group_ndcg.size()); ++g) part += r.group_ndcg[g];
  return part / total;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : r.recall) j["recall"][std::to_string(k)] = v;
  for (const auto& [k, v] : r.ndcg) j["ndcg"][std::to_string(k)] = v;
  j["group_k"] = r.group_k;
  j["group_ndcg"] = r.group_ndcg;
  j["neg_score_variance"] = r.neg_score_variance;
  j["n_eval_users"] = r.n_eval_users;
  return j.dump(2);
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "metric,k,group,value\n";
  for (const auto& [k, v] : r.recall) out << "recall," << k << ",," << v << "\n";
  for (const auto& [k, v] : r.ndcg) out << "ndcg," << k << ",," << v << "\n";
  for (std::size_t g = 0; g < r.group_ndcg.size(); ++g)
    out << "group_ndcg," << r.group_k << "," << g << "," << r.group_ndcg[g] << "\n";
  out << "neg_score_variance,,," << r.neg_score_variance << "\n";
  return out.str();
}

}  // namespace bslrec
