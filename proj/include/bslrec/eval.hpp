#pragma once

#include <map>
#include <string>
#include <vector>

#include "bslrec/config.hpp"
#include "bslrec/dataset.hpp"
#include "bslrec/model.hpp"

namespace bslrec {

struct EvalOptions {
  std::size_t n_groups = 10;
  std::size_t group_k = 20;
  std::size_t var_samples = 100;  // non-interacted items per user for the variance probe
  std::uint64_t seed = 0;
  unsigned threads = 1;
  ScoreMode score_mode = ScoreMode::Cosine;
};

struct EvalReport {
  std::map<std::size_t, double> recall;
  std::map<std::size_t, double> ndcg;
  std::size_t group_k = 20;
  // Mean over users of the NDCG@group_k contribution of hits in each
  // popularity group (0 = least popular). Sums to ndcg at group_k.
  std::vector<double> group_ndcg;
  double neg_score_variance = 0.0;  // mean over users of Var of sampled non-interacted scores
  std::size_t n_eval_users = 0;
};

// Full-ranking evaluation over users with nonempty test sets. Training
// positives are excluded from the ranking; ties break by ascending item id.
EvalReport evaluate(const EmbeddingTable& emb, const Dataset& ds, const std::vector<std::size_t>& ks,
                    const EvalOptions& opts = {});

// Same metrics from precomputed scores (one row per user, n_items wide).
EvalReport evaluate_scores(const Matrix& scores, const Dataset& ds,
                           const std::vector<std::size_t>& ks, const EvalOptions& opts = {});

// Share of the total group NDCG falling in groups [first, last).
double group_share(const EvalReport& r, std::size_t first, std::size_t last);

std::string report_to_json(const EvalReport& r);
// Rows: metric,k,group,value. Group rows use metric "group_ndcg".
std::string report_to_csv(const EvalReport& r);

}  // namespace bslrec
