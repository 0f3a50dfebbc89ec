#include "bslrec/bslrec.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <new>
#include <string>

#include "bslrec/checkpoint.hpp"
#include "bslrec/config.hpp"
#include "bslrec/dataset.hpp"
#include "bslrec/dro.hpp"
#include "bslrec/experiment.hpp"
#include "bslrec/losses.hpp"
#include "bslrec/sampling.hpp"

struct bsl_dataset {
  bslrec::Dataset ds;
};
struct bsl_config {
  bslrec::ExperimentConfig cfg;
};
struct bsl_model {
  bslrec::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

bsl_status to_status(bslrec::ErrorCode c) {
  switch (c) {
    case bslrec::ErrorCode::InvalidArgument: return BSL_ERR_INVALID_ARGUMENT;
    case bslrec::ErrorCode::Io: return BSL_ERR_IO;
    case bslrec::ErrorCode::Parse: return BSL_ERR_PARSE;
    case bslrec::ErrorCode::Config: return BSL_ERR_CONFIG;
    case bslrec::ErrorCode::Numeric: return BSL_ERR_NUMERIC;
    case bslrec::ErrorCode::Corrupt: return BSL_ERR_CORRUPT;
    case bslrec::ErrorCode::Mismatch: return BSL_ERR_MISMATCH;
  }
  return BSL_ERR_INTERNAL;
}

template <class F>
bsl_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return BSL_OK;
  } catch (const bslrec::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return BSL_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BSL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BSL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return BSL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) bslrec::fail(bslrec::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class T>
std::vector<T> to_vec(const T* p, std::size_t n) {
  return p ? std::vector<T>(p, p + n) : std::vector<T>{};
}

bslrec::ExperimentConfig cfg_or_default(const bsl_config* cfg) {
  return cfg ? cfg->cfg : bslrec::ExperimentConfig{};
}

}  // namespace

extern "C" {

const char* bsl_version(void) { return bslrec::kArtifactVersion; }
const char* bsl_last_error(void) { return g_last_error.c_str(); }

const char* bsl_status_name(bsl_status s) {
  switch (s) {
    case BSL_OK: return "ok";
    case BSL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BSL_ERR_IO: return "i/o error";
    case BSL_ERR_PARSE: return "parse error";
    case BSL_ERR_CONFIG: return "configuration error";
    case BSL_ERR_NUMERIC: return "numerical failure";
    case BSL_ERR_CORRUPT: return "corrupt file";
    case BSL_ERR_MISMATCH: return "identity mismatch";
    case BSL_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void bsl_string_free(char* s) { std::free(s); }

bsl_status bsl_dataset_load(const char* train_path, const char* test_path, int remap, bsl_dataset** out) {
  return guard([&] {
    need(train_path, "train_path");
    need(test_path, "test_path");
    need(out, "out");
    bslrec::LoadOptions lo;
    lo.remap = remap != 0;
    *out = new bsl_dataset{bslrec::load_dataset(train_path, test_path, lo)};
  });
}

bsl_status bsl_dataset_save(const bsl_dataset* ds, const char* train_path, const char* test_path) {
  return guard([&] {
    need(ds, "dataset");
    need(train_path, "train_path");
    need(test_path, "test_path");
    bslrec::save_dataset(ds->ds, train_path, test_path);
  });
}

bsl_status bsl_dataset_shape(const bsl_dataset* ds, size_t* n_users, size_t* n_items, size_t* n_train,
                             size_t* n_test) {
  return guard([&] {
    need(ds, "dataset");
    if (n_users) *n_users = ds->ds.n_users;
    if (n_items) *n_items = ds->ds.n_items;
    if (n_train) *n_train = ds->ds.n_train_interactions();
    if (n_test) *n_test = ds->ds.n_test_interactions();
  });
}

bsl_status bsl_dataset_popularity(const bsl_dataset* ds, size_t* out, size_t n) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    bslrec::require(n == ds->ds.n_items, "popularity buffer must hold n_items entries");
    std::copy(ds->ds.item_popularity.begin(), ds->ds.item_popularity.end(), out);
  });
}

bsl_status bsl_dataset_groups(const bsl_dataset* ds, size_t n_groups, size_t* out, size_t n) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    bslrec::require(n == ds->ds.n_items, "group buffer must hold n_items entries");
    auto g = bslrec::popularity_groups(ds->ds, n_groups);
    std::copy(g.begin(), g.end(), out);
  });
}

bsl_status bsl_dataset_contaminate(const bsl_dataset* ds, double ratio, uint64_t seed, bsl_dataset** out,
                                   size_t* injected) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    auto res = bslrec::contaminate_positives(ds->ds, ratio, seed);
    if (injected) *injected = res.injected;
    *out = new bsl_dataset{std::move(res.dataset)};
  });
}

void bsl_dataset_free(bsl_dataset* ds) { delete ds; }

bsl_status bsl_ingest(const char* train_path, const char* test_path, int remap, const char* out_dir) {
  return guard([&] {
    need(train_path, "train_path");
    need(test_path, "test_path");
    need(out_dir, "out_dir");
    bslrec::run_ingest(train_path, test_path, remap != 0, out_dir);
  });
}

bsl_status bsl_generate(const char* kind, uint64_t seed, const char* out_dir) {
  return guard([&] {
    need(kind, "kind");
    need(out_dir, "out_dir");
    bslrec::run_generate(kind, seed, out_dir);
  });
}

bsl_status bsl_config_new(bsl_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new bsl_config{};
  });
}

bsl_status bsl_config_load(const char* path, bsl_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new bsl_config{bslrec::load_config(path)};
  });
}

bsl_status bsl_config_set(bsl_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    bslrec::set_config_value(cfg->cfg, key, value);
  });
}

bsl_status bsl_config_get(const bsl_config* cfg, const char* key, char** value) {
  return guard([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    *value = dup_string(bslrec::get_config_value(cfg->cfg, key));
  });
}

bsl_status bsl_config_text(const bsl_config* cfg, char** text) {
  return guard([&] {
    need(cfg, "config");
    need(text, "text");
    *text = dup_string(bslrec::to_config_text(cfg->cfg));
  });
}

size_t bsl_config_key_count(void) { return bslrec::config_keys().size(); }

const char* bsl_config_key_name(size_t index) {
  const auto& keys = bslrec::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

void bsl_config_free(bsl_config* cfg) { delete cfg; }

bsl_status bsl_model_load(const char* checkpoint_path, bsl_model** out) {
  return guard([&] {
    need(checkpoint_path, "checkpoint_path");
    need(out, "out");
    *out = new bsl_model{bslrec::load_checkpoint(checkpoint_path)};
  });
}

bsl_status bsl_model_save(const bsl_model* m, const char* checkpoint_path) {
  return guard([&] {
    need(m, "model");
    need(checkpoint_path, "checkpoint_path");
    bslrec::save_checkpoint(m->ckpt, checkpoint_path);
  });
}

bsl_status bsl_model_shape(const bsl_model* m, size_t* n_users, size_t* n_items, size_t* dim,
                           uint64_t* epoch) {
  return guard([&] {
    need(m, "model");
    if (n_users) *n_users = m->ckpt.emb.n_users();
    if (n_items) *n_items = m->ckpt.emb.n_items();
    if (dim) *dim = m->ckpt.emb.dim;
    if (epoch) *epoch = m->ckpt.epoch;
  });
}

bsl_status bsl_model_score_all(const bsl_model* m, uint32_t user, double* out, size_t n) {
  return guard([&] {
    need(m, "model");
    need(out, "out");
    bslrec::require(n == m->ckpt.emb.n_items(), "score buffer must hold n_items entries");
    auto s = bslrec::score_all_items(m->ckpt.emb, user);
    std::copy(s.begin(), s.end(), out);
  });
}

void bsl_model_free(bsl_model* m) { delete m; }

bsl_status bsl_run_train(const bsl_config* cfg, const char* out_dir, int resume, unsigned threads,
                         int verbose) {
  return guard([&] {
    need(cfg, "config");
    need(out_dir, "out_dir");
    bslrec::RunOptions ro;
    ro.threads = threads;
    ro.resume = resume != 0;
    if (verbose) ro.progress = &std::cerr;
    bslrec::run_train(cfg->cfg, out_dir, ro);
  });
}

bsl_status bsl_run_evaluate(const bsl_model* m, const bsl_dataset* ds, const size_t* ks, size_t n_ks,
                            const bsl_config* cfg, unsigned threads, char** json_out, const char* csv_path) {
  return guard([&] {
    need(m, "model");
    need(ds, "dataset");
    need(ks, "ks");
    auto c = cfg_or_default(cfg);
    c.ks = to_vec(ks, n_ks);
    auto rep = bslrec::run_evaluate(m->ckpt.emb, ds->ds, c.ks, bslrec::eval_options(c, threads));
    std::string json = bslrec::report_to_json(rep);
    if (csv_path) bslrec::write_text_file(csv_path, bslrec::report_to_csv(rep));
    if (json_out) *json_out = dup_string(json);
  });
}

bsl_status bsl_run_sweep(const bsl_config* cfg, const bsl_sweep_spec* sweep, unsigned threads, int verbose,
                         const char* csv_path) {
  return guard([&] {
    need(cfg, "config");
    need(sweep, "sweep");
    need(csv_path, "csv_path");
    bslrec::SweepSpec s;
    s.r_noise = to_vec(sweep->r_noise, sweep->n_r_noise);
    s.n_negatives = to_vec(sweep->n_negatives, sweep->n_n_negatives);
    s.pos_noise = to_vec(sweep->pos_noise, sweep->n_pos_noise);
    s.tau_grid = to_vec(sweep->tau_grid, sweep->n_tau_grid);
    bslrec::RunOptions ro;
    ro.threads = threads;
    if (verbose) ro.progress = &std::cerr;
    auto ds = bslrec::load_dataset(cfg->cfg.train_path, cfg->cfg.test_path);
    auto rows = bslrec::run_sweep(ds, cfg->cfg, s, ro);
    bslrec::write_text_file(csv_path, bslrec::sweep_to_csv(rows, cfg->cfg.ks));
  });
}

bsl_status bsl_run_dro_diagnose(const bsl_model* m, const bsl_dataset* ds, const bsl_config* cfg,
                                const double* taus, size_t n_taus, size_t n_batches, const char* out_dir) {
  return guard([&] {
    need(m, "model");
    need(ds, "dataset");
    need(taus, "taus");
    need(out_dir, "out_dir");
    auto c = cfg_or_default(cfg);
    auto d = bslrec::dro_diagnose(m->ckpt.emb, ds->ds, c.train, to_vec(taus, n_taus), n_batches);
    bslrec::write_dro_diagnosis(d, out_dir);
  });
}

bsl_status bsl_run_fairness_report(const bsl_model* first, const bsl_model* second, const bsl_dataset* ds,
                                   const bsl_config* cfg, size_t n_groups, unsigned threads, char** json_out,
                                   const char* csv_path) {
  return guard([&] {
    need(first, "model");
    need(ds, "dataset");
    std::vector<const bslrec::EmbeddingTable*> models{&first->ckpt.emb};
    if (second) models.push_back(&second->ckpt.emb);
    auto reps = bslrec::fairness_report(models, ds->ds, n_groups,
                                        bslrec::eval_options(cfg_or_default(cfg), threads));
    std::string json = bslrec::fairness_to_json(reps);
    if (csv_path) bslrec::write_text_file(csv_path, bslrec::fairness_to_csv(reps));
    if (json_out) *json_out = dup_string(json);
  });
}

bsl_status bsl_loss_eval(bsl_loss_kind kind, const double* pos, const double* neg, size_t batch, size_t n_neg,
                         double tau, double tau_pos, double tau_neg, double balance, const size_t* groups,
                         double* value, double* grad_pos, double* grad_neg) {
  return guard([&] {
    need(pos, "pos");
    need(neg, "neg");
    need(value, "value");
    bslrec::ScoreBatch b;
    b.pos.assign(pos, pos + batch);
    b.neg = bslrec::Matrix(batch, n_neg);
    std::copy(neg, neg + batch * n_neg, b.neg.data().begin());
    std::vector<std::size_t> g = to_vec(groups, groups ? batch : 0);
    bslrec::LossResult r;
    switch (kind) {
      case BSL_LOSS_BPR: r = bslrec::bpr_loss(b); break;
      case BSL_LOSS_BCE: r = bslrec::bce_loss(b, balance); break;
      case BSL_LOSS_MSE: r = bslrec::mse_loss(b, balance); break;
      case BSL_LOSS_SL: r = bslrec::softmax_loss(b, tau); break;
      case BSL_LOSS_BSL_PSEUDOCODE:
        r = bslrec::bsl_loss(b, tau_pos, tau_neg, bslrec::BslForm::Pseudocode);
        break;
      case BSL_LOSS_BSL_CANONICAL:
        r = bslrec::bsl_loss(b, tau_pos, tau_neg, bslrec::BslForm::Canonical, g);
        break;
      case BSL_LOSS_SL_NO_VARIANCE: r = bslrec::softmax_loss_no_variance(b, tau); break;
      default: bslrec::fail(bslrec::ErrorCode::InvalidArgument, "unknown loss kind");
    }
    *value = r.value;
    if (grad_pos) std::copy(r.grad_pos.begin(), r.grad_pos.end(), grad_pos);
    if (grad_neg) std::copy(r.grad_neg.data().begin(), r.grad_neg.data().end(), grad_neg);
  });
}

bsl_status bsl_dro_worst_case(const double* scores, const double* base, size_t n, double tau, double* weights,
                              double* kl_radius) {
  return guard([&] {
    need(scores, "scores");
    need(base, "base");
    auto w = bslrec::dro::worst_case_weights({scores, n}, {base, n}, tau);
    if (weights) std::copy(w.weights.begin(), w.weights.end(), weights);
    if (kl_radius) *kl_radius = w.kl_radius;
  });
}

bsl_status bsl_dro_dual_value(const double* scores, const double* base, size_t n, double tau, double eta,
                              double* value) {
  return guard([&] {
    need(scores, "scores");
    need(base, "base");
    need(value, "value");
    *value = bslrec::dro::dual_value({scores, n}, {base, n}, tau, eta);
  });
}

bsl_status bsl_dro_kl_ball_sup(const double* scores, const double* base, size_t n, double eta, double* value,
                               double* argmax) {
  return guard([&] {
    need(scores, "scores");
    need(base, "base");
    need(value, "value");
    auto s = bslrec::dro::kl_ball_sup({scores, n}, {base, n}, eta);
    *value = s.value;
    if (argmax) std::copy(s.argmax.begin(), s.argmax.end(), argmax);
  });
}

bsl_status bsl_dro_tau_star(double variance, double eta, double* tau) {
  return guard([&] {
    need(tau, "tau");
    *tau = bslrec::dro::tau_star(variance, eta);
  });
}

bsl_status bsl_dro_estimate_eta(const double* scores, const double* base, size_t n, double tau, double* eta) {
  return guard([&] {
    need(scores, "scores");
    need(base, "base");
    need(eta, "eta");
    *eta = bslrec::dro::estimate_eta({scores, n}, {base, n}, tau);
  });
}

}  // extern "C"
