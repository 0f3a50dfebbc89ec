#include "bslrec/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bslrec/random.hpp"
#include "bslrec/sampling.hpp"
#include "bslrec/synthetic.hpp"

namespace bslrec {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open: " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  for (const auto& key : config_keys()) j[key] = get_config_value(cfg, key);
  return j;
}

std::size_t primary_k(const ExperimentConfig& cfg) {
  return std::find(cfg.ks.begin(), cfg.ks.end(), std::size_t{20}) != cfg.ks.end()
             ? 20
             : *std::max_element(cfg.ks.begin(), cfg.ks.end());
}

void progress(const RunOptions& opts, const std::string& line) {
  if (opts.progress) *opts.progress << line << '\n';
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write: " + tmp.string());
    out << text;
    if (!out) fail(ErrorCode::Io, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

EvalOptions eval_options(const ExperimentConfig& cfg, unsigned threads) {
  EvalOptions o;
  o.n_groups = cfg.n_groups;
  o.group_k = primary_k(cfg);
  o.var_samples = cfg.var_samples;
  o.seed = cfg.train.rng_seed;
  o.threads = threads;
  o.score_mode = cfg.score_mode;
  return o;
}

Dataset prepare_training_data(const Dataset& ds, const TrainConfig& cfg) {
  if (cfg.pos_noise_ratio <= 0) return ds;
  return contaminate_positives(ds, cfg.pos_noise_ratio, cfg.rng_seed).dataset;
}

std::string metric_header(const std::vector<std::size_t>& ks) {
  std::string h;
  for (auto k : ks) h += ",recall@" + std::to_string(k);
  for (auto k : ks) h += ",ndcg@" + std::to_string(k);
  return h;
}

std::string metric_cells(const EvalReport& r, const std::vector<std::size_t>& ks) {
  std::string s;
  for (auto k : ks) s += "," + fmt(r.recall.at(k));
  for (auto k : ks) s += "," + fmt(r.ndcg.at(k));
  return s;
}

TrainRunResult run_train(const ExperimentConfig& cfg, const fs::path& out_dir, const RunOptions& opts) {
  validate(cfg.train);
  validate(cfg.loss);
  if (cfg.ks.empty()) fail(ErrorCode::Config, "ks must list at least one cutoff");
  if (cfg.train_path.empty() || cfg.test_path.empty())
    fail(ErrorCode::Config, "train_path and test_path are required");

  const std::uint64_t train_hash = hash_file(cfg.train_path);
  const std::uint64_t test_hash = hash_file(cfg.test_path);
  const fs::path manifest_path = out_dir / "manifest.json";

  json manifest;
  TrainState state;
  std::string epochs_csv;
  std::string timing_csv;
  TrainRunResult result;

  Dataset ds = load_dataset(cfg.train_path, cfg.test_path);
  Dataset train_ds = prepare_training_data(ds, cfg.train);

  if (opts.resume) {
    if (!fs::exists(manifest_path)) fail(ErrorCode::Io, "resume: no manifest in " + out_dir.string());
    manifest = json::parse(read_text(manifest_path));
    if (manifest["datasets"]["train"]["fnv1a64"] != hex64(train_hash) ||
        manifest["datasets"]["test"]["fnv1a64"] != hex64(test_hash))
      fail(ErrorCode::Mismatch, "resume: dataset hash differs from manifest in " + out_dir.string());
    json old_cfg = manifest["config"];
    json new_cfg = config_json(cfg);
    old_cfg.erase("epochs");
    new_cfg.erase("epochs");
    if (old_cfg != new_cfg) fail(ErrorCode::Mismatch, "resume: configuration differs from manifest");
    Checkpoint ck = load_checkpoint(out_dir / "last.ckpt");
    state.emb = std::move(ck.emb);
    state.adam = std::move(ck.adam);
    state.epochs_done = ck.epoch;
    // Keep only rows up to the checkpointed epoch.
    std::istringstream old(read_text(out_dir / "epochs.csv"));
    std::string line;
    std::getline(old, line);
    epochs_csv = line + "\n";
    while (std::getline(old, line))
      if (std::stoull(line.substr(0, line.find(','))) <= ck.epoch) epochs_csv += line + "\n";
    std::istringstream oldt(read_text(out_dir / "timing.csv"));
    std::getline(oldt, line);
    timing_csv = line + "\n";
    while (std::getline(oldt, line))
      if (std::stoull(line.substr(0, line.find(','))) <= ck.epoch) timing_csv += line + "\n";
    result.best_epoch = manifest.value("best_epoch", std::size_t{0});
    result.best_ndcg = manifest.value("best_ndcg", -1.0);
  } else {
    fs::create_directories(out_dir);
    state = init_train_state(train_ds, cfg.train);
    manifest["artifact_version"] = kArtifactVersion;
    manifest["created_utc"] = utc_now();
    manifest["rng_seed"] = cfg.train.rng_seed;
    manifest["config"] = config_json(cfg);
    manifest["datasets"]["train"] = {{"path", cfg.train_path.string()}, {"fnv1a64", hex64(train_hash)}};
    manifest["datasets"]["test"] = {{"path", cfg.test_path.string()}, {"fnv1a64", hex64(test_hash)}};
    epochs_csv = "epoch,mean_loss" + metric_header(cfg.ks) + "\n";
    timing_csv = "epoch,seconds\n";
  }
  manifest["config"] = config_json(cfg);
  manifest["status"] = "running";
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  write_text_file(out_dir / "config.txt", to_config_text(cfg));

  const EvalOptions eopts = eval_options(cfg, opts.threads);
  const std::size_t key_k = primary_k(cfg);
  auto wall0 = std::chrono::steady_clock::now();

  auto on_epoch = [&](const EpochStats& st, const TrainState& s) {
    std::string row = std::to_string(st.epoch) + "," + fmt(st.mean_loss);
    const bool do_eval =
        (cfg.eval_every > 0 && st.epoch % cfg.eval_every == 0) || st.epoch == cfg.train.epochs;
    if (do_eval) {
      EvalReport rep = evaluate(s.emb, train_ds, cfg.ks, eopts);
      row += metric_cells(rep, cfg.ks);
      const double score = rep.ndcg.at(key_k);
      if (score > result.best_ndcg) {
        result.best_ndcg = score;
        result.best_epoch = st.epoch;
        save_checkpoint({cfg.train.rng_seed, st.epoch, s.emb, s.adam}, out_dir / "best.ckpt");
      }
      result.last_eval = rep;
      progress(opts, "epoch " + std::to_string(st.epoch) + " loss " + fmt(st.mean_loss) + " ndcg@" +
                         std::to_string(key_k) + " " + fmt(score));
    } else {
      for (std::size_t k = 0; k < 2 * cfg.ks.size(); ++k) row += ",";
      progress(opts, "epoch " + std::to_string(st.epoch) + " loss " + fmt(st.mean_loss));
    }
    epochs_csv += row + "\n";
    timing_csv += std::to_string(st.epoch) + "," + fmt(st.seconds) + "\n";
    save_checkpoint({cfg.train.rng_seed, st.epoch, s.emb, s.adam}, out_dir / "last.ckpt");
    write_text_file(out_dir / "epochs.csv", epochs_csv);
    write_text_file(out_dir / "timing.csv", timing_csv);
  };

  result.log = train(train_ds, cfg.train, cfg.loss, state, on_epoch);
  if (state.epochs_done == 0 || result.log.empty()) {
    // Nothing left to run; still leave a checkpoint for the current state.
    save_checkpoint({cfg.train.rng_seed, state.epochs_done, state.emb, state.adam}, out_dir / "last.ckpt");
    write_text_file(out_dir / "epochs.csv", epochs_csv);
    write_text_file(out_dir / "timing.csv", timing_csv);
  }

  manifest["status"] = "complete";
  manifest["epochs_completed"] = state.epochs_done;
  manifest["best_epoch"] = result.best_epoch;
  manifest["best_ndcg"] = result.best_ndcg;
  manifest["wall_seconds"] =
      manifest.value("wall_seconds", 0.0) +
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  return result;
}

EvalReport run_evaluate(const EmbeddingTable& emb, const Dataset& ds, const std::vector<std::size_t>& ks,
                        const EvalOptions& opts) {
  return evaluate(emb, ds, ks, opts);
}

bool loss_uses_tau_grid(LossKind kind) {
  return kind == LossKind::Softmax || kind == LossKind::Bilateral || kind == LossKind::SoftmaxNoVariance;
}

void apply_grid_tau(LossSpec& spec, double tau) {
  if (spec.kind == LossKind::Bilateral)
    spec.tau_pos = tau;
  else
    spec.tau = tau;
}

double negative_temperature(const LossSpec& spec) {
  return spec.kind == LossKind::Bilateral ? spec.tau_neg : spec.tau;
}

std::vector<double> sample_eta(const EmbeddingTable& emb, const Dataset& ds, const TrainConfig& cfg,
                               double tau, std::size_t max_users, std::uint64_t seed) {
  SamplerState sampler = SamplerState::uniform(make_rng(seed, {0xE7AULL})(), cfg.r_noise);
  std::vector<UserId> users;
  for (std::size_t u = 0; u < ds.n_users; ++u)
    if (!ds.train_pos[u].empty()) users.push_back(static_cast<UserId>(u));
  Rng rng = make_rng(seed, {0xE7BULL});
  std::shuffle(users.begin(), users.end(), rng);
  if (users.size() > max_users) users.resize(max_users);
  const std::size_t n = std::max<std::size_t>(cfg.n_negatives, 2);
  std::vector<double> out;
  for (UserId u : users) {
    auto negs = sample_negatives(sampler, ds, u, n);
    auto sc = cosine_score(emb, u, negs);
    out.push_back(dro::estimate_eta(sc.scores, dro::uniform_base(n), tau));
  }
  return out;
}

std::vector<SweepRow> run_sweep(const Dataset& ds, const ExperimentConfig& cfg, const SweepSpec& sweep,
                                const RunOptions& opts) {
  if (sweep.r_noise.empty() && sweep.n_negatives.empty() && sweep.pos_noise.empty())
    fail(ErrorCode::InvalidArgument, "sweep: no axis to sweep");
  const auto r_axis = sweep.r_noise.empty() ? std::vector<double>{cfg.train.r_noise} : sweep.r_noise;
  const auto n_axis =
      sweep.n_negatives.empty() ? std::vector<std::size_t>{cfg.train.n_negatives} : sweep.n_negatives;
  const auto p_axis = sweep.pos_noise.empty() ? std::vector<double>{cfg.train.pos_noise_ratio} : sweep.pos_noise;
  std::vector<double> taus = sweep.tau_grid.empty() ? cfg.tau_grid : sweep.tau_grid;
  if (!loss_uses_tau_grid(cfg.loss.kind) || taus.empty()) taus = {cfg.loss.kind == LossKind::Bilateral ? cfg.loss.tau_pos : cfg.loss.tau};
  for (double r : r_axis) require(r >= 0, "sweep: r_noise values must be >= 0");

  struct Job {
    std::size_t cell;
    ExperimentConfig cfg;
    std::optional<EvalReport> report;
    double eta_mean = 0.0;
    double eta_median = 0.0;
  };
  std::vector<SweepRow> rows;
  std::vector<Job> jobs;
  for (double r : r_axis)
    for (std::size_t n : n_axis)
      for (double p : p_axis) {
        SweepRow row;
        row.r_noise = r;
        row.n_negatives = n;
        row.pos_noise = p;
        row.loss = cfg.loss.kind;
        for (double t : taus) {
          ExperimentConfig c = cfg;
          c.train.r_noise = r;
          c.train.n_negatives = n;
          c.train.pos_noise_ratio = p;
          apply_grid_tau(c.loss, t);
          jobs.push_back({rows.size(), std::move(c), std::nullopt});
        }
        rows.push_back(row);
      }

  std::mutex log_mu;
  auto run_job = [&](Job& job) {
    Dataset train_ds = prepare_training_data(ds, job.cfg.train);
    auto [emb, log] = train(train_ds, job.cfg.train, job.cfg.loss);
    job.report = evaluate(emb, train_ds, job.cfg.ks, eval_options(job.cfg));
    auto etas = sample_eta(emb, train_ds, job.cfg.train, negative_temperature(job.cfg.loss), 256,
                           job.cfg.train.rng_seed);
    if (!etas.empty()) {
      job.eta_mean = std::accumulate(etas.begin(), etas.end(), 0.0) / static_cast<double>(etas.size());
      std::sort(etas.begin(), etas.end());
      const std::size_t m = etas.size() / 2;
      job.eta_median = etas.size() % 2 ? etas[m] : 0.5 * (etas[m - 1] + etas[m]);
    }
    std::lock_guard lock(log_mu);
    progress(opts, "cell r_noise=" + fmt(job.cfg.train.r_noise) +
                       " n_negatives=" + std::to_string(job.cfg.train.n_negatives) +
                       " pos_noise=" + fmt(job.cfg.train.pos_noise_ratio) + " done");
  };
  const unsigned threads = std::max(1u, opts.threads);
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    auto body = [&, t] {
      try {
        for (std::size_t j = t; j < jobs.size(); j += threads) run_job(jobs[j]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    };
    if (threads == 1)
      body();
    else
      pool.emplace_back(body);
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t key_k = primary_k(cfg);
  std::vector<const Job*> best(rows.size(), nullptr);
  for (const auto& job : jobs) {
    const Job*& b = best[job.cell];
    if (!b || job.report->ndcg.at(key_k) > b->report->ndcg.at(key_k)) b = &job;
  }
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const Job& job = *best[c];
    rows[c].best_tau = job.cfg.loss.kind == LossKind::Bilateral ? job.cfg.loss.tau_pos : job.cfg.loss.tau;
    rows[c].metrics = *job.report;
    rows[c].eta_mean = job.eta_mean;
    rows[c].eta_median = job.eta_median;
  }
  return rows;
}

std::vector<SweepRow> noise_sweep(const Dataset& ds, const ExperimentConfig& cfg,
                                  const std::vector<double>& r_values, const RunOptions& opts) {
  SweepSpec s;
  s.r_noise = r_values;
  if (r_values.empty()) fail(ErrorCode::InvalidArgument, "noise_sweep: no r_noise values");
  return run_sweep(ds, cfg, s, opts);
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::vector<std::size_t>& ks) {
  std::string out = "r_noise,n_negatives,pos_noise,loss,best_tau" + metric_header(ks) +
                    ",neg_score_variance,eta_mean,eta_median\n";
  for (const auto& r : rows) {
    out += fmt(r.r_noise) + "," + std::to_string(r.n_negatives) + "," + fmt(r.pos_noise) + "," +
           std::string(to_string(r.loss)) + "," + fmt(r.best_tau) + metric_cells(r.metrics, ks) + "," +
           fmt(r.metrics.neg_score_variance) + "," + fmt(r.eta_mean) + "," + fmt(r.eta_median) + "\n";
  }
  return out;
}

DroDiagnosis dro_diagnose(const EmbeddingTable& emb, const Dataset& ds, const TrainConfig& cfg,
                          const std::vector<double>& taus, std::size_t n_batches) {
  require(!taus.empty(), "dro_diagnose: tau list is empty");
  for (double t : taus) require(t > 0, "dro_diagnose: temperatures must be positive");
  require(n_batches >= 1, "dro_diagnose: need at least one batch");
  // A dedicated epoch index keeps these batches distinct from training's.
  constexpr std::size_t kDiagnoseEpoch = 1'000'003;
  auto batches = epoch_batches(ds, cfg, kDiagnoseEpoch);
  if (batches.size() > n_batches) batches.resize(n_batches);

  DroDiagnosis d;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Batch& batch = batches[b];
    for (std::size_t e = 0; e < batch.users.size(); ++e) {
      std::vector<ItemId> negs;
      if (batch.negatives.empty()) {
        for (std::size_t o = 0; o < batch.items.size(); ++o)
          if (o != e) negs.push_back(batch.items[o]);
      } else {
        negs = batch.negatives[e];
      }
      auto sc = cosine_score(emb, batch.users[e], negs);
      auto base = dro::uniform_base(negs.size());
      for (double tau : taus) {
        auto wc = dro::worst_case_weights(sc.scores, base, tau);
        for (std::size_t j = 0; j < negs.size(); ++j)
          d.weights.push_back({b, e, batch.users[e], j, negs[j], tau, sc.scores[j], wc.weights[j]});
        double var = dro::weighted_variance(sc.scores, base);
        d.eta.push_back({b, e, tau, var, dro::estimate_eta(sc.scores, base, tau), dro::entropy(wc.weights)});
      }
    }
  }
  return d;
}

void write_dro_diagnosis(const DroDiagnosis& d, const fs::path& out_dir, std::size_t hist_bins) {
  fs::create_directories(out_dir);
  std::string w = "batch,example,user,neg_index,item,tau,score,weight\n";
  for (const auto& r : d.weights)
    w += std::to_string(r.batch) + "," + std::to_string(r.example) + "," + std::to_string(r.user) + "," +
         std::to_string(r.neg_index) + "," + std::to_string(r.item) + "," + fmt(r.tau) + "," + fmt(r.score) +
         "," + fmt(r.weight) + "\n";
  write_text_file(out_dir / "dro_weights.csv", w);

  std::string e = "batch,example,tau,variance,eta,entropy\n";
  std::vector<double> taus;
  for (const auto& r : d.eta) {
    e += std::to_string(r.batch) + "," + std::to_string(r.example) + "," + fmt(r.tau) + "," + fmt(r.variance) +
         "," + fmt(r.eta) + "," + fmt(r.entropy) + "\n";
    if (std::find(taus.begin(), taus.end(), r.tau) == taus.end()) taus.push_back(r.tau);
  }
  write_text_file(out_dir / "dro_eta.csv", e);

  std::string h = "tau,bin,bin_lo,bin_hi,count\n";
  json summary = json::array();
  for (double tau : taus) {
    std::vector<double> vals, ents;
    for (const auto& r : d.eta)
      if (r.tau == tau) {
        vals.push_back(r.eta);
        ents.push_back(r.entropy);
      }
    std::sort(vals.begin(), vals.end());
    const double lo = vals.front(), hi = vals.back();
    const double width = hi > lo ? (hi - lo) / static_cast<double>(hist_bins) : 1.0;
    std::vector<std::size_t> counts(hist_bins, 0);
    for (double v : vals) {
      auto bin = static_cast<std::size_t>((v - lo) / width);
      ++counts[std::min(bin, hist_bins - 1)];
    }
    for (std::size_t b = 0; b < hist_bins; ++b)
      h += fmt(tau) + "," + std::to_string(b) + "," + fmt(lo + width * static_cast<double>(b)) + "," +
           fmt(lo + width * static_cast<double>(b + 1)) + "," + std::to_string(counts[b]) + "\n";
    const std::size_t m = vals.size() / 2;
    summary.push_back({{"tau", tau},
                       {"rows", vals.size()},
                       {"eta_mean", std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size())},
                       {"eta_median", vals.size() % 2 ? vals[m] : 0.5 * (vals[m - 1] + vals[m])},
                       {"mean_weight_entropy",
                        std::accumulate(ents.begin(), ents.end(), 0.0) / static_cast<double>(ents.size())}});
  }
  write_text_file(out_dir / "dro_eta_hist.csv", h);
  write_text_file(out_dir / "dro_summary.json", summary.dump(2) + "\n");
}

std::vector<EvalReport> fairness_report(const std::vector<const EmbeddingTable*>& models, const Dataset& ds,
                                        std::size_t n_groups, const EvalOptions& base) {
  require(!models.empty(), "fairness_report: no model given");
  EvalOptions o = base;
  o.n_groups = n_groups;
  std::vector<std::size_t> ks{o.group_k};
  std::vector<EvalReport> out;
  for (const auto* m : models) out.push_back(evaluate(*m, ds, ks, o));
  return out;
}

std::string fairness_to_csv(const std::vector<EvalReport>& reports) {
  std::string out = "group";
  for (std::size_t m = 0; m < reports.size(); ++m) out += ",ndcg_" + std::to_string(m);
  for (std::size_t m = 0; m < reports.size(); ++m) out += ",share_" + std::to_string(m);
  out += "\n";
  const std::size_t g = reports.front().group_ndcg.size();
  for (std::size_t k = 0; k < g; ++k) {
    out += std::to_string(k);
    for (const auto& r : reports) out += "," + fmt(r.group_ndcg[k]);
    for (const auto& r : reports) out += "," + fmt(group_share(r, k, k + 1));
    out += "\n";
  }
  out += "total";
  for (const auto& r : reports) out += "," + fmt(r.ndcg.at(r.group_k));
  for (std::size_t m = 0; m < reports.size(); ++m) out += ",1";
  out += "\nneg_score_variance";
  for (const auto& r : reports) out += "," + fmt(r.neg_score_variance);
  for (std::size_t m = 0; m < reports.size(); ++m) out += ",";
  out += "\n";
  return out;
}

std::string fairness_to_json(const std::vector<EvalReport>& reports) {
  json j = json::array();
  for (const auto& r : reports) {
    const std::size_t half = r.group_ndcg.size() / 2;
    j.push_back({{"ndcg", r.ndcg.at(r.group_k)},
                 {"k", r.group_k},
                 {"group_ndcg", r.group_ndcg},
                 {"unpopular_half_share", group_share(r, 0, half)},
                 {"popular_half_share", group_share(r, half, r.group_ndcg.size())},
                 {"neg_score_variance", r.neg_score_variance}});
  }
  return j.dump(2);
}

namespace {

IngestSummary write_normalized(const Dataset& ds, const fs::path& out_dir, const IdMaps* maps) {
  fs::create_directories(out_dir);
  save_dataset(ds, out_dir / "train.txt", out_dir / "test.txt");
  if (maps) {
    std::string u = "dense,raw\n", i = "dense,raw\n";
    for (std::size_t k = 0; k < maps->user_raw.size(); ++k)
      u += std::to_string(k) + "," + std::to_string(maps->user_raw[k]) + "\n";
    for (std::size_t k = 0; k < maps->item_raw.size(); ++k)
      i += std::to_string(k) + "," + std::to_string(maps->item_raw[k]) + "\n";
    write_text_file(out_dir / "user_map.csv", u);
    write_text_file(out_dir / "item_map.csv", i);
  }
  IngestSummary s{ds.n_users, ds.n_items, ds.n_train_interactions(), ds.n_test_interactions()};
  json j{{"n_users", s.n_users},
         {"n_items", s.n_items},
         {"n_train", s.n_train},
         {"n_test", s.n_test},
         {"train_fnv1a64", hex64(hash_file(out_dir / "train.txt"))},
         {"test_fnv1a64", hex64(hash_file(out_dir / "test.txt"))}};
  write_text_file(out_dir / "summary.json", j.dump(2) + "\n");
  return s;
}

}  // namespace

IngestSummary run_ingest(const fs::path& train, const fs::path& test, bool remap, const fs::path& out_dir) {
  IdMaps maps;
  LoadOptions lo;
  lo.remap = remap;
  Dataset ds = load_dataset(train, test, lo, remap ? &maps : nullptr);
  return write_normalized(ds, out_dir, remap ? &maps : nullptr);
}

IngestSummary run_generate(const std::string& kind, std::uint64_t seed, const fs::path& out_dir) {
  Dataset ds;
  if (kind == "planted") {
    synthetic::PlantedSpec s;
    s.seed = seed;
    ds = synthetic::planted(s);
  } else if (kind == "zipf") {
    synthetic::ZipfSpec s;
    s.seed = seed;
    ds = synthetic::zipf(s);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown synthetic dataset kind: '" + kind + "'");
  }
  return write_normalized(ds, out_dir, nullptr);
}

}  // namespace bslrec
