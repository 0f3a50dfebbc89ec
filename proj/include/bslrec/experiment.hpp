#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bslrec/checkpoint.hpp"
#include "bslrec/config.hpp"
#include "bslrec/dataset.hpp"
#include "bslrec/dro.hpp"
#include "bslrec/eval.hpp"
#include "bslrec/model.hpp"

namespace bslrec {

inline constexpr const char* kArtifactVersion = "bslrec 0.1.0";

struct RunOptions {
  unsigned threads = 1;
  bool resume = false;
  std::ostream* progress = nullptr;  // human-readable progress lines
};

EvalOptions eval_options(const ExperimentConfig& cfg, unsigned threads = 1);

// Training data after optional positive contamination (seeded from
// rng_seed). The test split is never modified.
Dataset prepare_training_data(const Dataset& ds, const TrainConfig& cfg);

struct TrainRunResult {
  TrainLog log;
  std::optional<EvalReport> last_eval;
  std::size_t best_epoch = 0;
  double best_ndcg = -1.0;
};

/// Trains from the config's dataset paths into out_dir:
///   manifest.json  written before the first epoch, finalized at the end
///   config.txt     canonical config snapshot
///   epochs.csv     epoch, mean loss and (on eval epochs) metrics
///   timing.csv     wall-clock seconds per epoch
///   last.ckpt / best.ckpt
/// With opts.resume, the manifest's dataset hashes must match the current
/// files or the run aborts with Error(Mismatch) before touching outputs.
TrainRunResult run_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                         const RunOptions& opts = {});

// Metric column header shared by epochs.csv and sweep output.
std::string metric_header(const std::vector<std::size_t>& ks);
std::string metric_cells(const EvalReport& r, const std::vector<std::size_t>& ks);

EvalReport run_evaluate(const EmbeddingTable& emb, const Dataset& ds, const std::vector<std::size_t>& ks,
                        const EvalOptions& opts);

struct SweepSpec {
  std::vector<double> r_noise;
  std::vector<std::size_t> n_negatives;
  std::vector<double> pos_noise;
  std::vector<double> tau_grid;  // empty: use the config's grid
};

struct SweepRow {
  double r_noise = 0.0;
  std::size_t n_negatives = 0;
  double pos_noise = 0.0;
  LossKind loss = LossKind::Softmax;
  double best_tau = 0.0;
  EvalReport metrics;
  double eta_mean = 0.0;
  double eta_median = 0.0;
};

// Temperature a grid search moves for the given loss: tau for SL and its
// ablation, tau_pos for BSL (tau_neg stays fixed), none otherwise.
bool loss_uses_tau_grid(LossKind kind);
void apply_grid_tau(LossSpec& spec, double tau);
double negative_temperature(const LossSpec& spec);

/// Cartesian product of the provided axes (an empty axis keeps the config
/// value). Every cell retrains from scratch for each grid temperature and
/// keeps the one with the best NDCG at cfg.ks' group cutoff. Throws
/// Error(InvalidArgument) when every axis is empty.
std::vector<SweepRow> run_sweep(const Dataset& ds, const ExperimentConfig& cfg, const SweepSpec& sweep,
                                const RunOptions& opts = {});

std::vector<SweepRow> noise_sweep(const Dataset& ds, const ExperimentConfig& cfg,
                                  const std::vector<double>& r_values, const RunOptions& opts = {});

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::vector<std::size_t>& ks);

// Per-row eta = Var[scores] / (2 tau^2) over a sample of users' negatives.
std::vector<double> sample_eta(const EmbeddingTable& emb, const Dataset& ds, const TrainConfig& cfg,
                               double tau, std::size_t max_users, std::uint64_t seed);

struct DroWeightRow {
  std::size_t batch = 0, example = 0;
  UserId user = 0;
  std::size_t neg_index = 0;
  ItemId item = 0;
  double tau = 0.0, score = 0.0, weight = 0.0;
};

struct DroEtaRow {
  std::size_t batch = 0, example = 0;
  double tau = 0.0, variance = 0.0, eta = 0.0, entropy = 0.0;
};

struct DroDiagnosis {
  std::vector<DroWeightRow> weights;
  std::vector<DroEtaRow> eta;
};

// Scores the negatives of the first n_batches minibatches of a seeded epoch
// and tilts each row with a uniform base at every tau.
DroDiagnosis dro_diagnose(const EmbeddingTable& emb, const Dataset& ds, const TrainConfig& cfg,
                          const std::vector<double>& taus, std::size_t n_batches);

// Writes dro_weights.csv, dro_eta.csv, dro_eta_hist.csv and dro_summary.json.
void write_dro_diagnosis(const DroDiagnosis& d, const std::filesystem::path& out_dir,
                         std::size_t hist_bins = 20);

// Group NDCG table for one or two models side by side.
std::vector<EvalReport> fairness_report(const std::vector<const EmbeddingTable*>& models,
                                        const Dataset& ds, std::size_t n_groups,
                                        const EvalOptions& base);
std::string fairness_to_csv(const std::vector<EvalReport>& reports);
std::string fairness_to_json(const std::vector<EvalReport>& reports);

struct IngestSummary {
  std::size_t n_users = 0, n_items = 0, n_train = 0, n_test = 0;
};

// Normalizes raw split files into out_dir/train.txt and out_dir/test.txt
// (plus id maps when remapping) and writes out_dir/summary.json.
IngestSummary run_ingest(const std::filesystem::path& train, const std::filesystem::path& test,
                         bool remap, const std::filesystem::path& out_dir);

// Writes a generated fixture ("planted" or "zipf") the same way.
IngestSummary run_generate(const std::string& kind, std::uint64_t seed,
                           const std::filesystem::path& out_dir);

// Atomic text write (temp file + rename).
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bslrec
