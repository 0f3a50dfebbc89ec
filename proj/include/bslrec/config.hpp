#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bslrec/types.hpp"

namespace bslrec {

enum class LossKind {
  BPR,
  BCE,
  MSE,
  Softmax,
  Bilateral,
  // Softmax with its implicit variance penalty removed (first-order
  // expansion); used for the fairness ablation.
  SoftmaxNoVariance,
};

// Pseudocode mirrors the released per-example loss; Canonical applies a
// log-mean-exp over each group of positives.
enum class BslForm { Pseudocode, Canonical };

// How Canonical BSL groups positives: each example alone (reduces to SL) or
// all examples of the same user within a minibatch.
enum class BslGrouping { PerExample, PerUser };

enum class SamplingMode { NegativeSampling, InBatch };
enum class NegSampler { Uniform, Popularity };
enum class ScoreMode { Cosine, InnerProduct };

struct LossSpec {
  LossKind kind = LossKind::Bilateral;
  double tau = 0.1;
  double tau_pos = 0.1;
  double tau_neg = 0.1;
  double bce_mse_balance = 1.0;
  BslForm bsl_form = BslForm::Pseudocode;
  BslGrouping bsl_grouping = BslGrouping::PerUser;

  bool operator==(const LossSpec&) const = default;
};

struct TrainConfig {
  std::size_t embedding_dim = 64;
  double learning_rate = 1e-3;
  double l2_reg = 1e-6;
  std::size_t n_negatives = 64;
  std::size_t batch_size = 1024;
  std::size_t epochs = 200;
  SamplingMode sampling_mode = SamplingMode::NegativeSampling;
  NegSampler neg_sampler = NegSampler::Uniform;
  double popularity_exponent = 1.0;
  double r_noise = 0.0;
  double pos_noise_ratio = 0.0;
  std::uint64_t rng_seed = 2024;

  bool operator==(const TrainConfig&) const = default;
};

// Everything a config file can hold: the training and loss parameters plus
// the experiment-level settings the command line drives.
struct ExperimentConfig {
  TrainConfig train;
  LossSpec loss;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::vector<std::size_t> ks{20};
  std::size_t eval_every = 5;  // 0 disables periodic evaluation
  std::size_t n_groups = 10;
  std::size_t var_samples = 100;
  ScoreMode score_mode = ScoreMode::Cosine;
  std::vector<double> tau_grid{0.05, 0.07, 0.09, 0.10, 0.11, 0.12, 0.15, 0.20, 0.5, 1.0};

  bool operator==(const ExperimentConfig&) const = default;
};

void validate(const LossSpec& spec);
void validate(const TrainConfig& cfg);

// Names of every accepted config key, in canonical order.
const std::vector<std::string>& config_keys();

// Assigns one key. Unknown keys and malformed values throw Error(Config).
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& cfg, std::string_view key);

// Parses `key = value` lines; `#` starts a comment. Relative dataset paths
// resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view text,
                              const std::filesystem::path& base_dir = {});

// Canonical serialization; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& cfg);

std::string_view to_string(LossKind k);
std::string_view to_string(BslForm f);
std::string_view to_string(BslGrouping g);
std::string_view to_string(SamplingMode m);
std::string_view to_string(NegSampler s);
std::string_view to_string(ScoreMode m);

std::vector<double> parse_double_list(std::string_view text);
std::vector<std::size_t> parse_count_list(std::string_view text);

}  // namespace bslrec
