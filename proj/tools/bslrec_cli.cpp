// bslrec command-line driver. Everything goes through the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bslrec/bslrec.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CliFailure {
  int code;
  std::string message;
};

int exit_code_for(bsl_status s) {
  return (s == BSL_ERR_CONFIG || s == BSL_ERR_INVALID_ARGUMENT) ? kExitUsage : kExitRuntime;
}

void check(bsl_status s, const std::string& context) {
  if (s != BSL_OK) throw CliFailure{exit_code_for(s), context + ": " + bsl_last_error()};
}

struct ConfigDeleter {
  void operator()(bsl_config* c) const { bsl_config_free(c); }
};
struct DatasetDeleter {
  void operator()(bsl_dataset* d) const { bsl_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(bsl_model* m) const { bsl_model_free(m); }
};
using ConfigPtr = std::unique_ptr<bsl_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<bsl_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<bsl_model, ModelDeleter>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  bsl_string_free(s);
  return out;
}

struct Globals {
  std::string out;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool verbose = false;
};

// Config file plus per-key overrides, shared by every subcommand that trains
// or evaluates.
struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app, bool require_file) {
    auto* opt = app->add_option("-c,--config", path, "experiment config file");
    if (require_file) opt->required();
    for (std::size_t i = 0; i < bsl_config_key_count(); ++i) {
      std::string key = bsl_config_key_name(i);
      app->add_option("--" + key, overrides[key], "override config key " + key)->group("Config overrides");
    }
  }

  ConfigPtr build(const Globals& g) const {
    bsl_config* raw = nullptr;
    if (!path.empty()) {
      if (!std::filesystem::exists(path)) throw CliFailure{kExitUsage, "config file not found: " + path};
      if (bsl_config_load(path.c_str(), &raw) != BSL_OK)
        throw CliFailure{kExitUsage, "cannot load config " + path + ": " + bsl_last_error()};
    } else {
      check(bsl_config_new(&raw), "config");
    }
    ConfigPtr cfg(raw);
    for (const auto& [key, value] : overrides) {
      if (value.empty()) continue;
      if (bsl_config_set(cfg.get(), key.c_str(), value.c_str()) != BSL_OK)
        throw CliFailure{kExitUsage, std::string("--") + key + ": " + bsl_last_error()};
    }
    if (g.seed_set) {
      std::string s = std::to_string(g.seed);
      check(bsl_config_set(cfg.get(), "rng_seed", s.c_str()), "--seed");
    }
    return cfg;
  }
};

std::string config_value(const bsl_config* cfg, const char* key) {
  char* v = nullptr;
  check(bsl_config_get(cfg, key, &v), key);
  return take_string(v);
}

DatasetPtr load_config_dataset(const bsl_config* cfg) {
  std::string train = config_value(cfg, "train_path");
  std::string test = config_value(cfg, "test_path");
  if (train.empty() || test.empty())
    throw CliFailure{kExitUsage, "dataset paths missing: set train_path and test_path"};
  bsl_dataset* ds = nullptr;
  check(bsl_dataset_load(train.c_str(), test.c_str(), 0, &ds), "loading dataset");
  return DatasetPtr(ds);
}

ModelPtr load_model(const std::string& path) {
  bsl_model* m = nullptr;
  check(bsl_model_load(path.c_str(), &m), "loading checkpoint " + path);
  return ModelPtr(m);
}

std::vector<std::size_t> config_ks(const bsl_config* cfg) {
  std::vector<std::size_t> ks;
  std::string text = config_value(cfg, "ks");
  for (char& ch : text)
    if (ch == ',') ch = ' ';
  std::istringstream in(text);
  std::size_t k;
  while (in >> k) ks.push_back(k);
  return ks;
}

std::string require_out(const Globals& g, const char* cmd) {
  if (g.out.empty()) throw CliFailure{kExitUsage, std::string(cmd) + " requires --out"};
  return g.out;
}

std::string default_path(const std::string& explicit_path, const Globals& g, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  if (g.out.empty()) return {};
  std::filesystem::create_directories(g.out);
  return (std::filesystem::path(g.out) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bslrec: softmax-family losses for collaborative filtering"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", bsl_version());

  Globals g;
  app.add_option("-o,--out", g.out, "output directory");
  app.add_option("-j,--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", g.seed, "overrides rng_seed");
  app.add_flag("-v,--verbose", g.verbose, "progress on stderr");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "normalize split files or generate a fixture");
  std::string in_train, in_test, synthetic;
  bool remap = false;
  ingest->add_option("--train", in_train, "raw train adjacency file");
  ingest->add_option("--test", in_test, "raw test adjacency file");
  ingest->add_flag("--remap", remap, "remap raw ids to dense ids");
  ingest->add_option("--synthetic", synthetic, "generate a fixture instead")
      ->check(CLI::IsMember({"planted", "zipf"}));

  // train
  auto* train = app.add_subcommand("train", "train a model");
  ConfigFlags train_cfg;
  train_cfg.attach(train, false);
  bool resume = false;
  train->add_flag("--resume", resume, "continue from out/last.ckpt");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint");
  ConfigFlags eval_cfg;
  eval_cfg.attach(evaluate, false);
  std::string eval_ckpt, eval_csv;
  evaluate->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  evaluate->add_option("--csv", eval_csv, "metric CSV path (default out/metrics.csv)");

  // noise-sweep
  auto* sweep = app.add_subcommand("noise-sweep", "train across noise and sampling settings");
  ConfigFlags sweep_cfg;
  sweep_cfg.attach(sweep, false);
  std::vector<double> sw_r, sw_pos, sw_taus;
  std::vector<std::size_t> sw_neg;
  std::string sweep_csv;
  sweep->add_option("--r-noise", sw_r, "r_noise values")->delimiter(',');
  sweep->add_option("--n-negatives", sw_neg, "negative counts")->delimiter(',');
  sweep->add_option("--pos-noise", sw_pos, "positive contamination ratios")->delimiter(',');
  sweep->add_option("--taus", sw_taus, "temperature grid (default tau_grid)")->delimiter(',');
  sweep->add_option("--csv", sweep_csv, "result CSV path (default out/sweep.csv)");

  // dro-diagnose
  auto* dro = app.add_subcommand("dro-diagnose", "worst-case weights of sampled negatives");
  ConfigFlags dro_cfg;
  dro_cfg.attach(dro, false);
  std::string dro_ckpt;
  std::vector<double> dro_taus{0.5, 0.2, 0.1, 0.05};
  std::size_t dro_batches = 1;
  dro->add_option("--checkpoint", dro_ckpt, "checkpoint file")->required();
  dro->add_option("--taus", dro_taus, "temperatures")->delimiter(',')->capture_default_str();
  dro->add_option("--batches", dro_batches, "number of batches")->capture_default_str();

  // fairness-report
  auto* fair = app.add_subcommand("fairness-report", "per-popularity-group NDCG");
  ConfigFlags fair_cfg;
  fair_cfg.attach(fair, false);
  std::string fair_ckpt, fair_cmp, fair_csv;
  fair->add_option("--checkpoint", fair_ckpt, "checkpoint file")->required();
  fair->add_option("--compare", fair_cmp, "second checkpoint for a side-by-side report");
  fair->add_option("--csv", fair_csv, "report CSV path (default out/fairness.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*ingest) {
      std::string out = require_out(g, "ingest");
      if (!synthetic.empty()) {
        check(bsl_generate(synthetic.c_str(), g.seed_set ? g.seed : 0, out.c_str()), "generate");
      } else {
        if (in_train.empty() || in_test.empty())
          throw CliFailure{kExitUsage, "ingest needs --train and --test, or --synthetic"};
        check(bsl_ingest(in_train.c_str(), in_test.c_str(), remap, out.c_str()), "ingest");
      }
    } else if (*train) {
      ConfigPtr cfg = train_cfg.build(g);
      std::string out = require_out(g, "train");
      check(bsl_run_train(cfg.get(), out.c_str(), resume, g.threads, g.verbose), "train");
    } else if (*evaluate) {
      ConfigPtr cfg = eval_cfg.build(g);
      ModelPtr model = load_model(eval_ckpt);
      DatasetPtr ds = load_config_dataset(cfg.get());
      auto ks = config_ks(cfg.get());
      std::string csv = default_path(eval_csv, g, "metrics.csv");
      char* json = nullptr;
      check(bsl_run_evaluate(model.get(), ds.get(), ks.data(), ks.size(), cfg.get(), g.threads, &json,
                             csv.empty() ? nullptr : csv.c_str()),
            "evaluate");
      std::cout << take_string(json) << '\n';
    } else if (*sweep) {
      ConfigPtr cfg = sweep_cfg.build(g);
      std::string csv = default_path(sweep_csv, g, "sweep.csv");
      if (csv.empty()) throw CliFailure{kExitUsage, "noise-sweep needs --out or --csv"};
      bsl_sweep_spec spec{sw_r.data(),   sw_r.size(),   sw_neg.data(),   sw_neg.size(),
                          sw_pos.data(), sw_pos.size(), sw_taus.data(), sw_taus.size()};
      check(bsl_run_sweep(cfg.get(), &spec, g.threads, g.verbose, csv.c_str()), "noise-sweep");
    } else if (*dro) {
      ConfigPtr cfg = dro_cfg.build(g);
      std::string out = require_out(g, "dro-diagnose");
      ModelPtr model = load_model(dro_ckpt);
      DatasetPtr ds = load_config_dataset(cfg.get());
      check(bsl_run_dro_diagnose(model.get(), ds.get(), cfg.get(), dro_taus.data(), dro_taus.size(),
                                 dro_batches, out.c_str()),
            "dro-diagnose");
    } else if (*fair) {
      ConfigPtr cfg = fair_cfg.build(g);
      ModelPtr first = load_model(fair_ckpt);
      ModelPtr second = fair_cmp.empty() ? nullptr : load_model(fair_cmp);
      DatasetPtr ds = load_config_dataset(cfg.get());
      std::size_t n_groups = std::stoul(config_value(cfg.get(), "n_groups"));
      std::string csv = default_path(fair_csv, g, "fairness.csv");
      char* json = nullptr;
      check(bsl_run_fairness_report(first.get(), second.get(), ds.get(), cfg.get(), n_groups, g.threads, &json,
                                    csv.empty() ? nullptr : csv.c_str()),
            "fairness-report");
      std::cout << take_string(json) << '\n';
    }
  } catch (const CliFailure& f) {
    std::cerr << "bslrec: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "bslrec: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
