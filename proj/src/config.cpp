#include "bslrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace bslrec {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::Config,
       "invalid value for '" + std::string(key) + "': '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v);
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  v = trim(v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <class E>
struct EnumTable {
  std::vector<std::pair<std::string_view, E>> names;

  E parse(std::string_view key, std::string_view v) const {
    v = trim(v);
    for (const auto& [n, e] : names)
      if (n == v) return e;
    bad_value(key, v);
  }
  std::string_view name(E e) const {
    for (const auto& [n, x] : names)
      if (x == e) return n;
    return "?";
  }
};

const EnumTable<LossKind> kLossKinds{{{"bpr", LossKind::BPR},
                                      {"bce", LossKind::BCE},
                                      {"mse", LossKind::MSE},
                                      {"sl", LossKind::Softmax},
                                      {"bsl", LossKind::Bilateral},
                                      {"sl_novar", LossKind::SoftmaxNoVariance}}};
const EnumTable<BslForm> kBslForms{
    {{"pseudocode", BslForm::Pseudocode}, {"canonical", BslForm::Canonical}}};
const EnumTable<BslGrouping> kGroupings{
    {{"example", BslGrouping::PerExample}, {"user", BslGrouping::PerUser}}};
const EnumTable<SamplingMode> kSamplingModes{
    {{"negative", SamplingMode::NegativeSampling}, {"inbatch", SamplingMode::InBatch}}};
const EnumTable<NegSampler> kNegSamplers{
    {{"uniform", NegSampler::Uniform}, {"popularity", NegSampler::Popularity}}};
const EnumTable<ScoreMode> kScoreModes{
    {{"cosine", ScoreMode::Cosine}, {"inner", ScoreMode::InnerProduct}}};

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += fmt_double(v[k]);
    else
      out += std::to_string(v[k]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define BSL_DOUBLE(key, member)                                                     \
  {key, Field{[](ExperimentConfig& c, std::string_view v) { c.member = to_double(key, v); }, \
               [](const ExperimentConfig& c) { return fmt_double(c.member); }}}
#define BSL_COUNT(key, member)                                                      \
  {key, Field{[](ExperimentConfig& c, std::string_view v) {                        \
                 c.member = static_cast<decltype(c.member)>(to_uint(key, v));      \
               },                                                                   \
               [](const ExperimentConfig& c) { return std::to_string(c.member); }}}
#define BSL_ENUM(key, member, tbl)                                                \
  {key, Field{[](ExperimentConfig& c, std::string_view v) { c.member = tbl.parse(key, v); }, \
               [](const ExperimentConfig& c) { return std::string(tbl.name(c.member)); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"train_path", Field{[](ExperimentConfig& c, std::string_view v) { c.train_path = std::string(trim(v)); },
                           [](const ExperimentConfig& c) { return c.train_path.string(); }}},
      {"test_path", Field{[](ExperimentConfig& c, std::string_view v) { c.test_path = std::string(trim(v)); },
                          [](const ExperimentConfig& c) { return c.test_path.string(); }}},
      BSL_COUNT("embedding_dim", train.embedding_dim),
      BSL_DOUBLE("learning_rate", train.learning_rate),
      BSL_DOUBLE("l2_reg", train.l2_reg),
      BSL_COUNT("n_negatives", train.n_negatives),
      BSL_COUNT("batch_size", train.batch_size),
      BSL_COUNT("epochs", train.epochs),
      BSL_ENUM("sampling_mode", train.sampling_mode, kSamplingModes),
      BSL_ENUM("neg_sampler", train.neg_sampler, kNegSamplers),
      BSL_DOUBLE("popularity_exponent", train.popularity_exponent),
      BSL_DOUBLE("r_noise", train.r_noise),
      BSL_DOUBLE("pos_noise_ratio", train.pos_noise_ratio),
      BSL_COUNT("rng_seed", train.rng_seed),
      BSL_ENUM("loss", loss.kind, kLossKinds),
      BSL_DOUBLE("tau", loss.tau),
      BSL_DOUBLE("tau_pos", loss.tau_pos),
      BSL_DOUBLE("tau_neg", loss.tau_neg),
      BSL_DOUBLE("bce_mse_balance", loss.bce_mse_balance),
      BSL_ENUM("bsl_form", loss.bsl_form, kBslForms),
      BSL_ENUM("bsl_grouping", loss.bsl_grouping, kGroupings),
      {"ks", Field{[](ExperimentConfig& c, std::string_view v) { c.ks = parse_count_list(v); },
                   [](const ExperimentConfig& c) { return join(c.ks); }}},
      BSL_COUNT("eval_every", eval_every),
      BSL_COUNT("n_groups", n_groups),
      BSL_COUNT("var_samples", var_samples),
      BSL_ENUM("score_mode", score_mode, kScoreModes),
      {"tau_grid", Field{[](ExperimentConfig& c, std::string_view v) { c.tau_grid = parse_double_list(v); },
                         [](const ExperimentConfig& c) { return join(c.tau_grid); }}},
  };
  return table;
}

#undef BSL_DOUBLE
#undef BSL_COUNT
#undef BSL_ENUM

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  fail(ErrorCode::Config, "unknown config key: '" + std::string(key) + "'");
}

}  // namespace

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  std::string s(text);
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(to_double("list", tok));
  return out;
}

std::vector<std::size_t> parse_count_list(std::string_view text) {
  std::vector<std::size_t> out;
  std::string s(text);
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(static_cast<std::size_t>(to_uint("list", tok)));
  return out;
}

void validate(const LossSpec& spec) {
  auto positive = [](double x) { return std::isfinite(x) && x > 0; };
  if (!positive(spec.tau)) fail(ErrorCode::Config, "tau must be positive");
  if (!positive(spec.tau_pos)) fail(ErrorCode::Config, "tau_pos must be positive");
  if (!positive(spec.tau_neg)) fail(ErrorCode::Config, "tau_neg must be positive");
  if (!(spec.bce_mse_balance >= 0) || !std::isfinite(spec.bce_mse_balance))
    fail(ErrorCode::Config, "bce_mse_balance must be non-negative");
}

void validate(const TrainConfig& cfg) {
  if (cfg.embedding_dim < 1) fail(ErrorCode::Config, "embedding_dim must be >= 1");
  if (!(cfg.learning_rate >= 0)) fail(ErrorCode::Config, "learning_rate must be >= 0");
  if (!(cfg.l2_reg >= 0)) fail(ErrorCode::Config, "l2_reg must be >= 0");
  if (cfg.batch_size < 1) fail(ErrorCode::Config, "batch_size must be >= 1");
  if (cfg.sampling_mode == SamplingMode::NegativeSampling && cfg.n_negatives < 1)
    fail(ErrorCode::Config, "n_negatives must be >= 1 in negative-sampling mode");
  if (cfg.sampling_mode == SamplingMode::InBatch && cfg.batch_size < 2)
    fail(ErrorCode::Config, "batch_size must be >= 2 in in-batch mode");
  if (!(cfg.r_noise >= 0)) fail(ErrorCode::Config, "r_noise must be >= 0");
  if (!(cfg.pos_noise_ratio >= 0 && cfg.pos_noise_ratio < 1))
    fail(ErrorCode::Config, "pos_noise_ratio must lie in [0, 1)");
  if (!(cfg.popularity_exponent >= 0))
    fail(ErrorCode::Config, "popularity_exponent must be >= 0");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  field(trim(key)).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, std::string_view key) {
  return field(trim(key)).get(cfg);
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected 'key = value'");
    auto key = trim(body.substr(0, eq));
    auto value = trim(body.substr(eq + 1));
    if (!seen.emplace(key).second)
      fail(ErrorCode::Config, "duplicate config key: '" + std::string(key) + "'");
    set_config_value(cfg, key, value);
  }
  for (auto* p : {&cfg.train_path, &cfg.test_path})
    if (!p->empty() && p->is_relative() && !base_dir.empty()) *p = base_dir / *p;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(cfg) + "\n";
  return out;
}

std::string_view to_string(LossKind k) { return kLossKinds.name(k); }
std::string_view to_string(BslForm f) { return kBslForms.name(f); }
std::string_view to_string(BslGrouping g) { return kGroupings.name(g); }
std::string_view to_string(SamplingMode m) { return kSamplingModes.name(m); }
std::string_view to_string(NegSampler s) { return kNegSamplers.name(s); }
std::string_view to_string(ScoreMode m) { return kScoreModes.name(m); }

}  // namespace bslrec
