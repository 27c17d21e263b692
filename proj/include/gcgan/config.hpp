#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gcgan/error.hpp"
#include "gcgan/losses.hpp"
#include "gcgan/models.hpp"
#include "gcgan/transforms.hpp"

namespace gcgan {

/// Every knob of the training recipe. Defaults are the published recipe:
/// geometry constraint with the clockwise rotation, shared translators,
/// lambda 20, Adam(2e-4, 0.5, 0.999), 100 constant + 100 decay epochs,
/// image buffer of 50.
struct TrainConfig {
  std::string data_x, data_y;
  std::string out_dir = "run";

  std::size_t resolution_h = 128, resolution_w = 128;
  std::size_t channels = 3;
  bool augment = false;

  ConstraintSet constraints{true, false, false, true};  // geo + identity
  std::vector<GeoTransform> pool{GeoTransform::rot90cw};
  SharingMode sharing = SharingMode::shared;
  LossWeights weights{};

  GeneratorArch arch = GeneratorArch::resnet;
  std::size_t g_base_width = 64, d_base_width = 64;
  std::size_t n_resblocks = 0;  // 0: derived from resolution
  bool norm_affine = false;

  double lr = 2e-4, beta1 = 0.5, beta2 = 0.999;
  std::size_t epochs_const = 100, epochs_decay = 100;
  std::size_t buffer_capacity = 50;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;

  std::size_t checkpoint_every = 25;  // epochs; 0 = final checkpoint only
  std::size_t log_every = 1;          // steps per CSV row
  std::size_t stats_max_pairs = 10000;
  std::string stats_file;
  std::string resume_from;

  std::size_t total_epochs() const { return epochs_const + epochs_decay; }
  std::size_t effective_resblocks() const {
    return n_resblocks ? n_resblocks
                       : resblocks_for_resolution(std::min(resolution_h, resolution_w));
  }

  GeneratorSpec generator_spec() const {
    GeneratorSpec g;
    g.input_channels = g.output_channels = channels;
    g.base_width = g_base_width;
    g.n_resblocks = effective_resblocks();
    g.arch = arch;
    g.norm_affine = norm_affine;
    return g;
  }
  DiscriminatorSpec discriminator_spec() const {
    DiscriminatorSpec d;
    d.input_channels = channels;
    d.base_width = d_base_width;
    return d;
  }
};

namespace config_detail {

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("expected boolean, got '" + v + "'");
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& v) {
  std::istringstream in(v);
  T out;
  if (!(in >> out)) throw ConfigError("expected number, got '" + v + "'");
  return out;
}

}  // namespace config_detail

inline ConstraintSet parse_constraints(const std::string& s) {
  ConstraintSet c;
  for (const auto& tok : config_detail::split_commas(s)) {
    if (tok == "geo") c.geo = true;
    else if (tok == "cycle") c.cycle = true;
    else if (tok == "distance" || tok == "dist") c.distance = true;
    else if (tok == "identity" || tok == "idt") c.identity = true;
    else if (tok == "none") continue;
    else throw ConfigError("unknown constraint: '" + tok + "'");
  }
  return c;
}

inline std::string constraints_to_string(const ConstraintSet& c) {
  std::string s;
  auto app = [&](const char* n) {
    if (!s.empty()) s += ",";
    s += n;
  };
  if (c.geo) app("geo");
  if (c.cycle) app("cycle");
  if (c.distance) app("distance");
  if (c.identity) app("identity");
  return s.empty() ? "none" : s;
}

inline std::vector<GeoTransform> parse_transform_pool(const std::string& s) {
  std::vector<GeoTransform> pool;
  for (const auto& tok : config_detail::split_commas(s)) pool.push_back(parse_transform(tok));
  return pool;
}

/// Applies one "key value" setting; the single mapping used by both the
/// config file and CLI overrides.
inline void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
  using namespace config_detail;
  if (key == "data_x") cfg.data_x = value;
  else if (key == "data_y") cfg.data_y = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "resolution") {
    const auto x = value.find('x');
    if (x == std::string::npos) {
      cfg.resolution_h = cfg.resolution_w = parse_number<std::size_t>(value);
    } else {
      cfg.resolution_h = parse_number<std::size_t>(value.substr(0, x));
      cfg.resolution_w = parse_number<std::size_t>(value.substr(x + 1));
    }
  } else if (key == "channels") cfg.channels = parse_number<std::size_t>(value);
  else if (key == "augment") cfg.augment = parse_bool(value);
  else if (key == "constraints") cfg.constraints = parse_constraints(value);
  else if (key == "transforms") cfg.pool = parse_transform_pool(value);
  else if (key == "sharing") {
    if (value == "shared") cfg.sharing = SharingMode::shared;
    else if (value == "separate") cfg.sharing = SharingMode::separate;
    else throw ConfigError("sharing must be 'shared' or 'separate'");
  } else if (key == "lambda_geo") cfg.weights.geo = parse_number<double>(value);
  else if (key == "lambda_cycle") cfg.weights.cycle = parse_number<double>(value);
  else if (key == "lambda_distance") cfg.weights.distance = parse_number<double>(value);
  else if (key == "lambda_identity") cfg.weights.identity = parse_number<double>(value);
  else if (key == "arch") {
    if (value == "resnet") cfg.arch = GeneratorArch::resnet;
    else if (value == "digit") cfg.arch = GeneratorArch::digit;
    else throw ConfigError("arch must be 'resnet' or 'digit'");
  } else if (key == "g_base_width") cfg.g_base_width = parse_number<std::size_t>(value);
  else if (key == "d_base_width") cfg.d_base_width = parse_number<std::size_t>(value);
  else if (key == "n_resblocks") cfg.n_resblocks = parse_number<std::size_t>(value);
  else if (key == "norm_affine") cfg.norm_affine = parse_bool(value);
  else if (key == "lr") cfg.lr = parse_number<double>(value);
  else if (key == "beta1") cfg.beta1 = parse_number<double>(value);
  else if (key == "beta2") cfg.beta2 = parse_number<double>(value);
  else if (key == "epochs_const") cfg.epochs_const = parse_number<std::size_t>(value);
  else if (key == "epochs_decay") cfg.epochs_decay = parse_number<std::size_t>(value);
  else if (key == "buffer_capacity") cfg.buffer_capacity = parse_number<std::size_t>(value);
  else if (key == "batch_size") cfg.batch_size = parse_number<std::size_t>(value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value);
  else if (key == "checkpoint_every") cfg.checkpoint_every = parse_number<std::size_t>(value);
  else if (key == "log_every") cfg.log_every = parse_number<std::size_t>(value);
  else if (key == "stats_max_pairs") cfg.stats_max_pairs = parse_number<std::size_t>(value);
  else if (key == "stats_file") cfg.stats_file = value;
  else if (key == "resume_from") cfg.resume_from = value;
  else throw ConfigError("unknown config key: '" + key + "'");
}

/// Flat "key value" config file; '#' starts a comment. Later keys win.
inline void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream row(line);
    std::string key;
    if (!(row >> key)) continue;
    std::string value;
    std::getline(row, value);
    const auto a = value.find_first_not_of(" \t=");
    const auto b = value.find_last_not_of(" \t\r");
    if (a == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": missing value for '" +
                        key + "'");
    try {
      apply_config_kv(cfg, key, value.substr(a, b - a + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

/// All keys in file syntax, for manifests and config snapshots.
inline std::vector<std::pair<std::string, std::string>> config_to_kv(const TrainConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto num = [](auto v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  kv.emplace_back("data_x", cfg.data_x);
  kv.emplace_back("data_y", cfg.data_y);
  kv.emplace_back("out_dir", cfg.out_dir);
  kv.emplace_back("resolution",
                  num(cfg.resolution_h) + (cfg.resolution_h == cfg.resolution_w
                                               ? ""
                                               : "x" + num(cfg.resolution_w)));
  kv.emplace_back("channels", num(cfg.channels));
  kv.emplace_back("augment", cfg.augment ? "true" : "false");
  kv.emplace_back("constraints", constraints_to_string(cfg.constraints));
  std::string pool;
  for (auto t : cfg.pool) pool += (pool.empty() ? "" : ",") + std::string(transform_name(t));
  kv.emplace_back("transforms", pool);
  kv.emplace_back("sharing", cfg.sharing == SharingMode::shared ? "shared" : "separate");
  kv.emplace_back("lambda_geo", num(cfg.weights.geo));
  kv.emplace_back("lambda_cycle", num(cfg.weights.cycle));
  kv.emplace_back("lambda_distance", num(cfg.weights.distance));
  kv.emplace_back("lambda_identity", num(cfg.weights.identity));
  kv.emplace_back("arch", cfg.arch == GeneratorArch::resnet ? "resnet" : "digit");
  kv.emplace_back("g_base_width", num(cfg.g_base_width));
  kv.emplace_back("d_base_width", num(cfg.d_base_width));
  kv.emplace_back("n_resblocks", num(cfg.n_resblocks));
  kv.emplace_back("norm_affine", cfg.norm_affine ? "true" : "false");
  kv.emplace_back("lr", num(cfg.lr));
  kv.emplace_back("beta1", num(cfg.beta1));
  kv.emplace_back("beta2", num(cfg.beta2));
  kv.emplace_back("epochs_const", num(cfg.epochs_const));
  kv.emplace_back("epochs_decay", num(cfg.epochs_decay));
  kv.emplace_back("buffer_capacity", num(cfg.buffer_capacity));
  kv.emplace_back("batch_size", num(cfg.batch_size));
  kv.emplace_back("seed", num(cfg.seed));
  kv.emplace_back("checkpoint_every", num(cfg.checkpoint_every));
  kv.emplace_back("log_every", num(cfg.log_every));
  kv.emplace_back("stats_max_pairs", num(cfg.stats_max_pairs));
  kv.emplace_back("stats_file", cfg.stats_file);
  kv.emplace_back("resume_from", cfg.resume_from);
  return kv;
}

/// Model/recipe consistency checks; pass check_data=true to also require the
/// dataset directories (train-time validation).
inline void validate_config(const TrainConfig& cfg, bool check_data) {
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (cfg.channels != 1 && cfg.channels != 3) throw ConfigError("channels must be 1 or 3");
  if (cfg.resolution_h < 32 || cfg.resolution_w < 32 || cfg.resolution_h % 4 ||
      cfg.resolution_w % 4)
    throw ConfigError(
        "resolution must be >= 32 (the patch discriminator's five-conv stack) and divisible by 4");
  if (cfg.lr <= 0) throw ConfigError("lr must be positive");
  if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1)
    throw ConfigError("adam betas must lie in [0,1)");
  if (cfg.weights.geo < 0 || cfg.weights.cycle < 0 || cfg.weights.distance < 0 ||
      cfg.weights.identity < 0)
    throw ConfigError("loss weights must be non-negative");
  if (cfg.total_epochs() == 0) throw ConfigError("at least one epoch required");
  if (cfg.pool.empty()) throw ConfigError("transform pool must not be empty");

  const bool needs_square =
      std::any_of(cfg.pool.begin(), cfg.pool.end(), [](GeoTransform t) { return swaps_axes(t); });
  if (needs_square && cfg.resolution_h != cfg.resolution_w)
    throw ConfigError(
        "rotation transforms require square training resolution (discriminator input shape must "
        "be constant)");

  if (!cfg.constraints.geo && (cfg.constraints.cycle || cfg.constraints.distance))
    throw ConfigError(
        "cycle/distance are add-ons to the geometry constraint; without geo only the plain-GAN "
        "baseline (optionally with identity) is supported");
  if (cfg.constraints.distance && cfg.batch_size < 2)
    throw ConfigError("distance constraint pairs consecutive batch items; batch_size must be >= 2");

  cfg.generator_spec().validate();
  cfg.discriminator_spec().validate();

  if (check_data) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(cfg.data_x))
      throw ConfigError("data_x is not a directory: '" + cfg.data_x + "'");
    if (!fs::is_directory(cfg.data_y))
      throw ConfigError("data_y is not a directory: '" + cfg.data_y + "'");
  }
}

}  // namespace gcgan
