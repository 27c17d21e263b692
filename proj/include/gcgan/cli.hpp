#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gcgan/checkpoint.hpp"
#include "gcgan/config.hpp"
#include "gcgan/data.hpp"
#include "gcgan/eval.hpp"
#include "gcgan/toy.hpp"
#include "gcgan/training.hpp"
#include "gcgan/version.hpp"

namespace gcgan::cli {

namespace fs = std::filesystem;

/// Everything a run writes, reachable from one document.
struct RunManifest {
  std::vector<std::pair<std::string, std::string>> config_kv;
  std::vector<std::uint64_t> seeds;
  struct Run {
    std::uint64_t seed;
    std::string out_dir, final_checkpoint, log_path;
    std::vector<std::string> checkpoints;
  };
  std::vector<Run> runs;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["library_version"] = kVersion;
    nlohmann::json cfg;
    for (const auto& [k, v] : config_kv) cfg[k] = v;
    j["config"] = cfg;
    j["seeds"] = seeds;
    for (const auto& r : runs)
      j["runs"].push_back({{"seed", r.seed},
                           {"out_dir", r.out_dir},
                           {"final_checkpoint", r.final_checkpoint},
                           {"checkpoints", r.checkpoints},
                           {"log", r.log_path}});
    return j;
  }
};

namespace detail {

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  for (const auto& tok : config_detail::split_commas(s))
    seeds.push_back(config_detail::parse_number<std::uint64_t>(tok));
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

inline std::vector<fs::path> sorted_images_in(const fs::path& dir) {
  return data_detail::list_images(dir);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  out << text;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline int cmd_train(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                     std::ostream& out) {
  RunManifest manifest;
  manifest.seeds = seeds;
  manifest.config_kv = config_to_kv(base);

  const fs::path root = base.out_dir;
  fs::create_directories(root);
  for (const std::uint64_t seed : seeds) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    if (seeds.size() > 1) cfg.out_dir = (root / ("seed_" + std::to_string(seed))).string();
    out << "training seed " << seed << " -> " << cfg.out_dir << "\n";
    Trainer<float> trainer(cfg);
    const TrainResult r = trainer.train();
    manifest.runs.push_back({seed, cfg.out_dir, r.final_checkpoint, r.log_path, r.checkpoints});
    out << "  dataset: " << r.dataset_x << " x-images, " << r.dataset_y << " y-images\n";
    out << "  " << r.steps_run << " steps, final checkpoint " << r.final_checkpoint << "\n";
  }

  const fs::path manifest_path = root / "manifest.json";
  detail::write_text(manifest_path, manifest.to_json().dump(2) + "\n");
  out << "manifest " << manifest_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// translate
// ---------------------------------------------------------------------------

inline int cmd_translate(const fs::path& checkpoint, const fs::path& input_dir,
                         const fs::path& output_dir, const std::string& equivariance,
                         std::size_t resize, std::ostream& out) {
  auto [model, meta] = load_model_checkpoint<float>(checkpoint.string());
  const bool identity_debug = meta.value("identity_debug", false);
  const GeneratorSpec gspec = model.g_xy->spec();

  const auto files = detail::sorted_images_in(input_dir);
  fs::create_directories(output_dir);

  std::vector<Tensor<float>> tensors;
  std::size_t written = 0;
  for (const auto& f : files) {
    Image8 img = load_image(f);
    if (resize > 0) img = resize_image(img, resize, resize);
    if (img.height % 4 || img.width % 4)
      throw ConfigError("input image " + f.filename().string() +
                        " has size not divisible by 4; pass --resize");
    Tensor<float> x = image_to_tensor<float>(img, gspec.input_channels);
    Tensor<float> y;
    if (identity_debug) {
      y = x;
    } else {
      Tensor<float> batch({1, x.dim(0), x.dim(1), x.dim(2)},
                          std::vector<float>(x.data(), x.data() + x.size()));
      Tensor<float> yb = model.g_xy->translate(batch);
      y = Tensor<float>({yb.dim(1), yb.dim(2), yb.dim(3)},
                        std::vector<float>(yb.data(), yb.data() + yb.size()));
    }
    save_image(output_dir / f.filename(), tensor_to_image(y));
    tensors.push_back(std::move(x));
    ++written;
  }
  out << "wrote " << written << " images to " << output_dir.string() << "\n";

  if (!equivariance.empty() && !identity_debug) {
    const GeoTransform f = parse_transform(equivariance);
    const double residual = equivariance_residual(*model.g_xy, *model.g_xtyt, tensors, f);
    out << "equivariance residual (" << transform_name(f) << "): " << residual << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  fs::path pred_dir, gt_dir;
  std::string mode = "map";  // "map" or "parsing"
  std::vector<int> deltas{5, 10};
  fs::path palette_file;
  int ignore_class = -1;
  bool resize_pred = false;  // nearest-neighbor upsample of predictions
  fs::path report_base;      // writes <base>.csv and <base>.json
};

inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out) {
  const auto preds = detail::sorted_images_in(opt.pred_dir);

  // every prediction must have a same-named ground truth
  std::vector<std::string> missing;
  for (const auto& p : preds)
    if (!fs::exists(opt.gt_dir / p.filename())) missing.push_back(p.filename().string());
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw IoError("missing ground-truth files for: " + list);
  }

  nlohmann::json report;
  report["mode"] = opt.mode;
  std::ostringstream csv;

  if (opt.mode == "map") {
    csv << "file,rmse";
    for (int d : opt.deltas) csv << ",acc_delta" << d;
    csv << "\n";
    double rmse_sum = 0;
    std::vector<double> acc_sum(opt.deltas.size(), 0);
    for (const auto& p : preds) {
      Image8 pred = load_image(p);
      const Image8 gt = load_image(opt.gt_dir / p.filename());
      if (opt.resize_pred) pred = resize_image(pred, gt.height, gt.width);
      const double r = rmse(pred, gt);
      rmse_sum += r;
      csv << p.filename().string() << ',' << r;
      nlohmann::json row{{"file", p.filename().string()}, {"rmse", r}};
      for (std::size_t i = 0; i < opt.deltas.size(); ++i) {
        const double a = map_accuracy(pred, gt, opt.deltas[i]);
        acc_sum[i] += a;
        csv << ',' << a;
        row["acc_delta" + std::to_string(opt.deltas[i])] = a;
      }
      csv << "\n";
      report["per_image"].push_back(row);
    }
    const double n = static_cast<double>(preds.size());
    csv << "aggregate," << rmse_sum / n;
    report["aggregate"]["rmse"] = rmse_sum / n;
    out << "rmse " << rmse_sum / n;
    for (std::size_t i = 0; i < opt.deltas.size(); ++i) {
      csv << ',' << acc_sum[i] / n;
      report["aggregate"]["acc_delta" + std::to_string(opt.deltas[i])] = acc_sum[i] / n;
      out << "  acc(delta=" << opt.deltas[i] << ") " << acc_sum[i] / n;
    }
    csv << "\n";
    out << "\n";
  } else if (opt.mode == "parsing") {
    if (opt.palette_file.empty()) throw ConfigError("parsing mode requires --palette");
    LabelPalette palette = load_palette(opt.palette_file);
    palette.ignore_id = opt.ignore_class;
    palette.validate();

    csv << "file,pixel_acc,class_acc,mean_iou,score\n";
    ConfusionMatrix global(palette.size());
    for (const auto& p : preds) {
      const Image8 pred_img = load_image(p);
      const Image8 gt_img = load_image(opt.gt_dir / p.filename());
      LabelMap pred = rgb_to_labels(pred_img, palette);
      const LabelMap gt = rgb_to_labels(gt_img, palette);
      if (opt.resize_pred) pred = resize_labels_nearest(pred, gt.height, gt.width);
      const SegScores s = segmentation_scores(pred, gt, palette.size(), palette.ignore_id);
      global.add(pred, gt, palette.ignore_id);
      csv << p.filename().string() << ',' << s.pixel_acc << ',' << s.class_acc << ','
          << s.mean_iou << ',' << aggregate_score(s) << "\n";
      report["per_image"].push_back({{"file", p.filename().string()},
                                     {"pixel_acc", s.pixel_acc},
                                     {"class_acc", s.class_acc},
                                     {"mean_iou", s.mean_iou},
                                     {"score", aggregate_score(s)}});
    }
    const SegScores s = global.scores(palette.ignore_id);
    csv << "aggregate," << s.pixel_acc << ',' << s.class_acc << ',' << s.mean_iou << ','
        << aggregate_score(s) << "\n";
    report["aggregate"] = {{"pixel_acc", s.pixel_acc},
                           {"class_acc", s.class_acc},
                           {"mean_iou", s.mean_iou},
                           {"score", aggregate_score(s)}};
    out << "pixel_acc " << s.pixel_acc << "  class_acc " << s.class_acc << "  mean_iou "
        << s.mean_iou << "  score " << aggregate_score(s) << "\n";
  } else {
    throw ConfigError("mode must be 'map' or 'parsing'");
  }

  const fs::path base = opt.report_base.empty() ? opt.pred_dir / "report" : opt.report_base;
  fs::create_directories(base.parent_path().empty() ? "." : base.parent_path());
  detail::write_text(base.string() + ".csv", csv.str());
  detail::write_text(base.string() + ".json", report.dump(2) + "\n");
  out << "report " << base.string() << ".{csv,json}\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

inline int cmd_stats(const fs::path& dir_x, const fs::path& dir_y, const fs::path& out_file,
                     std::size_t resolution, std::size_t channels, std::size_t max_pairs,
                     std::uint64_t seed, std::ostream& out) {
  DataConfig cfg;
  cfg.height = cfg.width = resolution;
  cfg.channels = channels;
  const auto ds = UnpairedDataset::load(dir_x, dir_y, cfg);
  const DistanceStats st = precompute_distance_stats<double>(ds, max_pairs, seed);
  save_distance_stats(out_file, st);
  out << "mu_x " << st.mu_x << "  sigma_x " << st.sigma_x << "  mu_y " << st.mu_y << "  sigma_y "
      << st.sigma_y << "\n"
      << "stats " << out_file.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// make-toy
// ---------------------------------------------------------------------------

inline int cmd_make_toy(const std::string& kind, const fs::path& out_dir, std::size_t n,
                        std::uint64_t seed, std::size_t size, std::ostream& out) {
  if (kind != "recolor") throw ConfigError("unknown toy kind: '" + kind + "' (have: recolor)");
  toy::write_recolor_dataset(out_dir, n, seed, size);
  out << "wrote " << n << " images per domain to " << (out_dir / "trainX").string() << " and "
      << (out_dir / "trainY").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// argument wiring
// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"one-sided unpaired image translation with a geometry-consistency constraint"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a translator");
  std::string t_config, t_data_x, t_data_y, t_out, t_constraints, t_transforms, t_sharing;
  std::string t_seeds, t_resolution;
  std::vector<std::string> t_sets;
  std::uint64_t t_seed = 0;
  std::size_t t_epochs_const = 0, t_epochs_decay = 0, t_batch = 0;
  train->add_option("--config", t_config, "flat key-value config file");
  train->add_option("--data-x", t_data_x, "source-domain image directory");
  train->add_option("--data-y", t_data_y, "target-domain image directory");
  train->add_option("--out", t_out, "run output directory");
  train->add_option("--constraint", t_constraints, "comma list: geo,cycle,distance,identity,none");
  train->add_option("--transform", t_transforms, "comma list, e.g. rot | vf | rot,vf");
  train->add_option("--sharing", t_sharing, "shared | separate");
  train->add_option("--seed", t_seed, "base RNG seed");
  train->add_option("--seeds", t_seeds, "comma list of seeds; one full run each");
  train->add_option("--epochs-const", t_epochs_const, "constant-lr epochs");
  train->add_option("--epochs-decay", t_epochs_decay, "linear-decay epochs");
  train->add_option("--batch-size", t_batch, "images per step");
  train->add_option("--resolution", t_resolution, "training resolution (N or HxW)");
  train->add_option("--set", t_sets, "extra config overrides, key=value")->take_all();

  // translate
  auto* translate = app.add_subcommand("translate", "run one-sided inference");
  std::string x_ckpt, x_in, x_out, x_equi;
  std::size_t x_resize = 0;
  translate->add_option("--checkpoint", x_ckpt, "trained checkpoint")->required();
  translate->add_option("--input", x_in, "input image directory")->required();
  translate->add_option("--output", x_out, "output image directory")->required();
  translate->add_option("--report-equivariance", x_equi,
                        "measure mean L1 of f(G(x)) vs G~(f(x)) for this transform");
  translate->add_option("--resize", x_resize, "resize inputs to this square size first");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score translations against ground truth");
  EvaluateOptions eopt;
  std::string e_pred, e_gt, e_palette, e_report;
  evaluate->add_option("--pred", e_pred, "prediction directory")->required();
  evaluate->add_option("--gt", e_gt, "ground-truth directory")->required();
  evaluate->add_option("--mode", eopt.mode, "map | parsing");
  evaluate->add_option("--delta", eopt.deltas, "map-mode accuracy thresholds")->take_all();
  evaluate->add_option("--palette", e_palette, "parsing-mode palette file");
  evaluate->add_option("--ignore-class", eopt.ignore_class, "class id excluded from metrics");
  evaluate->add_flag("--resize-pred", eopt.resize_pred,
                     "nearest-neighbor upsample predictions to ground-truth size");
  evaluate->add_option("--report", e_report, "report base path (writes .csv and .json)");

  // stats
  auto* stats = app.add_subcommand("stats", "precompute pairwise-distance statistics");
  std::string s_x, s_y, s_out;
  std::size_t s_res = 128, s_channels = 3, s_pairs = 10000;
  std::uint64_t s_seed = 0;
  stats->add_option("--data-x", s_x, "source-domain image directory")->required();
  stats->add_option("--data-y", s_y, "target-domain image directory")->required();
  stats->add_option("--out", s_out, "output stats file")->required();
  stats->add_option("--resolution", s_res, "resolution used for distances");
  stats->add_option("--channels", s_channels, "channel count");
  stats->add_option("--max-pairs", s_pairs, "sample this many pairs when exhaustive is too big");
  stats->add_option("--seed", s_seed, "sampling seed");

  // make-toy
  auto* mk = app.add_subcommand("make-toy", "generate the synthetic unpaired toy task");
  std::string m_kind = "recolor", m_out;
  std::size_t m_n = 64, m_size = 32;
  std::uint64_t m_seed = 7;
  mk->add_option("--kind", m_kind, "dataset kind (recolor)");
  mk->add_option("--out", m_out, "output directory")->required();
  mk->add_option("--n", m_n, "images per domain");
  mk->add_option("--seed", m_seed, "generation seed");
  mk->add_option("--size", m_size, "image side length");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train) {
      TrainConfig cfg;
      if (!t_config.empty()) apply_config_file(cfg, t_config);
      if (train->count("--data-x")) cfg.data_x = t_data_x;
      if (train->count("--data-y")) cfg.data_y = t_data_y;
      if (train->count("--out")) cfg.out_dir = t_out;
      if (train->count("--constraint")) cfg.constraints = parse_constraints(t_constraints);
      if (train->count("--transform")) cfg.pool = parse_transform_pool(t_transforms);
      if (train->count("--sharing")) apply_config_kv(cfg, "sharing", t_sharing);
      if (train->count("--seed")) cfg.seed = t_seed;
      if (train->count("--epochs-const")) cfg.epochs_const = t_epochs_const;
      if (train->count("--epochs-decay")) cfg.epochs_decay = t_epochs_decay;
      if (train->count("--batch-size")) cfg.batch_size = t_batch;
      if (train->count("--resolution")) apply_config_kv(cfg, "resolution", t_resolution);
      for (const auto& kv : t_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
      }
      const auto seeds = train->count("--seeds") ? detail::parse_seed_list(t_seeds)
                                                 : std::vector<std::uint64_t>{cfg.seed};
      return cmd_train(cfg, seeds, out);
    }
    if (*translate) return cmd_translate(x_ckpt, x_in, x_out, x_equi, x_resize, out);
    if (*evaluate) {
      eopt.pred_dir = e_pred;
      eopt.gt_dir = e_gt;
      eopt.palette_file = e_palette;
      eopt.report_base = e_report;
      if (eopt.deltas.empty()) eopt.deltas = {5, 10};
      return cmd_evaluate(eopt, out);
    }
    if (*stats) return cmd_stats(s_x, s_y, s_out, s_res, s_channels, s_pairs, s_seed, out);
    if (*mk) return cmd_make_toy(m_kind, m_out, m_n, m_seed, m_size, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace gcgan::cli
