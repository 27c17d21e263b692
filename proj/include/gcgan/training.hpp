#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcgan/buffer.hpp"
#include "gcgan/checkpoint.hpp"
#include "gcgan/config.hpp"
#include "gcgan/data.hpp"
#include "gcgan/losses.hpp"
#include "gcgan/models.hpp"
#include "gcgan/optim.hpp"

namespace gcgan {

/// Two-phase schedule: constant for epochs_const epochs, then linear decay
/// lr * (1 - (epoch - epochs_const + 1)/epochs_decay), hitting zero after the
/// final epoch.
inline double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  if (epoch >= cfg.total_epochs())
    throw ConfigError("lr_at: epoch " + std::to_string(epoch) + " outside schedule of " +
                      std::to_string(cfg.total_epochs()) + " epochs");
  if (epoch < cfg.epochs_const) return cfg.lr;
  const double k = static_cast<double>(epoch - cfg.epochs_const + 1);
  return cfg.lr * (1.0 - k / static_cast<double>(cfg.epochs_decay));
}

struct LogRow {
  std::size_t step = 0, epoch = 0;
  double lr = 0;
  LossReport losses;
};

inline constexpr const char* kLogHeader =
    "step,epoch,lr,gan_g,gan_d,geo,cycle,distance,identity,total_g";

class CsvLogger {
 public:
  CsvLogger() = default;
  CsvLogger(const std::filesystem::path& path, bool append) {
    const bool write_header = !append || !std::filesystem::exists(path);
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw IoError("cannot open training log: " + path.string());
    if (write_header) out_ << kLogHeader << "\n";
    out_ << std::setprecision(9);
  }

  void row(const LogRow& r) {
    out_ << r.step << ',' << r.epoch << ',' << r.lr << ',' << r.losses.gan_g << ','
         << r.losses.gan_d << ',' << r.losses.geo << ',' << r.losses.cycle << ','
         << r.losses.distance << ',' << r.losses.identity << ',' << r.losses.total_g << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline std::vector<LogRow> read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read training log: " + path.string());
  std::vector<LogRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LogRow r;
    std::istringstream row(line);
    char c;
    row >> r.step >> c >> r.epoch >> c >> r.lr >> c >> r.losses.gan_g >> c >> r.losses.gan_d >>
        c >> r.losses.geo >> c >> r.losses.cycle >> c >> r.losses.distance >> c >>
        r.losses.identity >> c >> r.losses.total_g;
    rows.push_back(r);
  }
  return rows;
}

struct TrainResult {
  std::string final_checkpoint;
  std::vector<std::string> checkpoints;
  std::string log_path;
  std::size_t steps_run = 0;
  std::size_t dataset_x = 0, dataset_y = 0;
};

/// Owns the model, optimizers, buffers and the alternating update loop.
template <typename T = float>
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
    validate_config(cfg_, /*check_data=*/false);
    model_ = build_translation_model<T>(cfg_.generator_spec(), cfg_.discriminator_spec(),
                                        cfg_.sharing, cfg_.constraints.cycle, cfg_.seed);
    adam_g_ = Adam<T>(model_.generator_parameters(), cfg_.beta1, cfg_.beta2);
    adam_d_y_ = Adam<T>(model_.d_y->named_parameters("d_y"), cfg_.beta1, cfg_.beta2);
    adam_d_yt_ = Adam<T>(model_.d_yt->named_parameters("d_yt"), cfg_.beta1, cfg_.beta2);
    buf_y_ = ImageBuffer<T>(cfg_.buffer_capacity);
    buf_yt_ = ImageBuffer<T>(cfg_.buffer_capacity);
    d_params_ = model_.d_y->named_parameters("d_y");
    const auto dyt = model_.d_yt->named_parameters("d_yt");
    d_params_.insert(d_params_.end(), dyt.begin(), dyt.end());
  }

  const TrainConfig& config() const { return cfg_; }
  TranslationModel<T>& model() { return model_; }
  void set_distance_stats(const DistanceStats& st) { stats_ = st; }
  const DistanceStats& distance_stats() const { return stats_; }
  ImageBuffer<T>& buffer_y() { return buf_y_; }

  /// One alternating update: generator step on the full objective with the
  /// discriminators frozen, then one step per discriminator on real examples
  /// versus buffer-mediated fakes.
  LossReport train_step(const Tensor<T>& x_batch, const Tensor<T>& y_batch, GeoTransform f,
                        double lr) {
    LossReport rep;
    const auto g_xy = [this](const Var<T>& v) { return (*model_.g_xy)(v); };
    const auto g_xtyt = [this](const Var<T>& v) { return (*model_.g_xtyt)(v); };

    // ---- generator update (discriminators frozen) ----
    set_requires_grad(d_params_, false);
    adam_g_.zero_grad();

    const Var<T> x = Var<T>::constant(x_batch);
    const Var<T> y = Var<T>::constant(y_batch);
    const Var<T> x_t = geo_apply(x, f);
    const Var<T> fake_y = g_xy(x);
    const Var<T> fake_yt = g_xtyt(x_t);

    Var<T> gan_g = add(adversarial_loss_g((*model_.d_y)(fake_y)),
                       adversarial_loss_g((*model_.d_yt)(fake_yt)));
    rep.gan_g = gan_g.item();
    std::vector<std::pair<T, Var<T>>> terms{{T(1), gan_g}};

    if (cfg_.constraints.geo) {
      const auto geo = geometry_consistency_from_outputs(fake_y, fake_yt, f);
      rep.geo = geo.total.item();
      terms.emplace_back(static_cast<T>(cfg_.weights.geo), geo.total);
    }
    if (cfg_.constraints.cycle) {
      if (!model_.g_yx) throw ConfigError("cycle constraint enabled but G_YX is absent");
      const Var<T> x_rec = (*model_.g_yx)(fake_y);
      const Var<T> y_rec = g_xy((*model_.g_yx)(y));
      const Var<T> cyc = add(l1_diff_mean(x_rec, x), l1_diff_mean(y_rec, y));
      rep.cycle = cyc.item();
      terms.emplace_back(static_cast<T>(cfg_.weights.cycle), cyc);
    }
    if (cfg_.constraints.distance) {
      const Var<T> dist = distance_loss_from_outputs(fake_y, x_batch, stats_);
      rep.distance = dist.item();
      terms.emplace_back(static_cast<T>(cfg_.weights.distance), dist);
    }
    if (cfg_.constraints.identity) {
      Var<T> idt = identity_loss<T>(g_xy, y);
      if (!model_.generators_shared()) {
        // with unshared translators, each sees its own target domain
        const Var<T> y_t = geo_apply(y, f);
        idt = scale_shift(add(idt, identity_loss<T>(g_xtyt, y_t)), T(0.5));
      }
      rep.identity = idt.item();
      terms.emplace_back(static_cast<T>(cfg_.weights.identity), idt);
    }

    const Var<T> total_g = weighted_sum(terms);
    rep.total_g = total_g.item();
    backward(total_g);
    adam_g_.step(lr);
    set_requires_grad(d_params_, true);

    // ---- discriminator updates (buffer-mediated fakes, generators fixed) ----
    const Tensor<T> buffered_y = query_buffer(buf_y_, fake_y.value());
    adam_d_y_.zero_grad();
    const Var<T> loss_d_y =
        adversarial_loss_d((*model_.d_y)(y), (*model_.d_y)(Var<T>::constant(buffered_y)));
    backward(loss_d_y);
    adam_d_y_.step(lr);

    const Tensor<T> real_yt = apply_transform(f, y_batch);
    const Tensor<T> buffered_yt = query_buffer(buf_yt_, fake_yt.value());
    adam_d_yt_.zero_grad();
    const Var<T> loss_d_yt = adversarial_loss_d((*model_.d_yt)(Var<T>::constant(real_yt)),
                                                (*model_.d_yt)(Var<T>::constant(buffered_yt)));
    backward(loss_d_yt);
    adam_d_yt_.step(lr);

    rep.gan_d = static_cast<double>(loss_d_y.item()) + static_cast<double>(loss_d_yt.item());

    for (double v : {rep.gan_g, rep.gan_d, rep.geo, rep.cycle, rep.distance, rep.identity})
      if (!std::isfinite(v)) throw NumericError("non-finite loss encountered");
    return rep;
  }

  /// Full run: dataset epochs with the two-phase schedule, periodic
  /// checkpoints, CSV log. Resumable from an epoch checkpoint.
  TrainResult train() {
    namespace fs = std::filesystem;
    validate_config(cfg_, /*check_data=*/true);
    fs::create_directories(cfg_.out_dir);

    DataConfig dcfg;
    dcfg.height = cfg_.resolution_h;
    dcfg.width = cfg_.resolution_w;
    dcfg.channels = cfg_.channels;
    dcfg.augment = cfg_.augment;
    const auto ds = UnpairedDataset::load(cfg_.data_x, cfg_.data_y, dcfg);

    if (cfg_.constraints.distance) {
      if (!cfg_.stats_file.empty()) {
        stats_ = load_distance_stats(cfg_.stats_file);
      } else {
        stats_ = precompute_distance_stats<T>(ds, cfg_.stats_max_pairs, cfg_.seed);
        save_distance_stats(fs::path(cfg_.out_dir) / "distance_stats.txt", stats_);
      }
    }

    std::size_t start_epoch = 0;
    if (!cfg_.resume_from.empty()) {
      const CheckpointData d = read_checkpoint_file(cfg_.resume_from);
      check_compatible(d);
      restore_checkpoint<T>(d, model_, &adam_g_, &adam_d_y_, &adam_d_yt_, &buf_y_, &buf_yt_);
      start_epoch = d.meta.at("epoch_next").get<std::size_t>();
      global_step_ = d.meta.at("global_step").get<std::size_t>();
    }

    TrainResult result;
    result.dataset_x = ds.size_x();
    result.dataset_y = ds.size_y();
    const fs::path log_path = fs::path(cfg_.out_dir) / "log.csv";
    result.log_path = log_path.string();
    CsvLogger log(log_path, /*append=*/start_epoch > 0);

    PairSampler sampler(ds.size_x(), ds.size_y(), cfg_.seed);
    const std::size_t total = cfg_.total_epochs();
    for (std::size_t epoch = start_epoch; epoch < total; ++epoch) {
      const double lr = lr_at(epoch, cfg_);
      sampler.begin_epoch(epoch);
      buf_y_.reseed(RandomStream::derive(cfg_.seed, "buffer-y", epoch));
      buf_yt_.reseed(RandomStream::derive(cfg_.seed, "buffer-yt", epoch));
      RandomStream tf_stream = RandomStream::derive(cfg_.seed, "transform", epoch);
      RandomStream aug_stream = RandomStream::derive(cfg_.seed, "augment", epoch);

      while (sampler.remaining() > 0) {
        const std::size_t b = std::min(cfg_.batch_size, sampler.remaining());
        std::vector<Tensor<T>> xs, ys;
        std::vector<std::size_t> xi, yi;
        for (std::size_t k = 0; k < b; ++k) {
          const auto [i, j] = sampler.next();
          xi.push_back(i);
          yi.push_back(j);
          xs.push_back(ds.load_x<T>(i, cfg_.augment ? &aug_stream : nullptr));
          ys.push_back(ds.load_y<T>(j, cfg_.augment ? &aug_stream : nullptr));
        }
        const GeoTransform f = sample_transform(cfg_.pool, tf_stream);
        LossReport rep;
        try {
          rep = train_step(stack_batch(xs), stack_batch(ys), f, lr);
        } catch (const NumericError& e) {
          std::ostringstream os;
          os << e.what() << " at epoch " << epoch << " step " << global_step_ + 1 << "; batch x={";
          for (std::size_t v : xi) os << v << ",";
          os << "} y={";
          for (std::size_t v : yi) os << v << ",";
          os << "}";
          throw NumericError(os.str());
        }
        ++global_step_;
        ++result.steps_run;
        if (global_step_ % cfg_.log_every == 0)
          log.row({global_step_, epoch, lr, rep});
      }

      if (cfg_.checkpoint_every > 0 && (epoch + 1) % cfg_.checkpoint_every == 0 &&
          epoch + 1 < total) {
        std::ostringstream name;
        name << "checkpoint_epoch_" << std::setw(4) << std::setfill('0') << epoch + 1 << ".bin";
        const fs::path p = fs::path(cfg_.out_dir) / name.str();
        save(p, epoch + 1);
        result.checkpoints.push_back(p.string());
      }
    }

    const fs::path final_path = fs::path(cfg_.out_dir) / "checkpoint_final.bin";
    save(final_path, total);
    result.checkpoints.push_back(final_path.string());
    result.final_checkpoint = final_path.string();
    return result;
  }

  void save(const std::filesystem::path& path, std::size_t epoch_next) const {
    write_checkpoint_file(path, make_checkpoint<T>(model_, adam_g_, adam_d_y_, adam_d_yt_, buf_y_,
                                                   buf_yt_, epoch_next, global_step_));
  }

 private:
  Tensor<T> query_buffer(ImageBuffer<T>& buf, const Tensor<T>& batch) {
    std::vector<Tensor<T>> out;
    const std::size_t n = batch.dim(0);
    std::vector<std::size_t> shape(batch.shape().begin() + 1, batch.shape().end());
    const std::size_t stride = Tensor<T>::count(shape);
    for (std::size_t i = 0; i < n; ++i) {
      Tensor<T> img(shape);
      std::copy(batch.data() + i * stride, batch.data() + (i + 1) * stride, img.data());
      out.push_back(buf.query(img));
    }
    return stack_batch(out);
  }

  void check_compatible(const CheckpointData& d) const {
    const GeneratorSpec g = generator_spec_from_json(d.meta.at("generator_spec"));
    const GeneratorSpec want = cfg_.generator_spec();
    const bool g_ok = g.input_channels == want.input_channels &&
                      g.output_channels == want.output_channels &&
                      g.base_width == want.base_width && g.n_resblocks == want.n_resblocks &&
                      g.arch == want.arch && g.norm_affine == want.norm_affine;
    const std::string sharing = d.meta.at("sharing");
    const bool s_ok = (sharing == "shared") == (cfg_.sharing == SharingMode::shared);
    const bool c_ok = d.meta.value("with_cycle", false) == cfg_.constraints.cycle;
    if (!g_ok || !s_ok || !c_ok)
      throw ConfigError("checkpoint '" + cfg_.resume_from + "' is incompatible with this config");
  }

  TrainConfig cfg_;
  TranslationModel<T> model_;
  Adam<T> adam_g_, adam_d_y_, adam_d_yt_;
  ImageBuffer<T> buf_y_{0}, buf_yt_{0};
  ParamList<T> d_params_;
  DistanceStats stats_;
  std::size_t global_step_ = 0;
};

/// Gradient-flow diagnostic: after one full-objective backward pass on random
/// data, every generator and discriminator parameter must see a nonzero
/// gradient somewhere.
template <typename T>
bool all_params_receive_gradient(Trainer<T>& trainer, std::size_t resolution,
                                 std::uint64_t seed = 1234) {
  RandomStream rng(seed);
  const std::size_t c = trainer.config().channels;
  const std::size_t b = std::max<std::size_t>(2, trainer.config().batch_size);
  Tensor<T> x({b, c, resolution, resolution}), y({b, c, resolution, resolution});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<T>(rng.uniform(-1, 1));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<T>(rng.uniform(-1, 1));
  trainer.train_step(x, y, trainer.config().pool.front(), trainer.config().lr);

  bool ok = true;
  for (const auto& p : trainer.model().all_parameters()) {
    T mx = 0;
    auto& grad = const_cast<Var<T>&>(p.param).grad();
    for (std::size_t i = 0; i < grad.size(); ++i) mx = std::max(mx, std::abs(grad[i]));
    if (mx == T(0)) ok = false;
  }
  return ok;
}

}  // namespace gcgan
