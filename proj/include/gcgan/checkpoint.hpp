#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gcgan/buffer.hpp"
#include "gcgan/error.hpp"
#include "gcgan/models.hpp"
#include "gcgan/optim.hpp"
#include "gcgan/version.hpp"

namespace gcgan {

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'G', 'C', 'G', 'A', 'N', 'C', 'K', 'P'};

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f32_array(std::ostream& out, const std::vector<float>& data) {
  for (float f : data) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    unsigned char b[4] = {static_cast<unsigned char>(u & 0xFF),
                          static_cast<unsigned char>((u >> 8) & 0xFF),
                          static_cast<unsigned char>((u >> 16) & 0xFF),
                          static_cast<unsigned char>((u >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

inline std::vector<float> get_f32_array(std::istream& in, std::size_t count) {
  std::vector<float> data(count);
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(raw[4 * i]) |
                            (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                            (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                            (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    data[i] = std::bit_cast<float>(u);
  }
  return data;
}

template <typename T>
std::vector<float> to_f32(const Tensor<T>& t) {
  std::vector<float> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<float>(t[i]);
  return v;
}

template <typename T>
void from_f32(const std::vector<float>& v, Tensor<T>& t, const std::string& name) {
  if (v.size() != t.size())
    throw IoError("checkpoint array '" + name + "' has " + std::to_string(v.size()) +
                  " values, expected " + std::to_string(t.size()));
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<T>(v[i]);
}

}  // namespace ckpt_detail

/// Ordered named float32 arrays plus a JSON meta document: the on-disk
/// training state container.
struct CheckpointData {
  nlohmann::json meta;
  std::vector<std::pair<std::string, std::vector<float>>> arrays;

  const std::vector<float>& require(const std::string& name) const {
    for (const auto& [n, a] : arrays)
      if (n == name) return a;
    throw IoError("checkpoint is missing array '" + name + "'");
  }
};

/// Layout: magic, u64 meta length, meta JSON (UTF-8), then each array's raw
/// little-endian float32 payload in the order meta lists them.
inline void write_checkpoint_file(const std::filesystem::path& path, const CheckpointData& data) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + tmp.string());
    out.write(ckpt_detail::kMagic, 8);

    nlohmann::json meta = data.meta;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [name, arr] : data.arrays) list.push_back({{"name", name}, {"count", arr.size()}});
    meta["arrays"] = list;
    const std::string meta_str = meta.dump();
    ckpt_detail::put_u64(out, meta_str.size());
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& [name, arr] : data.arrays) ckpt_detail::put_f32_array(out, arr);
    if (!out) throw IoError("short write on checkpoint: " + tmp.string());
  }
  fs::rename(tmp, path);  // atomic publish
}

inline CheckpointData read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, ckpt_detail::kMagic, 8) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  const std::uint64_t meta_len = ckpt_detail::get_u64(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  CheckpointData data;
  data.meta = nlohmann::json::parse(meta_str);
  const unsigned version = data.meta.value("format_version", 0u);
  if (version != kCheckpointFormatVersion)
    throw IoError("checkpoint format version " + std::to_string(version) + " unsupported (expected " +
                  std::to_string(kCheckpointFormatVersion) + "): " + path.string());
  for (const auto& entry : data.meta.at("arrays")) {
    const std::string name = entry.at("name");
    const std::size_t count = entry.at("count");
    data.arrays.emplace_back(name, ckpt_detail::get_f32_array(in, count));
  }
  if (!in) throw IoError("truncated checkpoint: " + path.string());
  return data;
}

inline nlohmann::json generator_spec_to_json(const GeneratorSpec& g) {
  return {{"input_channels", g.input_channels},
          {"output_channels", g.output_channels},
          {"base_width", g.base_width},
          {"n_resblocks", g.n_resblocks},
          {"arch", g.arch == GeneratorArch::resnet ? "resnet" : "digit"},
          {"norm", "instance"},
          {"norm_affine", g.norm_affine},
          {"output_activation", "tanh"},
          {"reflect_stem", g.reflect_stem}};
}

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec g;
  g.input_channels = j.at("input_channels");
  g.output_channels = j.at("output_channels");
  g.base_width = j.at("base_width");
  g.n_resblocks = j.at("n_resblocks");
  g.arch = j.at("arch") == "digit" ? GeneratorArch::digit : GeneratorArch::resnet;
  g.norm_affine = j.at("norm_affine");
  g.reflect_stem = j.at("reflect_stem");
  return g;
}

inline nlohmann::json discriminator_spec_to_json(const DiscriminatorSpec& d) {
  return {{"input_channels", d.input_channels},
          {"base_width", d.base_width},
          {"leaky_slope", d.leaky_slope}};
}

inline DiscriminatorSpec discriminator_spec_from_json(const nlohmann::json& j) {
  DiscriminatorSpec d;
  d.input_channels = j.at("input_channels");
  d.base_width = j.at("base_width");
  d.leaky_slope = j.at("leaky_slope");
  return d;
}

/// Serializes the full training state: model parameters, sharing mode, Adam
/// moments + step counters, buffer contents, epoch and step counters.
template <typename T>
CheckpointData make_checkpoint(const TranslationModel<T>& model, const Adam<T>& adam_g,
                               const Adam<T>& adam_d_y, const Adam<T>& adam_d_yt,
                               const ImageBuffer<T>& buf_y, const ImageBuffer<T>& buf_yt,
                               std::size_t epoch_next, std::size_t global_step) {
  CheckpointData d;
  d.meta["format_version"] = kCheckpointFormatVersion;
  d.meta["library_version"] = kVersion;
  d.meta["scalar"] = "f32";
  d.meta["generator_spec"] = generator_spec_to_json(model.g_xy->spec());
  d.meta["discriminator_spec"] = discriminator_spec_to_json(model.d_y->spec());
  d.meta["sharing"] = model.generators_shared() ? "shared" : "separate";
  d.meta["with_cycle"] = static_cast<bool>(model.g_yx);
  d.meta["epoch_next"] = epoch_next;
  d.meta["global_step"] = global_step;

  for (const auto& p : model.all_parameters())
    d.arrays.emplace_back(p.name, ckpt_detail::to_f32(p.param.value()));

  auto dump_adam = [&](const char* group, const Adam<T>& adam) {
    d.meta["adam"][group] = adam.step_count();
    const auto& params = adam.params();
    auto& m = const_cast<Adam<T>&>(adam).moment1();
    auto& v = const_cast<Adam<T>&>(adam).moment2();
    for (std::size_t i = 0; i < params.size(); ++i) {
      d.arrays.emplace_back("adam." + std::string(group) + ".m." + params[i].name,
                            ckpt_detail::to_f32(m[i]));
      d.arrays.emplace_back("adam." + std::string(group) + ".v." + params[i].name,
                            ckpt_detail::to_f32(v[i]));
    }
  };
  dump_adam("g", adam_g);
  dump_adam("d_y", adam_d_y);
  dump_adam("d_yt", adam_d_yt);

  auto dump_buffer = [&](const char* name, const ImageBuffer<T>& buf) {
    nlohmann::json shapes = nlohmann::json::array();
    for (std::size_t i = 0; i < buf.contents().size(); ++i) {
      const auto& img = buf.contents()[i];
      shapes.push_back(img.shape());
      d.arrays.emplace_back("buffer." + std::string(name) + "." + std::to_string(i),
                            ckpt_detail::to_f32(img));
    }
    d.meta["buffers"][name] = {{"capacity", buf.capacity()}, {"shapes", shapes}};
  };
  dump_buffer("y", buf_y);
  dump_buffer("yt", buf_yt);
  return d;
}

/// Restores parameters/optimizer/buffers in place. The model must already
/// have the architecture the checkpoint describes.
template <typename T>
void restore_checkpoint(const CheckpointData& d, TranslationModel<T>& model, Adam<T>* adam_g,
                        Adam<T>* adam_d_y, Adam<T>* adam_d_yt, ImageBuffer<T>* buf_y,
                        ImageBuffer<T>* buf_yt) {
  for (const auto& p : model.all_parameters())
    ckpt_detail::from_f32(d.require(p.name), const_cast<Var<T>&>(p.param).mutable_value(), p.name);

  auto load_adam = [&](const char* group, Adam<T>* adam) {
    if (!adam) return;
    adam->set_step_count(d.meta.at("adam").at(group).get<std::int64_t>());
    const auto& params = adam->params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string base = "adam." + std::string(group);
      ckpt_detail::from_f32(d.require(base + ".m." + params[i].name), adam->moment1()[i],
                            params[i].name);
      ckpt_detail::from_f32(d.require(base + ".v." + params[i].name), adam->moment2()[i],
                            params[i].name);
    }
  };
  load_adam("g", adam_g);
  load_adam("d_y", adam_d_y);
  load_adam("d_yt", adam_d_yt);

  auto load_buffer = [&](const char* name, ImageBuffer<T>* buf) {
    if (!buf || !d.meta.contains("buffers")) return;
    const auto& meta = d.meta.at("buffers").at(name);
    std::vector<Tensor<T>> contents;
    const auto& shapes = meta.at("shapes");
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      std::vector<std::size_t> shape = shapes[i].get<std::vector<std::size_t>>();
      Tensor<T> img(shape);
      ckpt_detail::from_f32(d.require("buffer." + std::string(name) + "." + std::to_string(i)), img,
                            name);
      contents.push_back(std::move(img));
    }
    buf->restore(std::move(contents));
  };
  load_buffer("y", buf_y);
  load_buffer("yt", buf_yt);
}

/// Loads just the model (for inference); returns the model plus meta.
template <typename T>
std::pair<TranslationModel<T>, nlohmann::json> load_model_checkpoint(
    const std::filesystem::path& path) {
  const CheckpointData d = read_checkpoint_file(path);
  const GeneratorSpec gspec = generator_spec_from_json(d.meta.at("generator_spec"));
  const DiscriminatorSpec dspec = discriminator_spec_from_json(d.meta.at("discriminator_spec"));
  const SharingMode sharing =
      d.meta.at("sharing") == "shared" ? SharingMode::shared : SharingMode::separate;
  const bool with_cycle = d.meta.value("with_cycle", false);
  TranslationModel<T> model = build_translation_model<T>(gspec, dspec, sharing, with_cycle, 0);
  restore_checkpoint<T>(d, model, nullptr, nullptr, nullptr, nullptr, nullptr);
  return {std::move(model), d.meta};
}

}  // namespace gcgan
