#include "gcgan/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace gcgan;
namespace fs = std::filesystem;

namespace {

TrainConfig valid_base() {
  TrainConfig cfg;
  cfg.resolution_h = cfg.resolution_w = 32;
  return cfg;
}

}  // namespace

TEST(Config, DefaultsMatchTheRecipe) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.lr, 2e-4);
  EXPECT_EQ(cfg.beta1, 0.5);
  EXPECT_EQ(cfg.beta2, 0.999);
  EXPECT_EQ(cfg.epochs_const, 100u);
  EXPECT_EQ(cfg.epochs_decay, 100u);
  EXPECT_EQ(cfg.buffer_capacity, 50u);
  EXPECT_EQ(cfg.batch_size, 1u);
  EXPECT_EQ(cfg.weights.geo, 20.0);
  EXPECT_EQ(cfg.weights.cycle, 10.0);
  EXPECT_TRUE(cfg.constraints.geo);
  ASSERT_EQ(cfg.pool.size(), 1u);
  EXPECT_EQ(cfg.pool[0], GeoTransform::rot90cw);
}

TEST(Config, ResblockDefaultsFollowResolution) {
  TrainConfig cfg = valid_base();
  cfg.resolution_h = cfg.resolution_w = 256;
  EXPECT_EQ(cfg.effective_resblocks(), 9u);
  cfg.resolution_h = cfg.resolution_w = 128;
  EXPECT_EQ(cfg.effective_resblocks(), 6u);
  cfg.n_resblocks = 1;
  EXPECT_EQ(cfg.effective_resblocks(), 1u);
}

TEST(Config, ValidationRejectsBadCombinations) {
  {
    auto cfg = valid_base();
    cfg.constraints = {false, true, false, false};  // cycle without geo
    EXPECT_THROW(validate_config(cfg, false), ConfigError);
  }
  {
    auto cfg = valid_base();
    cfg.constraints = {true, false, true, false};
    cfg.batch_size = 1;  // distance needs pairs inside the batch
    EXPECT_THROW(validate_config(cfg, false), ConfigError);
    cfg.batch_size = 2;
    EXPECT_NO_THROW(validate_config(cfg, false));
  }
  {
    auto cfg = valid_base();
    cfg.resolution_h = 32;
    cfg.resolution_w = 64;  // rot pool on a non-square resolution
    EXPECT_THROW(validate_config(cfg, false), ConfigError);
    cfg.pool = {GeoTransform::vflip};  // flips keep the shape
    EXPECT_NO_THROW(validate_config(cfg, false));
  }
  {
    auto cfg = valid_base();
    cfg.resolution_h = cfg.resolution_w = 30;  // not divisible by 4, below minimum
    EXPECT_THROW(validate_config(cfg, false), ConfigError);
  }
  {
    auto cfg = valid_base();
    cfg.pool.clear();
    EXPECT_THROW(validate_config(cfg, false), ConfigError);
  }
  {
    auto cfg = valid_base();
    cfg.weights.geo = -1;
    EXPECT_THROW(validate_config(cfg, false), ConfigError);
  }
  {
    auto cfg = valid_base();
    cfg.epochs_const = cfg.epochs_decay = 0;
    EXPECT_THROW(validate_config(cfg, false), ConfigError);
  }
  {
    // the plain-GAN baseline: empty constraint set, optionally with identity
    auto cfg = valid_base();
    cfg.constraints = {};
    EXPECT_NO_THROW(validate_config(cfg, false));
    cfg.constraints = {false, false, false, true};
    EXPECT_NO_THROW(validate_config(cfg, false));
  }
}

TEST(Config, KeyValueRoundTrip) {
  TrainConfig cfg = valid_base();
  cfg.constraints = {true, true, false, true};
  cfg.pool = {GeoTransform::rot90cw, GeoTransform::vflip};
  cfg.sharing = SharingMode::separate;
  cfg.weights.identity = 2.5;
  cfg.seed = 99;
  cfg.data_x = "/d/x";

  TrainConfig back;
  for (const auto& [k, v] : config_to_kv(cfg)) {
    if (v.empty()) continue;
    apply_config_kv(back, k, v);
  }
  EXPECT_EQ(back.constraints.cycle, true);
  EXPECT_EQ(back.constraints.distance, false);
  EXPECT_EQ(back.pool, cfg.pool);
  EXPECT_EQ(back.sharing, SharingMode::separate);
  EXPECT_EQ(back.weights.identity, 2.5);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.data_x, "/d/x");
}

TEST(Config, UnknownKeyAndBadValueAreErrors) {
  TrainConfig cfg;
  EXPECT_THROW(apply_config_kv(cfg, "warp_field", "on"), ConfigError);
  EXPECT_THROW(apply_config_kv(cfg, "lr", "fast"), ConfigError);
  EXPECT_THROW(apply_config_kv(cfg, "constraints", "geo,warp9"), ConfigError);
  EXPECT_THROW(apply_config_kv(cfg, "sharing", "kind-of"), ConfigError);
}

TEST(Config, FileParsingReportsLineNumbers) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "gcgan_config_test.cfg";
  {
    std::ofstream out(p);
    out << "# comment line\n"
        << "lr 1e-3\n"
        << "\n"
        << "buffer_capacity 10   # trailing comment\n";
  }
  TrainConfig cfg;
  apply_config_file(cfg, p);
  EXPECT_EQ(cfg.lr, 1e-3);
  EXPECT_EQ(cfg.buffer_capacity, 10u);

  {
    std::ofstream out(p);
    out << "lr 1e-3\nbogus_key 1\n";
  }
  try {
    apply_config_file(cfg, p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  fs::remove(p);
}
