#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "blae/geodesics.hpp"
#include "blae/losses.hpp"
#include "blae/manifolds.hpp"
#include "blae/training.hpp"

namespace blae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr const char* kVersion = "blae 0.1.0";
inline constexpr const char* kRunRootEnv = "BLAE_RUN_ROOT";

/// Flat-key configuration ("data.*", "geo.*", "train.*", "loss.*", ...).
/// Precedence: --set overrides > config file > preset defaults.
using Config = nlohmann::json;

Config preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Assembles the resolved configuration from preset, file and overrides.
Config resolve_config(const std::string& preset, const std::filesystem::path& config_path,
                      const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed_flag);

SwissRollSpec swiss_spec_from(const Config& cfg);
VShapeSpec vshape_spec_from(const Config& cfg);
TrainConfig train_config_from(const Config& cfg);
LossConfig loss_config_from(const Config& cfg);

std::string config_hash(const Config& cfg);

/// Matrix CSV helpers shared by embeddings and landscape grids.
void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& col_prefix,
                     const std::filesystem::path& path);
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);

struct CommonArgs {
  std::string preset;
  std::filesystem::path config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

struct GenerateArgs {
  CommonArgs common;
  std::filesystem::path out;
  std::filesystem::path stats;  // defaults to <out>.stats.json
};
int cmd_generate(const GenerateArgs& args);

struct GeodesicsArgs {
  CommonArgs common;
  std::filesystem::path data;
  std::filesystem::path out;
};
int cmd_geodesics(const GeodesicsArgs& args);

struct TrainArgs {
  CommonArgs common;
  std::filesystem::path data;
  std::filesystem::path geo;
  std::filesystem::path out_root;  // empty: $BLAE_RUN_ROOT or "runs"
  bool svg = false;
  std::filesystem::path run_dir_out;  // filled on success
};
int cmd_train(TrainArgs& args);

struct EvalArgs {
  CommonArgs common;
  std::filesystem::path data;
  std::filesystem::path geo;
  std::vector<std::filesystem::path> runs;
  std::filesystem::path out;  // aggregate JSON; default <first run>/../eval_summary.json
};
int cmd_eval(const EvalArgs& args);

struct SweepArgs {
  CommonArgs common;
  std::filesystem::path data;  // reused for axes that do not touch the data
  std::filesystem::path geo;
  std::string axis;
  std::vector<std::string> values;  // empty: per-axis defaults
  std::filesystem::path out_root;
  int jobs = 1;
};
int cmd_sweep(const SweepArgs& args);

struct LandscapeArgs {
  CommonArgs common;
  std::filesystem::path data;
  std::filesystem::path geo;
  std::filesystem::path theta0;  // run dir; loads the *_init checkpoints
  std::filesystem::path theta1;  // run dir; loads the final checkpoints
  std::filesystem::path theta2;
  int grid = 41;
  std::filesystem::path out_prefix;
};
int cmd_landscape(const LandscapeArgs& args);

/// Runs `fn`, translating exceptions into the documented exit codes.
int guarded(const std::function<int()>& fn);

}  // namespace blae::cli
