#include <CLI11.hpp>
#include <cstdint>
#include <string>

#include "blae/cli.hpp"

namespace cli = blae::cli;

namespace {

void add_common(CLI::App* cmd, cli::CommonArgs& common, std::string& seed_text) {
  cmd->add_option("--config", common.config_path, "JSON config file with flat keys");
  cmd->add_option("--preset", common.preset, "named preset (see README)");
  cmd->add_option("--set", common.overrides, "key=value config override")->take_all();
  cmd->add_option("--seed", seed_text, "root RNG seed");
  cmd->add_flag("--force", common.force, "overwrite existing outputs");
}

void finish_common(cli::CommonArgs& common, const std::string& seed_text) {
  if (!seed_text.empty()) common.seed = std::stoull(seed_text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-Lipschitz autoencoder experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cli::kVersion));

  cli::GenerateArgs gen;
  std::string gen_seed;
  auto* c_gen = app.add_subcommand("generate", "sample a synthetic manifold to CSV");
  add_common(c_gen, gen.common, gen_seed);
  c_gen->add_option("--out", gen.out, "output dataset CSV")->required();
  c_gen->add_option("--stats", gen.stats, "stats JSON path (default <out>.stats.json)");

  cli::GeodesicsArgs geo;
  std::string geo_seed;
  auto* c_geo = app.add_subcommand("geodesics", "k-NN graph shortest-path distances");
  add_common(c_geo, geo.common, geo_seed);
  c_geo->add_option("--data", geo.data, "dataset CSV")->required();
  c_geo->add_option("--out", geo.out, "output GEO1 binary")->required();

  cli::TrainArgs train;
  std::string train_seed;
  auto* c_train = app.add_subcommand("train", "train one autoencoder run");
  add_common(c_train, train.common, train_seed);
  c_train->add_option("--data", train.data, "dataset CSV")->required();
  c_train->add_option("--geo", train.geo, "geodesic GEO1 file")->required();
  c_train->add_option("--out-root", train.out_root,
                      "run directory root (default $BLAE_RUN_ROOT or ./runs)");
  c_train->add_flag("--svg", train.svg, "render embedding and loss-curve SVGs");

  cli::EvalArgs eval;
  std::string eval_seed;
  auto* c_eval = app.add_subcommand("eval", "evaluate trained runs");
  add_common(c_eval, eval.common, eval_seed);
  c_eval->add_option("--data", eval.data, "dataset CSV")->required();
  c_eval->add_option("--geo", eval.geo, "geodesic GEO1 file")->required();
  c_eval->add_option("--run", eval.runs, "run directory (repeatable)")->required()->take_all();
  c_eval->add_option("--out", eval.out, "aggregate summary JSON path");

  cli::SweepArgs sweep;
  std::string sweep_seed;
  auto* c_sweep = app.add_subcommand("sweep", "train one run per value of a parameter axis");
  add_common(c_sweep, sweep.common, sweep_seed);
  c_sweep->add_option("--axis", sweep.axis, "kappa | epsilon | b | n_samples | length")
      ->required();
  c_sweep->add_option("--values", sweep.values, "axis values (defaults per axis)")->take_all();
  c_sweep->add_option("--data", sweep.data, "dataset CSV (loss axes only)");
  c_sweep->add_option("--geo", sweep.geo, "geodesic GEO1 file (loss axes only)");
  c_sweep->add_option("--out-root", sweep.out_root, "sweep output root");
  c_sweep->add_option("--jobs", sweep.jobs, "concurrent trials");

  cli::LandscapeArgs land;
  std::string land_seed;
  auto* c_land = app.add_subcommand("landscape", "loss scan on a 2-D parameter plane");
  add_common(c_land, land.common, land_seed);
  c_land->add_option("--data", land.data, "dataset CSV")->required();
  c_land->add_option("--geo", land.geo, "geodesic GEO1 file")->required();
  c_land->add_option("--theta0", land.theta0, "run dir for the init snapshot")->required();
  c_land->add_option("--theta1", land.theta1, "run dir for the first trained snapshot")
      ->required();
  c_land->add_option("--theta2", land.theta2, "run dir for the second trained snapshot")
      ->required();
  c_land->add_option("--grid", land.grid, "grid resolution per axis");
  c_land->add_option("--out-prefix", land.out_prefix, "output CSV prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  if (c_gen->parsed())
    return cli::guarded([&] {
      finish_common(gen.common, gen_seed);
      return cli::cmd_generate(gen);
    });
  if (c_geo->parsed())
    return cli::guarded([&] {
      finish_common(geo.common, geo_seed);
      return cli::cmd_geodesics(geo);
    });
  if (c_train->parsed())
    return cli::guarded([&] {
      finish_common(train.common, train_seed);
      return cli::cmd_train(train);
    });
  if (c_eval->parsed())
    return cli::guarded([&] {
      finish_common(eval.common, eval_seed);
      return cli::cmd_eval(eval);
    });
  if (c_sweep->parsed())
    return cli::guarded([&] {
      finish_common(sweep.common, sweep_seed);
      return cli::cmd_sweep(sweep);
    });
  if (c_land->parsed())
    return cli::guarded([&] {
      finish_common(land.common, land_seed);
      return cli::cmd_landscape(land);
    });
  return cli::kExitConfig;
}
