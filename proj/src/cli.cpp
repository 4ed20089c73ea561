#include "blae/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include "blae/errors.hpp"
#include "blae/metrics.hpp"
#include "blae/rng.hpp"
#include "blae/svg.hpp"

namespace fs = std::filesystem;

namespace blae::cli {

namespace {

std::string short_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Written with success=false before any work starts and rewritten on exit.
class Manifest {
 public:
  Manifest(const fs::path& path, const std::string& command, const fs::path& config_path,
           const Config& cfg, const fs::path& output)
      : path_(path) {
    doc_["command"] = command;
    doc_["config_path"] = config_path.string();
    doc_["config"] = cfg;
    doc_["output"] = output.string();
    doc_["started_at"] = iso_now();
    doc_["finished_at"] = "";
    doc_["success"] = false;
    doc_["version"] = kVersion;
    write();
  }

  void finalize(bool success) {
    doc_["finished_at"] = iso_now();
    doc_["success"] = success;
    write();
  }

 private:
  void write() const {
    std::ofstream f(path_);
    if (!f) throw DataError("cannot write manifest " + path_.string());
    f << doc_.dump(2) << "\n";
  }

  fs::path path_;
  Config doc_;
};

Config base_config() {
  Config cfg = Config::object();
  cfg["seed"] = 0;
  cfg["method"] = "custom";
  cfg["data.manifold"] = "swiss_roll";
  cfg["data.n_samples"] = 1500;
  cfg["data.b"] = 0.1;
  cfg["data.s_min"] = -2.0;
  cfg["data.s_max"] = 10.0;
  cfg["data.z_min"] = 0.0;
  cfg["data.z_max"] = 6.0;
  cfg["data.strip"] = {1.5, 6.5, 2.5, 3.5};
  cfg["data.arm_length"] = 1.0;
  cfg["data.angle"] = std::numbers::pi / 3.0;
  cfg["data.noise"] = 0.0;
  cfg["geo.k"] = 10;
  cfg["train.epochs"] = 3000;
  cfg["train.batch_size"] = 500;
  cfg["train.lr"] = 2e-3;
  cfg["train.lr_decay"] = 0.1;
  cfg["train.lr_step"] = 1000;
  cfg["train.weight_decay"] = 1e-5;
  cfg["train.adam_beta1"] = 0.9;
  cfg["train.adam_beta2"] = 0.999;
  cfg["train.adam_eps"] = 1e-8;
  cfg["train.arch"] = {3, 256, 256, 2};
  cfg["train.activation"] = "elu";
  cfg["loss.lambda_reg"] = 1.0;
  cfg["loss.lambda_bilip"] = 0.3;
  cfg["loss.kappa"] = 1.0;
  cfg["loss.epsilon"] = 0.3;
  cfg["loss.alpha"] = 5.0;
  cfg["loss.delta"] = 0.0;
  cfg["loss.jac_subsample"] = 0.1;
  cfg["loss.baseline"] = "none";
  cfg["loss.baseline_weight"] = 0.0;
  cfg["eval.ks"] = {5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  cfg["eval.bandwidths"] = {0.01, 0.1, 1.0};
  cfg["eval.bilip_tol"] = 0.05;
  cfg["landscape.grid"] = 41;
  return cfg;
}

void apply_loss_preset(Config& cfg, const LossConfig& loss) {
  cfg["loss.lambda_reg"] = loss.lambda_reg;
  cfg["loss.lambda_bilip"] = loss.lambda_bilip;
  cfg["loss.kappa"] = loss.kappa;
  cfg["loss.epsilon"] = loss.epsilon;
  cfg["loss.alpha"] = loss.alpha;
  cfg["loss.delta"] = loss.delta;
  cfg["loss.jac_subsample"] = loss.jac_subsample;
  cfg["loss.baseline"] = baseline_name(loss.baseline);
  cfg["loss.baseline_weight"] = loss.baseline_weight;
}

void apply_vshape_defaults(Config& cfg) {
  cfg["data.manifold"] = "vshape";
  cfg["data.n_samples"] = 20;
  cfg["geo.k"] = 3;
  cfg["train.arch"] = {2, 16, 16, 1};
  cfg["train.batch_size"] = 20;
  cfg["loss.jac_subsample"] = 1.0;
  cfg["eval.ks"] = {3, 5, 7};
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names = {"default", "blae-swissroll", "blae-vshape", "vanilla-vshape"};
  for (const auto& tag : ablation_tags()) names.push_back(tag);
  return names;
}

Config preset_config(const std::string& name) {
  Config cfg = base_config();
  if (name.empty() || name == "default") return cfg;
  if (name == "blae-swissroll") {
    cfg["method"] = name;
    return cfg;  // base already carries the Swiss Roll BLAE settings
  }
  if (name == "blae-vshape") {
    apply_vshape_defaults(cfg);
    cfg["method"] = name;
    return cfg;
  }
  if (name == "vanilla-vshape") {
    apply_vshape_defaults(cfg);
    apply_loss_preset(cfg, ablation_preset("vanilla"));
    cfg["method"] = name;
    return cfg;
  }
  for (const auto& tag : ablation_tags()) {
    if (name == tag) {
      apply_loss_preset(cfg, ablation_preset(tag));
      cfg["method"] = tag;
      return cfg;
    }
  }
  throw ConfigError("unknown preset '" + name + "'");
}

namespace {

Config parse_set_value(const std::string& text) {
  Config v = Config::parse(text, nullptr, false);
  if (v.is_discarded()) return Config(text);  // bare string
  return v;
}

void check_known_keys(const Config& cfg) {
  static const std::set<std::string> known = [] {
    std::set<std::string> keys;
    for (const auto& [k, v] : base_config().items()) keys.insert(k);
    keys.insert("preset");
    return keys;
  }();
  for (const auto& [k, v] : cfg.items())
    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
}

}  // namespace

Config resolve_config(const std::string& preset, const fs::path& config_path,
                      const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed_flag) {
  Config file = Config::object();
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw DataError("cannot open config file " + config_path.string());
    file = Config::parse(f, nullptr, false);
    if (file.is_discarded() || !file.is_object())
      throw ConfigError("config file " + config_path.string() + " is not a JSON object");
    check_known_keys(file);
  }

  std::string base = preset;
  if (base.empty() && file.contains("preset")) base = file["preset"].get<std::string>();
  Config cfg = preset_config(base);
  if (!base.empty()) cfg["method"] = base == "default" ? "custom" : base;

  for (const auto& [k, v] : file.items()) {
    if (k == "preset") continue;
    cfg[k] = v;
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + ov + "'");
    const std::string key = ov.substr(0, eq);
    if (!cfg.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    cfg[key] = parse_set_value(ov.substr(eq + 1));
  }
  if (seed_flag) cfg["seed"] = *seed_flag;
  return cfg;
}

namespace {

double cfg_double(const Config& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

int cfg_int(const Config& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

std::string cfg_str(const Config& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

SwissRollSpec swiss_spec_from(const Config& cfg) {
  SwissRollSpec spec;
  spec.b = cfg_double(cfg, "data.b");
  spec.s_range = {cfg_double(cfg, "data.s_min"), cfg_double(cfg, "data.s_max")};
  spec.z_range = {cfg_double(cfg, "data.z_min"), cfg_double(cfg, "data.z_max")};
  const auto& strip = cfg.at("data.strip");
  if (strip.is_null()) {
    spec.strip.reset();
  } else if (strip.is_array() && strip.size() == 4) {
    spec.strip = Rect{{strip[0].get<double>(), strip[1].get<double>()},
                      {strip[2].get<double>(), strip[3].get<double>()}};
  } else {
    throw ConfigError("data.strip must be null or [s_lo, s_hi, z_lo, z_hi]");
  }
  const int n = cfg_int(cfg, "data.n_samples");
  if (n < 0) throw ConfigError("data.n_samples must be nonnegative");
  spec.n_samples = static_cast<std::size_t>(n);
  spec.seed = cfg.at("seed").get<std::uint64_t>();
  return spec;
}

VShapeSpec vshape_spec_from(const Config& cfg) {
  VShapeSpec spec;
  const int n = cfg_int(cfg, "data.n_samples");
  if (n < 0) throw ConfigError("data.n_samples must be nonnegative");
  spec.n_samples = static_cast<std::size_t>(n);
  spec.arm_length = cfg_double(cfg, "data.arm_length");
  spec.angle = cfg_double(cfg, "data.angle");
  spec.noise = cfg_double(cfg, "data.noise");
  spec.seed = cfg.at("seed").get<std::uint64_t>();
  return spec;
}

LossConfig loss_config_from(const Config& cfg) {
  LossConfig loss;
  loss.lambda_reg = cfg_double(cfg, "loss.lambda_reg");
  loss.lambda_bilip = cfg_double(cfg, "loss.lambda_bilip");
  loss.kappa = cfg_double(cfg, "loss.kappa");
  loss.epsilon = cfg_double(cfg, "loss.epsilon");
  loss.alpha = cfg_double(cfg, "loss.alpha");
  loss.delta = cfg_double(cfg, "loss.delta");
  loss.jac_subsample = cfg_double(cfg, "loss.jac_subsample");
  loss.baseline = baseline_from_name(cfg_str(cfg, "loss.baseline"));
  loss.baseline_weight = cfg_double(cfg, "loss.baseline_weight");
  return loss;
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  tc.epochs = cfg_int(cfg, "train.epochs");
  tc.batch_size = cfg_int(cfg, "train.batch_size");
  tc.lr = cfg_double(cfg, "train.lr");
  tc.lr_decay = cfg_double(cfg, "train.lr_decay");
  tc.lr_step = cfg_int(cfg, "train.lr_step");
  tc.weight_decay = cfg_double(cfg, "train.weight_decay");
  tc.adam_beta1 = cfg_double(cfg, "train.adam_beta1");
  tc.adam_beta2 = cfg_double(cfg, "train.adam_beta2");
  tc.adam_eps = cfg_double(cfg, "train.adam_eps");
  tc.seed = cfg.at("seed").get<std::uint64_t>();
  tc.loss = loss_config_from(cfg);
  const auto& arch = cfg.at("train.arch");
  if (!arch.is_array() || arch.size() < 2) throw ConfigError("train.arch must be a width array");
  tc.arch.clear();
  for (const auto& w : arch) tc.arch.push_back(w.get<int>());
  tc.activation = activation_from_name(cfg_str(cfg, "train.activation"));
  return tc;
}

std::string config_hash(const Config& cfg) {
  const std::uint64_t h = fnv1a64(cfg.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& col_prefix,
                     const fs::path& path) {
  std::string out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (c) out.push_back(',');
    out += col_prefix + std::to_string(c);
  }
  out.push_back('\n');
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out.push_back(',');
      out += short_double(m(r, c));
    }
    out.push_back('\n');
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << out;
}

Eigen::MatrixXd load_matrix_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty CSV " + path.string());
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      double v = 0.0;
      auto res = std::from_chars(line.data() + start, line.data() + end, v);
      if (res.ec != std::errc()) throw DataError("malformed CSV " + path.string());
      row.push_back(v);
      start = end + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in " + path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size())
      throw DataError("ragged CSV " + path.string());
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

namespace {

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p))
    throw ConfigError(p.string() + " exists; pass --force to overwrite");
}

PointCloud generate_from_config(const Config& cfg, std::size_t* rejections) {
  const std::string manifold = cfg_str(cfg, "data.manifold");
  if (manifold == "swiss_roll") return generate_swiss_roll(swiss_spec_from(cfg), rejections);
  if (manifold == "vshape") {
    if (rejections) *rejections = 0;
    return generate_vshape(vshape_spec_from(cfg));
  }
  throw ConfigError("unknown manifold '" + manifold + "'");
}

void write_loss_csv(const std::vector<StepRecord>& curve, const fs::path& path) {
  std::string out = "step,recon,inj,nonexp,bilip,baseline,total\n";
  for (const StepRecord& row : curve) {
    out += std::to_string(row.step) + "," + short_double(row.loss.recon) + "," +
           short_double(row.loss.inj) + "," + short_double(row.loss.nonexp) + "," +
           short_double(row.loss.bilip) + "," + short_double(row.loss.baseline) + "," +
           short_double(row.loss.total) + "\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << out;
}

struct RunEval {
  EvalReport report;
  double bilip_fraction = 0.0;
  bool latent_connected = true;
  std::string method;
};

RunEval evaluate_run(const PointCloud& cloud, const GeodesicMatrix& geo, const KnnGraph& data_graph,
                     const Mlp& encoder, const Mlp& decoder, const Eigen::MatrixXd& embedding,
                     const Config& eval_cfg, double kappa) {
  RunEval out;
  const int k = geo.k > 0 ? geo.k : data_graph.k;

  const KnnGraph latent_graph = build_knn_graph(embedding, k);
  const GeodesicMatrix geo_latent = all_pairs_geodesics(latent_graph);
  out.latent_connected = geo_latent.connected;

  std::vector<int> ks;
  for (const auto& v : eval_cfg.at("eval.ks")) ks.push_back(v.get<int>());
  const RecallResult recall = knn_recall(geo, geo_latent, ks);
  out.report.per_k_recall = recall.per_k;
  out.report.knn_recall = recall.mean;

  for (const auto& v : eval_cfg.at("eval.bandwidths")) {
    const double bw = v.get<double>();
    if (geo.connected && geo_latent.connected)
      out.report.kl[bw] = kl_sigma(geo, geo_latent, bw);
  }

  out.report.mse = recon_mse(cloud, encoder, decoder);

  const BilipCheck check =
      verify_bilip(encoder, cloud, data_graph, std::max(kappa, 1.0),
                   cfg_double(eval_cfg, "eval.bilip_tol"));
  out.report.bilip_ratio_bounds = check.ratio_bounds;
  out.bilip_fraction = check.fraction_within;
  return out;
}

nlohmann::json run_eval_json(const RunEval& ev) {
  nlohmann::json doc = nlohmann::json::parse(eval_report_json(ev.report));
  doc["bilip_fraction"] = ev.bilip_fraction;
  doc["latent_connected"] = ev.latent_connected;
  doc["method"] = ev.method;
  return doc;
}

}  // namespace

int cmd_generate(const GenerateArgs& args) {
  const Config cfg = resolve_config(args.common.preset, args.common.config_path,
                                    args.common.overrides, args.common.seed);
  if (args.out.empty()) throw ConfigError("generate: --out is required");
  refuse_overwrite(args.out, args.common.force);
  const fs::path stats_path = args.stats.empty() ? fs::path(args.out.string() + ".stats.json")
                                                 : args.stats;

  Manifest manifest(args.out.string() + ".manifest.json", "generate", args.common.config_path,
                    cfg, args.out);
  std::size_t rejections = 0;
  const PointCloud cloud = generate_from_config(cfg, &rejections);
  save_csv(cloud, args.out);

  nlohmann::json stats{{"n", cloud.size()},
                       {"ambient_dim", cloud.ambient_dim()},
                       {"intrinsic_dim", cloud.intrinsic_dim()},
                       {"strip_rejections", rejections}};
  std::vector<double> bb_min, bb_max;
  for (Eigen::Index c = 0; c < cloud.ambient_dim(); ++c) {
    bb_min.push_back(cloud.points.col(c).minCoeff());
    bb_max.push_back(cloud.points.col(c).maxCoeff());
  }
  stats["bounding_box"] = {bb_min, bb_max};
  std::ofstream sf(stats_path);
  sf << stats.dump(2) << "\n";

  std::cout << "wrote " << cloud.size() << " points to " << args.out.string() << " ("
            << rejections << " strip rejections)\n";
  manifest.finalize(true);
  return kExitOk;
}

int cmd_geodesics(const GeodesicsArgs& args) {
  const Config cfg = resolve_config(args.common.preset, args.common.config_path,
                                    args.common.overrides, args.common.seed);
  if (args.out.empty()) throw ConfigError("geodesics: --out is required");
  refuse_overwrite(args.out, args.common.force);

  const PointCloud cloud = load_csv(args.data);
  Manifest manifest(args.out.string() + ".manifest.json", "geodesics", args.common.config_path,
                    cfg, args.out);

  const int k = cfg_int(cfg, "geo.k");
  const KnnGraph graph = build_knn_graph(cloud, k);
  const GeodesicMatrix geo = all_pairs_geodesics(graph);
  save_geo(geo, args.out);

  const double dmin = delta_min_finite(geo);
  std::cout << "geodesics: N=" << geo.size() << " k=" << k << " connected="
            << (geo.connected ? "true" : "false") << " delta_min=" << short_double(dmin) << "\n";
  if (!geo.connected)
    std::cerr << "warning: k-NN graph is disconnected; unreachable pairs stored as inf\n";
  manifest.finalize(true);
  return kExitOk;
}

int cmd_train(TrainArgs& args) {
  const Config cfg = resolve_config(args.common.preset, args.common.config_path,
                                    args.common.overrides, args.common.seed);
  const PointCloud cloud = load_csv(args.data);
  const GeodesicMatrix geo = load_geo(args.geo);

  fs::path root = args.out_root;
  if (root.empty()) {
    const char* env = std::getenv(kRunRootEnv);
    root = env != nullptr ? fs::path(env) : fs::path("runs");
  }
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const fs::path run_dir = root / (config_hash(cfg) + "-s" + std::to_string(seed));
  if (fs::exists(run_dir / "manifest.json") && !args.common.force)
    throw ConfigError(run_dir.string() + " exists; pass --force to overwrite");
  fs::create_directories(run_dir);
  args.run_dir_out = run_dir;

  Manifest manifest(run_dir / "manifest.json", "train", args.common.config_path, cfg, run_dir);
  {
    std::ofstream cf(run_dir / "config.json");
    cf << cfg.dump(2) << "\n";
  }

  const TrainConfig tc = train_config_from(cfg);
  const RunArtifacts art = train(cloud, geo, tc);

  save_checkpoint(art.encoder_init, run_dir / "encoder_init.json");
  save_checkpoint(art.decoder_init, run_dir / "decoder_init.json");
  save_checkpoint(art.encoder, run_dir / "encoder.json");
  save_checkpoint(art.decoder, run_dir / "decoder.json");
  write_loss_csv(art.curve, run_dir / "losses.csv");
  save_matrix_csv(art.embedding, "z", run_dir / "embedding.csv");

  if (args.svg) {
    write_scatter_svg(run_dir / "embedding.svg", art.embedding, cloud.labels, "latent embedding");
    std::vector<double> totals;
    totals.reserve(art.curve.size());
    for (const StepRecord& row : art.curve) totals.push_back(row.loss.total);
    write_curve_svg(run_dir / "loss.svg", totals, "total loss per step");
  }

  if (art.failed) {
    std::cerr << "training aborted: " << art.failure_reason << " (partial artifacts in "
              << run_dir.string() << ")\n";
    manifest.finalize(false);
    return kExitNumeric;
  }

  const LossBreakdown& fin = art.final_loss();
  std::cout << "run " << run_dir.string() << ": total=" << short_double(fin.total)
            << " recon=" << short_double(fin.recon) << " delta=" << short_double(art.resolved_delta)
            << " wall=" << short_double(art.wall_seconds) << "s\n";
  manifest.finalize(true);
  return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
  const Config cfg = resolve_config(args.common.preset, args.common.config_path,
                                    args.common.overrides, args.common.seed);
  if (args.runs.empty()) throw ConfigError("eval: at least one --run is required");

  const PointCloud cloud = load_csv(args.data);
  const GeodesicMatrix geo = load_geo(args.geo);
  const int k = geo.k > 0 ? geo.k : cfg_int(cfg, "geo.k");
  const KnnGraph data_graph = build_knn_graph(cloud, k);

  std::map<std::string, std::vector<EvalReport>> grouped;
  std::vector<RunEval> evals;
  for (const fs::path& run : args.runs) {
    if (!fs::exists(run / "encoder.json"))
      throw DataError("run directory " + run.string() + " lacks encoder.json");
    const Mlp encoder = load_checkpoint(run / "encoder.json");
    const Mlp decoder = load_checkpoint(run / "decoder.json");
    Eigen::MatrixXd embedding;
    if (fs::exists(run / "embedding.csv"))
      embedding = load_matrix_csv(run / "embedding.csv");
    else
      embedding = forward_batch(encoder, cloud.points);
    if (embedding.rows() != cloud.size())
      throw DataError("embedding in " + run.string() + " does not match the dataset");

    double kappa = cfg_double(cfg, "loss.kappa");
    std::string method = "custom";
    if (fs::exists(run / "config.json")) {
      std::ifstream rc(run / "config.json");
      const Config run_cfg = Config::parse(rc);
      kappa = run_cfg.value("loss.kappa", kappa);
      method = run_cfg.value("method", method);
    }

    RunEval ev = evaluate_run(cloud, geo, data_graph, encoder, decoder, embedding, cfg, kappa);
    ev.method = method;
    evals.push_back(ev);
    grouped[method].push_back(ev.report);

    std::ofstream jf(run / "eval.json");
    jf << run_eval_json(ev).dump(2) << "\n";
    std::cout << run.string() << ": knn_recall=" << short_double(ev.report.knn_recall)
              << " mse=" << short_double(ev.report.mse) << "\n";
  }

  if (args.runs.size() > 1) {
    const fs::path out = args.out.empty() ? fs::path("eval_summary.json") : args.out;
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [method, reports] : grouped) {
      auto stats = [&](const std::function<double(const EvalReport&)>& get) {
        double mean = 0.0;
        for (const auto& r : reports) mean += get(r);
        mean /= static_cast<double>(reports.size());
        double var = 0.0;
        for (const auto& r : reports) var += (get(r) - mean) * (get(r) - mean);
        return nlohmann::json{{"mean", mean},
                              {"std", std::sqrt(var / static_cast<double>(reports.size()))}};
      };
      nlohmann::json entry;
      entry["knn_recall"] = stats([](const EvalReport& r) { return r.knn_recall; });
      entry["mse"] = stats([](const EvalReport& r) { return r.mse; });
      for (const auto& [bw, v] : reports.front().kl)
        entry["kl_" + short_double(bw)] =
            stats([bw = bw](const EvalReport& r) { return r.kl.at(bw); });
      entry["runs"] = reports.size();
      summary[method] = entry;
    }
    std::ofstream sf(out);
    sf << summary.dump(2) << "\n";

    bool rankable = true;
    std::size_t per_method = grouped.begin()->second.size();
    for (const auto& [m, rs] : grouped) rankable = rankable && rs.size() == per_method;
    if (rankable) {
      const RankTable table = rank_table(grouped);
      fs::path ranks = out;
      ranks.replace_extension(".ranks.csv");
      std::ofstream rf(ranks);
      rf << table.to_csv();
      std::cout << "ranks written to " << ranks.string() << "\n";
    }
  }
  return kExitOk;
}

int cmd_sweep(const SweepArgs& args) {
  const Config cfg = resolve_config(args.common.preset, args.common.config_path,
                                    args.common.overrides, args.common.seed);
  static const std::map<std::string, std::vector<std::string>> kDefaults = {
      {"kappa", {"1.0", "1.1", "1.2", "1.5", "2.0", "5.0", "10.0"}},
      {"epsilon", {"0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8"}},
      {"b", {"0.1", "0.12", "0.15"}},
      {"n_samples", {"400", "1000", "3000"}},
      {"length", {"long", "short"}}};
  const auto it = kDefaults.find(args.axis);
  if (it == kDefaults.end()) throw ConfigError("unknown sweep axis '" + args.axis + "'");
  const std::vector<std::string> values = args.values.empty() ? it->second : args.values;
  const bool data_axis = args.axis == "b" || args.axis == "n_samples" || args.axis == "length";

  fs::path root = args.out_root;
  if (root.empty()) {
    const char* env = std::getenv(kRunRootEnv);
    root = env != nullptr ? fs::path(env) / "sweep" : fs::path("runs") / "sweep";
  }
  fs::create_directories(root);
  Manifest manifest(root / "manifest.json", "sweep", args.common.config_path, cfg, root);

  // Shared inputs for loss-axis sweeps.
  PointCloud shared_cloud;
  GeodesicMatrix shared_geo;
  KnnGraph shared_graph;
  if (!data_axis) {
    shared_cloud = load_csv(args.data);
    shared_geo = load_geo(args.geo);
    shared_graph = build_knn_graph(shared_cloud, shared_geo.k > 0 ? shared_geo.k : cfg_int(cfg, "geo.k"));
  }

  struct Trial {
    std::string value;
    fs::path dir;
    RunEval eval;
    bool done = false;
    std::string error;
  };
  std::vector<Trial> trials(values.size());

  auto run_trial = [&](std::size_t vi) {
    Trial& trial = trials[vi];
    trial.value = values[vi];
    Config tcfg = cfg;
    if (args.axis == "kappa") tcfg["loss.kappa"] = std::stod(trial.value);
    if (args.axis == "epsilon") tcfg["loss.epsilon"] = std::stod(trial.value);
    if (args.axis == "b") tcfg["data.b"] = std::stod(trial.value);
    if (args.axis == "n_samples") tcfg["data.n_samples"] = std::stoi(trial.value);
    if (args.axis == "length") {
      if (trial.value == "long") {
        tcfg["data.s_min"] = -2.0;
        tcfg["data.strip"] = {1.5, 6.5, 2.5, 3.5};
      } else if (trial.value == "short") {
        tcfg["data.s_min"] = 1.0;
        tcfg["data.strip"] = {3.5, 7.5, 2.5, 3.5};
      } else {
        throw ConfigError("length axis expects values 'long' or 'short'");
      }
    }

    trial.dir = root / (args.axis + "-" + trial.value);
    fs::create_directories(trial.dir);

    PointCloud cloud;
    GeodesicMatrix geo;
    const KnnGraph* data_graph = nullptr;
    KnnGraph local_graph;
    if (data_axis) {
      cloud = generate_from_config(tcfg, nullptr);
      save_csv(cloud, trial.dir / "dataset.csv");
      local_graph = build_knn_graph(cloud, cfg_int(tcfg, "geo.k"));
      geo = all_pairs_geodesics(local_graph);
      save_geo(geo, trial.dir / "geodesics.bin");
      data_graph = &local_graph;
    } else {
      data_graph = &shared_graph;
    }
    const PointCloud& cl = data_axis ? cloud : shared_cloud;
    const GeodesicMatrix& gm = data_axis ? geo : shared_geo;

    const TrainConfig tc = train_config_from(tcfg);
    const RunArtifacts art = train(cl, gm, tc);
    if (art.failed) throw NumericError("trial " + trial.value + ": " + art.failure_reason);

    save_checkpoint(art.encoder, trial.dir / "encoder.json");
    save_checkpoint(art.decoder, trial.dir / "decoder.json");
    write_loss_csv(art.curve, trial.dir / "losses.csv");
    save_matrix_csv(art.embedding, "z", trial.dir / "embedding.csv");
    {
      std::ofstream cf(trial.dir / "config.json");
      cf << tcfg.dump(2) << "\n";
    }

    trial.eval = evaluate_run(cl, gm, *data_graph, art.encoder, art.decoder, art.embedding, tcfg,
                              cfg_double(tcfg, "loss.kappa"));
    trial.eval.method = args.axis + "=" + trial.value;
    std::ofstream jf(trial.dir / "eval.json");
    jf << run_eval_json(trial.eval).dump(2) << "\n";
    trial.done = true;
  };

  const int jobs = std::max(1, args.jobs);
  std::vector<std::thread> pool;
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t vi;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= trials.size()) return;
        vi = next++;
      }
      try {
        run_trial(vi);
      } catch (const std::exception& e) {
        trials[vi].error = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::string csv = "axis,value,knn_recall,kl_0.01,kl_0.1,kl_1,mse\n";
  bool all_ok = true;
  for (const Trial& trial : trials) {
    if (!trial.done) {
      all_ok = false;
      std::cerr << "trial " << trial.value << " failed: " << trial.error << "\n";
      continue;
    }
    const EvalReport& r = trial.eval.report;
    auto kl_or_nan = [&](double bw) {
      return r.kl.contains(bw) ? short_double(r.kl.at(bw)) : std::string("nan");
    };
    csv += args.axis + "," + trial.value + "," + short_double(r.knn_recall) + "," +
           kl_or_nan(0.01) + "," + kl_or_nan(0.1) + "," + kl_or_nan(1.0) + "," +
           short_double(r.mse) + "\n";
  }
  std::ofstream cf(root / "sweep.csv");
  cf << csv;
  std::cout << "sweep results in " << (root / "sweep.csv").string() << "\n";
  manifest.finalize(all_ok);
  if (!all_ok) throw NumericError("one or more sweep trials failed");
  return kExitOk;
}

int cmd_landscape(const LandscapeArgs& args) {
  Config cfg = resolve_config(args.common.preset, args.common.config_path,
                              args.common.overrides, args.common.seed);
  if (args.out_prefix.empty()) throw ConfigError("landscape: --out-prefix is required");

  const PointCloud cloud = load_csv(args.data);
  const GeodesicMatrix geo = load_geo(args.geo);
  const int grid = args.grid > 0 ? args.grid : cfg_int(cfg, "landscape.grid");

  auto snapshot = [](const fs::path& dir, bool init) {
    const fs::path enc = dir / (init ? "encoder_init.json" : "encoder.json");
    const fs::path dec = dir / (init ? "decoder_init.json" : "decoder.json");
    if (!fs::exists(enc) || !fs::exists(dec))
      throw DataError("run directory " + dir.string() + " lacks " + enc.filename().string());
    return snapshot_parameters(load_checkpoint(enc), load_checkpoint(dec));
  };
  const Eigen::VectorXd theta0 = snapshot(args.theta0, true);
  const Eigen::VectorXd theta1 = snapshot(args.theta1, false);
  const Eigen::VectorXd theta2 = snapshot(args.theta2, false);

  Manifest manifest(args.out_prefix.string() + ".manifest.json", "landscape",
                    args.common.config_path, cfg, args.out_prefix);

  const TrainConfig tc = train_config_from(cfg);
  const LandscapeScan scan = landscape_scan(cloud, geo, tc, theta0, theta1, theta2, grid);

  auto write_grid = [&](const Eigen::MatrixXd& vals, const fs::path& path) {
    std::string out = "a,b,loss\n";
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j)
        out += short_double(scan.coords[static_cast<std::size_t>(i)]) + "," +
               short_double(scan.coords[static_cast<std::size_t>(j)]) + "," +
               short_double(vals(i, j)) + "\n";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string() + " for writing");
    f << out;
  };
  write_grid(scan.recon, args.out_prefix.string() + "_recon.csv");
  write_grid(scan.recon_reg, args.out_prefix.string() + "_reg.csv");

  std::cout << "landscape grids written to " << args.out_prefix.string() << "_{recon,reg}.csv\n";
  manifest.finalize(true);
  return kExitOk;
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace blae::cli
