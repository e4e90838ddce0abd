// Command-line front end: training (centralized and parameter-server),
// evaluation, community detection, smoothing diagnostics and dataset
// generation.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ucmf/analysis.hpp"
#include "ucmf/datasets.hpp"
#include "ucmf/distributed.hpp"
#include "ucmf/metrics.hpp"
#include "ucmf/serialize.hpp"
#include "ucmf/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct DatasetArgs {
  std::string edges, features, labels, split;
  int nodes = 0;  // 0 = infer from the edge file
  bool normalize_features = true;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args, bool edges_required = true) {
  auto* e = cmd->add_option("--edges", args.edges, "edge list file (u v per line)");
  if (edges_required) e->required();
  cmd->add_option("--features", args.features, "feature TSV, one row per node");
  cmd->add_option("--labels", args.labels, "label TSV: node_id class_id");
  cmd->add_option("--split", args.split, "split TSV: node_id {train|val|test}");
  cmd->add_option("--nodes", args.nodes, "node count (default: max id in edge file + 1)");
  cmd->add_flag("--normalize-features,!--no-normalize-features", args.normalize_features,
                "L1-normalize feature rows (default on)");
}

int infer_node_count(const std::string& edge_path) {
  std::ifstream in(edge_path);
  if (!in) throw ucmf::FormatError("cannot open edge file: " + edge_path);
  std::string line;
  long long max_id = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long long u, v;
    if (ss >> u >> v) max_id = std::max({max_id, u, v});
  }
  if (max_id < 0) throw ucmf::FormatError("edge file has no edges: " + edge_path);
  return static_cast<int>(max_id + 1);
}

struct LoadedData {
  ucmf::Graph graph;
  ucmf::NodeData data;
};

LoadedData load_dataset(const DatasetArgs& args) {
  const int n = args.nodes > 0 ? args.nodes : infer_node_count(args.edges);
  LoadedData out;
  out.graph = ucmf::load_graph(args.edges, n);
  out.data = ucmf::load_node_data(args.features, args.labels, args.split, out.graph,
                                  args.normalize_features);
  return out;
}

json dataset_manifest(const DatasetArgs& args) {
  json j;
  for (const auto& [key, path] : std::initializer_list<std::pair<const char*, std::string>>{
           {"edges", args.edges},
           {"features", args.features},
           {"labels", args.labels},
           {"split", args.split}}) {
    if (path.empty()) continue;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(ucmf::fnv1a_file(path)));
    j[key] = {{"path", path}, {"fnv1a", hash}};
  }
  j["normalize_features"] = args.normalize_features;
  return j;
}

json config_manifest(const ucmf::TrainConfig& cfg) {
  return json{{"k", cfg.k},
              {"b", cfg.b},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"l2", cfg.l2},
              {"dropout", cfg.dropout},
              {"dim_ratio", cfg.dim_ratio},
              {"explicit_dim", cfg.explicit_dim},
              {"hidden_dim", cfg.hidden_dim},
              {"max_epochs", cfg.max_epochs},
              {"patience", cfg.patience},
              {"seed", cfg.seed},
              {"featureless", cfg.featureless},
              {"unitize", cfg.unitize},
              {"co_train", cfg.co_train},
              {"alpha", cfg.alpha},
              {"optimizer", cfg.optimizer == ucmf::OptimizerKind::Adam ? "adam" : "sgd"},
              {"sample_undirected", cfg.sample_undirected}};
}

struct TrainArgs {
  DatasetArgs dataset;
  std::string mode = "featureful";
  std::string variant = "ucmf";
  std::string optimizer = "adam";
  std::string out_dir = "run";
  std::string epoch_checkpoint_dir;
  std::string resume;
  ucmf::TrainConfig cfg;
  bool lr_grid = false;
};

void add_train_options(CLI::App* cmd, TrainArgs& args) {
  add_dataset_options(cmd, args.dataset);
  cmd->add_option("--mode", args.mode, "featureful | featureless | unsupervised")
      ->check(CLI::IsMember({"featureful", "featureless", "unsupervised"}));
  cmd->add_option("--variant", args.variant, "ucmf | ucmf-u | ucmf-c")
      ->check(CLI::IsMember({"ucmf", "ucmf-u", "ucmf-c"}));
  cmd->add_option("--k", args.cfg.k, "negative samples per edge");
  cmd->add_option("--b", args.cfg.b, "structure batches per classification batch");
  cmd->add_option("--batch-size", args.cfg.batch_size, "mini-batch size");
  cmd->add_option("--lr", args.cfg.learning_rate, "learning rate");
  cmd->add_flag("--lr-grid", args.lr_grid,
                "search {0.001, 0.005, 0.01} and keep the best validation run");
  cmd->add_option("--l2", args.cfg.l2, "l2 regularization strength");
  cmd->add_option("--dropout", args.cfg.dropout, "classifier dropout rate");
  cmd->add_option("--dim", args.cfg.explicit_dim, "representation dim (overrides ratio)");
  cmd->add_option("--dim-ratio", args.cfg.dim_ratio, "representation dim / feature dim");
  cmd->add_option("--hidden", args.cfg.hidden_dim, "classifier hidden units");
  cmd->add_option("--epochs", args.cfg.max_epochs, "max training epochs");
  cmd->add_option("--patience", args.cfg.patience, "early-stopping patience");
  cmd->add_option("--alpha", args.cfg.alpha, "joint-loss weight (diagnostics only)");
  cmd->add_option("--optimizer", args.optimizer, "adam | sgd")
      ->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_flag("--sample-undirected", args.cfg.sample_undirected,
                "draw each undirected edge once instead of both orientations");
  cmd->add_option("--seed", args.cfg.seed, "run seed")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--epoch-checkpoints", args.epoch_checkpoint_dir,
                  "also write a checkpoint per epoch into this directory");
  cmd->add_option("--resume", args.resume, "warm-start from a checkpoint");
  cmd->set_config("--config", "", "config file with key=value lines");
}

ucmf::TrainConfig resolve_train_config(TrainArgs& args) {
  ucmf::TrainConfig cfg = args.cfg;
  cfg.optimizer =
      args.optimizer == "sgd" ? ucmf::OptimizerKind::Sgd : ucmf::OptimizerKind::Adam;
  if (args.mode == "featureless") {
    cfg.featureless = true;
  } else if (args.mode == "unsupervised") {
    cfg.featureless = args.dataset.features.empty();
    if (args.variant == "ucmf")
      args.variant = "ucmf-c";  // unsupervised runs have no classification steps
  }
  if (cfg.featureless && cfg.explicit_dim == 0) cfg.explicit_dim = 128;

  ucmf::Variant variant = ucmf::Variant::Ucmf;
  if (args.variant == "ucmf-u") variant = ucmf::Variant::UcmfU;
  if (args.variant == "ucmf-c") variant = ucmf::Variant::UcmfC;
  cfg = ucmf::ablation_variant(cfg, variant);

  if (!cfg.co_train && !args.dataset.split.empty())
    std::cerr << "[warn] split file is ignored for unsupervised training; "
                 "it is used only for reporting\n";
  return cfg;
}

void write_manifest(const fs::path& path, const std::string& command,
                    const TrainArgs& args, const ucmf::TrainConfig& cfg,
                    const json& extra = {}) {
  json manifest;
  manifest["tool_version"] = kVersion;
  manifest["command"] = command;
  manifest["seed"] = cfg.seed;
  manifest["mode"] = args.mode;
  manifest["variant"] = args.variant;
  manifest["dataset"] = dataset_manifest(args.dataset);
  manifest["config"] = config_manifest(cfg);
  manifest["outputs"] = {{"checkpoint", "checkpoint.bin"},
                         {"report", "report.csv"},
                         {"manifest", "manifest.json"}};
  if (!extra.empty()) manifest.update(extra);
  std::ofstream out(path);
  out << manifest.dump(2) << "\n";
}

ucmf::EpochCallback epoch_checkpoint_callback(const std::string& dir) {
  if (dir.empty()) return nullptr;
  fs::create_directories(dir);
  return [dir](int epoch, const ucmf::ModelParams& params, const ucmf::EpochStats&) {
    char name[64];
    std::snprintf(name, sizeof name, "ckpt_epoch_%05d.bin", epoch);
    ucmf::save_checkpoint((fs::path(dir) / name).string(), params);
  };
}

constexpr double kLrGrid[] = {0.001, 0.005, 0.01};

// Runs the trainer (optionally over the learning-rate grid) and keeps the
// best-validation result.
ucmf::TrainResult run_training(const LoadedData& loaded, const ucmf::TrainConfig& base,
                               bool lr_grid, const ucmf::EpochCallback& callback,
                               const std::optional<ucmf::DistributedOptions>& dist,
                               const ucmf::ModelParams* warm_start) {
  auto run_one = [&](double lr) {
    ucmf::TrainConfig cfg = base;
    cfg.learning_rate = lr;
    return dist ? ucmf::train_distributed(loaded.graph, loaded.data, cfg, *dist, callback)
                : ucmf::train(loaded.graph, loaded.data, cfg, callback, warm_start);
  };
  if (!lr_grid) return run_one(base.learning_rate);

  std::optional<ucmf::TrainResult> best;
  for (double lr : kLrGrid) {
    ucmf::TrainResult result = run_one(lr);
    const bool better =
        !best ||
        (base.co_train ? result.report.best_val_acc > best->report.best_val_acc
                       : result.report.best_structure_loss < best->report.best_structure_loss);
    if (better) best = std::move(result);
  }
  return std::move(*best);
}

int cmd_train(TrainArgs& args, const std::string& command,
              const std::optional<ucmf::DistributedOptions>& dist) {
  const ucmf::TrainConfig cfg = resolve_train_config(args);
  cfg.validate();
  const LoadedData loaded = load_dataset(args.dataset);

  fs::create_directories(args.out_dir);
  json extra;
  if (dist) {
    extra["distributed"] = {{"workers", dist->workers},
                            {"partition_seed", dist->partition_seed},
                            {"async_staleness", dist->async_staleness},
                            {"threads", dist->use_threads}};
  }
  write_manifest(fs::path(args.out_dir) / "manifest.json", command, args, cfg, extra);

  ucmf::EpochCallback callback = epoch_checkpoint_callback(args.epoch_checkpoint_dir);
  std::optional<ucmf::ModelParams> warm;
  if (!args.resume.empty()) {
    if (dist) throw ucmf::Error("--resume is supported for centralized training only");
    warm = ucmf::load_checkpoint(args.resume);
  }
  ucmf::TrainResult result = run_training(loaded, cfg, args.lr_grid, callback, dist,
                                          warm ? &*warm : nullptr);

  ucmf::save_checkpoint((fs::path(args.out_dir) / "checkpoint.bin").string(), result.params);
  result.report.write_csv((fs::path(args.out_dir) / "report.csv").string(),
                          dist.has_value());

  std::cout << "epochs=" << result.report.epochs.size()
            << " best_epoch=" << result.report.best_epoch
            << " lr=" << result.report.learning_rate_used;
  if (cfg.co_train)
    std::cout << " val_acc=" << result.report.best_val_acc
              << " test_acc=" << result.report.final_test_acc;
  else
    std::cout << " structure_loss=" << result.report.best_structure_loss;
  if (dist)
    std::cout << " rounds=" << result.report.rounds
              << " bytes=" << result.report.bytes_transferred;
  std::cout << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const DatasetArgs& dataset,
             const std::string& out_path) {
  const ucmf::ModelParams params = ucmf::load_checkpoint(checkpoint);
  const LoadedData loaded = load_dataset(dataset);
  const ucmf::EncoderMode mode{params.dims.featureless, true};
  const std::vector<int> preds = ucmf::predict_all(params, mode, loaded.data);

  std::ofstream out(out_path);
  if (!out) throw ucmf::FormatError("cannot open output: " + out_path);
  out << "split,accuracy\n";
  out.precision(17);
  for (const auto& [name, split] :
       std::initializer_list<std::pair<const char*, ucmf::Split>>{
           {"train", ucmf::Split::Train}, {"val", ucmf::Split::Val},
           {"test", ucmf::Split::Test}}) {
    if (loaded.data.split_nodes(split).empty()) continue;
    const double acc = ucmf::accuracy(preds, loaded.data, split);
    out << name << ',' << acc << '\n';
    std::cout << name << "_acc=" << acc << "\n";
  }
  return 0;
}

int cmd_communities(const std::string& checkpoint, const DatasetArgs& dataset, int clusters,
                    std::uint64_t seed, const std::string& out_prefix) {
  const ucmf::ModelParams params = ucmf::load_checkpoint(checkpoint);
  const LoadedData loaded = load_dataset(dataset);
  const ucmf::EncoderMode mode{params.dims.featureless, true};
  const Eigen::MatrixXd reps = ucmf::all_representations(params, mode, loaded.data);

  const int c = clusters > 0 ? clusters : loaded.data.n_classes;
  if (c < 2) throw ucmf::Error("need --clusters or labeled data to fix the community count");
  const ucmf::CommunityAssignment assignment = ucmf::kmeans(reps, c, seed);
  const ucmf::ConductanceReport report = ucmf::conductance(assignment, loaded.graph);

  {
    std::ofstream out(out_prefix + "communities.tsv");
    for (int i = 0; i < loaded.graph.n_nodes(); ++i)
      out << i << '\t' << assignment.cluster[i] << '\n';
  }
  {
    std::ofstream out(out_prefix + "conductance.csv");
    out << "community,leaving,within,conductance\n";
    out.precision(17);
    for (int k = 0; k < c; ++k)
      out << k << ',' << report.leaving[k] << ',' << report.within[k] << ','
          << report.per_community[k] << '\n';
    out << "mean,,," << report.mean << '\n';
  }
  std::cout << "communities=" << c << " mean_conductance=" << report.mean << "\n";
  return 0;
}

int cmd_diagnose(const std::string& checkpoint_dir, const DatasetArgs& dataset,
                 const std::string& beta, const std::string& out_path) {
  const LoadedData loaded = load_dataset(dataset);
  const ucmf::SmoothingOperator op(loaded.graph, beta == "simple"
                                                     ? ucmf::BetaVariant::Simple
                                                     : ucmf::BetaVariant::Standard);

  std::vector<fs::path> checkpoints;
  for (const auto& entry : fs::directory_iterator(checkpoint_dir))
    if (entry.path().extension() == ".bin") checkpoints.push_back(entry.path());
  if (checkpoints.empty())
    throw ucmf::Error("no checkpoints under " + checkpoint_dir);
  std::sort(checkpoints.begin(), checkpoints.end());

  std::ofstream out(out_path);
  if (!out) throw ucmf::FormatError("cannot open output: " + out_path);
  out << "epoch,avg_neighbor_cosine,val_acc\n";
  out.precision(17);
  int epoch = 0;
  for (const auto& path : checkpoints) {
    const ucmf::ModelParams params = ucmf::load_checkpoint(path.string());
    const ucmf::EncoderMode mode{params.dims.featureless, true};
    const Eigen::MatrixXd reps = ucmf::all_representations(params, mode, loaded.data);
    const double distance = ucmf::avg_neighbor_cosine(reps, loaded.graph, op);
    double val_acc = std::nan("");
    if (params.dims.n_classes > 0 && !loaded.data.val_nodes.empty())
      val_acc = ucmf::evaluate_accuracy(params, mode, loaded.data, ucmf::Split::Val);
    out << epoch << ',' << distance << ',' << val_acc << '\n';
    ++epoch;
  }
  std::cout << "diagnosed " << checkpoints.size() << " checkpoints -> " << out_path << "\n";
  return 0;
}

int cmd_gen_data(const std::string& preset, const std::string& out_dir, std::uint64_t seed,
                 int nodes, int classes, int feat_dim, int edges) {
  ucmf::Dataset dataset;
  if (preset == "two-cliques") {
    dataset = ucmf::make_two_clique_dataset(4);
  } else if (preset == "two-triangles") {
    dataset = ucmf::make_two_clique_dataset(3);
  } else if (preset == "citation") {
    ucmf::SyntheticCitationConfig cfg;
    cfg.seed = seed;
    if (nodes > 0) cfg.n_nodes = nodes;
    if (classes > 0) cfg.n_classes = classes;
    if (feat_dim > 0) cfg.feat_dim = feat_dim;
    if (edges > 0) cfg.n_undirected_edges = edges;
    dataset = ucmf::make_synthetic_citation(cfg);
  } else {
    throw ucmf::Error("unknown preset: " + preset);
  }
  dataset.write_files(out_dir);

  json meta;
  meta["preset"] = preset;
  meta["seed"] = seed;
  meta["nodes"] = dataset.n_nodes;
  meta["classes"] = dataset.n_classes;
  meta["feat_dim"] = dataset.feat_dim;
  meta["undirected_edges"] = dataset.edges.size();
  std::ofstream out(fs::path(out_dir) / "meta.json");
  out << meta.dump(2) << "\n";
  std::cout << "wrote " << preset << " dataset to " << out_dir << " (" << dataset.n_nodes
            << " nodes, " << dataset.edges.size() << " edges)\n";
  return 0;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unitized co-trained matrix factorization for transductive graphs"};
  app.require_subcommand(1);
  const std::string command = join_args(argc, argv);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_train_options(train_cmd, train_args);

  TrainArgs dist_args;
  ucmf::DistributedOptions dist_opts;
  bool dist_threads = false;
  auto* dist_cmd = app.add_subcommand("train-dist", "parameter-server training");
  add_train_options(dist_cmd, dist_args);
  dist_cmd->add_option("--workers", dist_opts.workers, "logical worker count")
      ->check(CLI::Range(1, 1024));
  dist_cmd->add_option("--partition-seed", dist_opts.partition_seed,
                       "seed for the random partition (default: run seed)");
  dist_cmd->add_option("--async-staleness", dist_opts.async_staleness,
                       "bounded staleness in rounds (0 = synchronous)")
      ->check(CLI::Range(0, 64));
  dist_cmd->add_flag("--threads", dist_threads, "run workers on real threads");

  std::string eval_checkpoint, eval_out = "accuracy.csv";
  DatasetArgs eval_dataset;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  add_dataset_options(eval_cmd, eval_dataset);
  eval_cmd->add_option("--out", eval_out, "accuracy CSV path");

  std::string comm_checkpoint, comm_prefix = "";
  DatasetArgs comm_dataset;
  int comm_clusters = 0;
  std::uint64_t comm_seed = 1;
  auto* comm_cmd = app.add_subcommand("communities", "k-means communities + conductance");
  comm_cmd->add_option("--checkpoint", comm_checkpoint)->required();
  add_dataset_options(comm_cmd, comm_dataset);
  comm_cmd->add_option("--clusters", comm_clusters, "community count (default: classes)");
  comm_cmd->add_option("--seed", comm_seed, "k-means seed");
  comm_cmd->add_option("--out-prefix", comm_prefix, "output path prefix");

  std::string diag_dir, diag_out = "diagnostic.csv", diag_beta = "standard";
  DatasetArgs diag_dataset;
  auto* diag_cmd =
      app.add_subcommand("diagnose", "neighbor-distance series from epoch checkpoints");
  diag_cmd->add_option("--checkpoint-dir", diag_dir)->required();
  add_dataset_options(diag_cmd, diag_dataset);
  diag_cmd->add_option("--beta", diag_beta, "standard | simple")
      ->check(CLI::IsMember({"standard", "simple"}));
  diag_cmd->add_option("--out", diag_out, "diagnostic CSV path");

  std::string gen_preset, gen_out = "data";
  std::uint64_t gen_seed = 7;
  int gen_nodes = 0, gen_classes = 0, gen_feat = 0, gen_edges = 0;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset");
  gen_cmd->add_option("--preset", gen_preset, "two-cliques | two-triangles | citation")
      ->required()
      ->check(CLI::IsMember({"two-cliques", "two-triangles", "citation"}));
  gen_cmd->add_option("--out", gen_out, "output directory");
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--nodes", gen_nodes);
  gen_cmd->add_option("--classes", gen_classes);
  gen_cmd->add_option("--feat-dim", gen_feat);
  gen_cmd->add_option("--edges", gen_edges);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, command, std::nullopt);
    if (dist_cmd->parsed()) {
      dist_opts.use_threads = dist_threads;
      if (dist_opts.partition_seed == 0) dist_opts.partition_seed = dist_args.cfg.seed;
      return cmd_train(dist_args, command, dist_opts);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_checkpoint, eval_dataset, eval_out);
    if (comm_cmd->parsed())
      return cmd_communities(comm_checkpoint, comm_dataset, comm_clusters, comm_seed,
                             comm_prefix);
    if (diag_cmd->parsed()) return cmd_diagnose(diag_dir, diag_dataset, diag_beta, diag_out);
    if (gen_cmd->parsed())
      return cmd_gen_data(gen_preset, gen_out, gen_seed, gen_nodes, gen_classes, gen_feat,
                          gen_edges);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
