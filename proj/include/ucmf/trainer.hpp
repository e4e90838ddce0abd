#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ucmf/batch.hpp"
#include "ucmf/losses.hpp"
#include "ucmf/nn.hpp"

namespace ucmf {

enum class StepKind : std::uint8_t { Structure, Classification };

// Repeating pattern of b structure steps followed by one classification step,
// truncated to n_steps. b = 0 degenerates to classification only; an
// unsupervised run emits structure steps only.
std::vector<StepKind> schedule(int b, int n_steps, bool supervised = true);

enum class Variant { Ucmf, UcmfU, UcmfC };

struct TrainConfig {
  int k = 16;               // negatives per edge
  int b = 15;               // structure batches per classification batch
  int batch_size = 256;
  double learning_rate = 0.01;
  double l2 = 0.002;
  double dropout = 0.5;
  double dim_ratio = 0.10;  // representation size as a fraction of feat_dim
  int explicit_dim = 0;     // overrides dim_ratio; required in featureless mode
  int hidden_dim = 128;
  int max_epochs = 1000;
  int patience = 30;
  std::uint64_t seed = 0;
  bool featureless = false;
  bool unitize = true;
  bool co_train = true;
  // Joint-loss mixing weight; the alternating schedule realizes the balance,
  // so training never reads this, but diagnostics evaluating the combined
  // loss do.
  double alpha = 0.5;
  OptimizerKind optimizer = OptimizerKind::Adam;
  // Default samples directed edges (each undirected edge in both
  // orientations); the alternative draws each undirected edge once.
  bool sample_undirected = false;

  EncoderMode encoder_mode() const { return {featureless, unitize}; }
  int resolve_rep_dim(int feat_dim) const;
  void validate() const;
};

TrainConfig ablation_variant(TrainConfig config, Variant variant);

struct EpochStats {
  int epoch = 0;
  double structure_loss = 0.0;
  double classification_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double wall_ms = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_acc = 0.0;
  double best_structure_loss = 0.0;  // early-stopping metric for unsupervised runs
  double final_test_acc = 0.0;
  double max_unit_norm_dev = 0.0;
  double learning_rate_used = 0.0;
  // Filled by the parameter-server driver.
  long rounds = 0;
  long bytes_transferred = 0;

  // epoch,l_s,l_c,val_acc,test_acc,wall_ms[,rounds,bytes]
  void write_csv(const std::string& path, bool distributed_columns = false) const;
  // Wall-clock excluded: it is the one nondeterministic field.
  bool same_trajectory(const TrainReport& other) const;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

// epoch 0 carries the freshly initialized parameters; epochs >= 1 fire after
// each training epoch.
using EpochCallback =
    std::function<void(int epoch, const ModelParams& params, const EpochStats& stats)>;

// Named RNG substreams. The centralized trainer draws from worker slot 0 so a
// one-worker parameter-server run replays it exactly.
namespace streams {
constexpr std::uint64_t kInit = 1;
constexpr std::uint64_t kSample = 100;
constexpr std::uint64_t kDropout = 200;
constexpr std::uint64_t kPartition = 300;
}  // namespace streams

// Seeded Glorot init; if unitization hits a degenerate norm on any node at
// step 0, the init is re-rolled with a bumped seed (a few attempts, then the
// error propagates).
ModelParams init_model(const Graph& graph, const NodeData& data, const TrainConfig& config);

// Everything one worker needs to compute a step gradient on its share of the
// data. Both the centralized trainer and each PS worker hold one.
struct StepContext {
  const Graph* graph = nullptr;
  const NodeData* data = nullptr;
  const NegSampler* sampler = nullptr;
  std::vector<std::pair<int, int>> edge_pool;
  std::vector<int> label_pool;
  TrainConfig config;
  Rng sample_rng{0};
  Rng dropout_rng{0};

  static StepContext centralized(const Graph& graph, const NodeData& data,
                                 const NegSampler& sampler, const TrainConfig& config);

  // Draws the next batch of the given kind and accumulates loss/gradient sums.
  void compute_step(const ModelParams& params, StepKind kind, BatchAccumulator& acc);
};

// One aggregated step: gradient sums over `terms` batch items.
struct StepAggregate {
  Gradients grads;
  double loss_sum = 0.0;
  long terms = 0;
  LossStats stats;
};

// Receives the live parameters owned by the training loop.
using StepFn =
    std::function<StepAggregate(const ModelParams& params, StepKind kind, long global_step)>;

// Epoch/evaluation/early-stopping driver shared by the centralized and
// parameter-server trainers: mean-reduces each aggregate, adds the L2 term,
// applies one optimizer step and guards against divergence.
TrainResult run_training_loop(const Graph& graph, const NodeData& data,
                              const TrainConfig& config, ModelParams params,
                              const StepFn& step_fn, const EpochCallback& callback);

// warm_start, when given, replaces the seeded init (resume support); its
// shapes must match the config-derived model.
TrainResult train(const Graph& graph, const NodeData& data, const TrainConfig& config,
                  const EpochCallback& callback = nullptr,
                  const ModelParams* warm_start = nullptr);

// Argmax class predictions for every node (eval-mode forward).
std::vector<int> predict_all(const ModelParams& params, const EncoderMode& mode,
                             const NodeData& data);

// Representations for every node, one row per node.
Eigen::MatrixXd all_representations(const ModelParams& params, const EncoderMode& mode,
                                    const NodeData& data);

double evaluate_accuracy(const ModelParams& params, const EncoderMode& mode,
                         const NodeData& data, Split split);

}  // namespace ucmf
