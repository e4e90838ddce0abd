#include "ucmf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

namespace ucmf {

std::vector<StepKind> schedule(int b, int n_steps, bool supervised) {
  if (b < 0) throw Error("balance parameter must be >= 0");
  std::vector<StepKind> steps;
  steps.reserve(n_steps);
  if (!supervised) {
    steps.assign(n_steps, StepKind::Structure);
    return steps;
  }
  if (b == 0) {
    steps.assign(n_steps, StepKind::Classification);
    return steps;
  }
  int in_block = 0;
  for (int i = 0; i < n_steps; ++i) {
    if (in_block < b) {
      steps.push_back(StepKind::Structure);
      ++in_block;
    } else {
      steps.push_back(StepKind::Classification);
      in_block = 0;
    }
  }
  return steps;
}

int TrainConfig::resolve_rep_dim(int feat_dim) const {
  if (explicit_dim > 0) return explicit_dim;
  if (featureless) throw Error("featureless mode requires an explicit representation dim");
  return std::max(2, static_cast<int>(std::lround(dim_ratio * feat_dim)));
}

void TrainConfig::validate() const {
  if (k < 0) throw Error("k must be >= 0");
  if (b < 0) throw Error("b must be >= 0");
  if (batch_size < 1) throw Error("batch size must be >= 1");
  if (!(dim_ratio > 0.0 && dim_ratio <= 1.0)) throw Error("dim_ratio must be in (0, 1]");
  if (dropout < 0.0 || dropout >= 1.0) throw Error("dropout must be in [0, 1)");
  if (max_epochs < 1 || patience < 1) throw Error("max_epochs and patience must be >= 1");
  if (featureless && explicit_dim <= 0)
    throw Error("featureless mode requires an explicit representation dim");
}

TrainConfig ablation_variant(TrainConfig config, Variant variant) {
  switch (variant) {
    case Variant::Ucmf:
      config.unitize = true;
      config.co_train = true;
      break;
    case Variant::UcmfU:
      config.unitize = false;
      config.co_train = true;
      break;
    case Variant::UcmfC:
      config.unitize = true;
      config.co_train = false;
      break;
  }
  return config;
}

namespace {

std::vector<StepKind> epoch_schedule(const TrainConfig& cfg, std::int64_t edge_pool_size,
                                     std::size_t n_labeled) {
  const auto per_epoch = [&](std::int64_t units) {
    return static_cast<int>(
        std::max<std::int64_t>(1, (units + cfg.batch_size - 1) / cfg.batch_size));
  };
  if (!cfg.co_train) return schedule(cfg.b, per_epoch(edge_pool_size), false);
  if (cfg.b == 0) return schedule(0, per_epoch(static_cast<std::int64_t>(n_labeled)));
  // Enough structure steps to cover the edge pool once in expectation, each
  // b-block closed by one classification step.
  const int n_structure = per_epoch(edge_pool_size);
  std::vector<StepKind> steps;
  int s_done = 0;
  while (s_done < n_structure) {
    const int take = std::min(cfg.b, n_structure - s_done);
    steps.insert(steps.end(), take, StepKind::Structure);
    s_done += take;
    steps.push_back(StepKind::Classification);
  }
  return steps;
}

bool is_nan(double x) { return std::isnan(x); }

}  // namespace

ModelParams init_model(const Graph& graph, const NodeData& data, const TrainConfig& config) {
  ModelDims dims;
  dims.featureless = config.featureless;
  dims.feat_dim = config.featureless ? 0 : data.feat_dim;
  dims.rep_dim = config.resolve_rep_dim(data.feat_dim);
  dims.hidden_dim = config.hidden_dim;
  dims.n_classes = data.n_classes;
  dims.n_nodes = graph.n_nodes();

  const EncoderMode mode = config.encoder_mode();
  for (int attempt = 0; attempt < 5; ++attempt) {
    Rng init_rng = substream(config.seed + attempt, streams::kInit);
    ModelParams params = init_params(dims, init_rng);
    if (!mode.unitize) return params;
    try {
      for (int i = 0; i < graph.n_nodes(); ++i) encode_node(params, mode, data, i);
      return params;
    } catch (const DegenerateNormError&) {
      std::cerr << "[warn] degenerate representation at init, re-rolling (attempt "
                << attempt + 1 << ")\n";
    }
  }
  throw DegenerateNormError("initialization kept producing degenerate representations");
}

StepContext StepContext::centralized(const Graph& graph, const NodeData& data,
                                     const NegSampler& sampler, const TrainConfig& config) {
  StepContext ctx;
  ctx.graph = &graph;
  ctx.data = &data;
  ctx.sampler = &sampler;
  ctx.edge_pool = config.sample_undirected ? graph.undirected_edges() : graph.directed_edges();
  ctx.label_pool.assign(data.train_nodes.begin(), data.train_nodes.end());
  ctx.config = config;
  ctx.sample_rng = substream(config.seed, streams::kSample + 0);
  ctx.dropout_rng = substream(config.seed, streams::kDropout + 0);
  return ctx;
}

void StepContext::compute_step(const ModelParams& params, StepKind kind,
                               BatchAccumulator& acc) {
  const EncoderMode mode = config.encoder_mode();
  if (kind == StepKind::Structure) {
    const EdgeBatch batch =
        draw_edge_batch(edge_pool, config.batch_size, config.k, *sampler, sample_rng);
    structure_batch_accumulate(params, mode, *data, batch, acc);
  } else {
    const std::vector<int> batch = draw_label_batch(label_pool, config.batch_size, sample_rng);
    classification_batch_accumulate(params, mode, *data, batch, config.dropout, &dropout_rng,
                                    acc);
  }
}

std::vector<int> predict_all(const ModelParams& params, const EncoderMode& mode,
                             const NodeData& data) {
  std::vector<int> preds(data.n_nodes, -1);
  for (int i = 0; i < data.n_nodes; ++i) {
    const EncodeCache enc = encode_node(params, mode, data, i);
    const Eigen::VectorXd probs = classify(params, enc.v, false, 0.0, nullptr);
    Eigen::Index argmax = 0;
    probs.maxCoeff(&argmax);
    preds[i] = static_cast<int>(argmax);
  }
  return preds;
}

Eigen::MatrixXd all_representations(const ModelParams& params, const EncoderMode& mode,
                                    const NodeData& data) {
  Eigen::MatrixXd reps(data.n_nodes, params.dims.rep_dim);
  for (int i = 0; i < data.n_nodes; ++i)
    reps.row(i) = encode_node(params, mode, data, i).v.transpose();
  return reps;
}

double evaluate_accuracy(const ModelParams& params, const EncoderMode& mode,
                         const NodeData& data, Split split) {
  const auto nodes = data.split_nodes(split);
  if (nodes.empty()) throw EmptySplitError("no nodes in requested split");
  long correct = 0;
  for (int node : nodes) {
    const EncodeCache enc = encode_node(params, mode, data, node);
    const Eigen::VectorXd probs = classify(params, enc.v, false, 0.0, nullptr);
    Eigen::Index argmax = 0;
    probs.maxCoeff(&argmax);
    if (static_cast<int>(argmax) == data.labels[node]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

TrainResult run_training_loop(const Graph& graph, const NodeData& data,
                              const TrainConfig& config, ModelParams params,
                              const StepFn& step_fn, const EpochCallback& callback) {
  config.validate();
  const EncoderMode mode = config.encoder_mode();
  const bool supervised = config.co_train;
  if (supervised && data.train_nodes.empty())
    throw Error("co-training requires train-split labeled nodes");
  const bool have_val = !data.val_nodes.empty();
  const bool have_test = !data.test_nodes.empty();

  const std::int64_t pool_size = config.sample_undirected
                                     ? graph.undirected_edge_count()
                                     : graph.directed_edge_count();
  const std::vector<StepKind> steps =
      epoch_schedule(config, pool_size, data.train_nodes.size());

  Optimizer optimizer(config.optimizer, config.learning_rate, params);
  TrainReport report;
  report.learning_rate_used = config.learning_rate;

  if (callback) callback(0, params, EpochStats{});

  ModelParams best = params;
  double best_metric = supervised ? -1.0 : std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stale_epochs = 0;
  long global_step = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double s_loss_sum = 0.0, c_loss_sum = 0.0;
    long s_steps = 0, c_steps = 0;

    for (StepKind kind : steps) {
      StepAggregate agg = step_fn(params, kind, global_step++);
      if (agg.terms <= 0) throw Error("empty step aggregate");
      const double mean_loss = agg.loss_sum / static_cast<double>(agg.terms);
      if (!std::isfinite(mean_loss))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
      const double inv = 1.0 / static_cast<double>(agg.terms);
      agg.grads.for_each([&](const char*, auto& t) { t *= inv; });
      add_l2_gradient(params, config.l2, agg.grads);
      optimizer.step(params, agg.grads);
      if (!params.t.all_finite())
        throw DivergenceError("non-finite parameters at epoch " + std::to_string(epoch));
      report.max_unit_norm_dev =
          std::max(report.max_unit_norm_dev, agg.stats.max_unit_norm_dev);
      if (kind == StepKind::Structure) {
        s_loss_sum += mean_loss;
        ++s_steps;
      } else {
        c_loss_sum += mean_loss;
        ++c_steps;
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.structure_loss = s_steps > 0 ? s_loss_sum / s_steps : std::nan("");
    stats.classification_loss = c_steps > 0 ? c_loss_sum / c_steps : std::nan("");
    stats.val_acc = (supervised && have_val)
                        ? evaluate_accuracy(params, mode, data, Split::Val)
                        : std::nan("");
    stats.test_acc = (supervised && have_test)
                         ? evaluate_accuracy(params, mode, data, Split::Test)
                         : std::nan("");
    stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    report.epochs.push_back(stats);
    if (callback) callback(epoch, params, stats);

    // Strict improvements reset patience; ties refresh the stored snapshot so
    // a saturated validation split does not pin an undertrained checkpoint.
    bool improved, tied;
    if (supervised) {
      if (have_val) {
        improved = stats.val_acc > best_metric;
        tied = stats.val_acc == best_metric;
      } else {
        improved = true;  // without a val split, keep the latest params
        tied = false;
      }
      if (improved) best_metric = have_val ? stats.val_acc : 0.0;
    } else {
      improved = stats.structure_loss < best_metric;
      tied = false;
      if (improved) best_metric = stats.structure_loss;
    }
    if (improved || tied) {
      best = params;
      best_epoch = epoch;
      report.best_val_acc = supervised && have_val ? stats.val_acc : std::nan("");
      report.best_structure_loss = stats.structure_loss;
      report.final_test_acc = stats.test_acc;
    }
    if (improved) {
      stale_epochs = 0;
    } else if (++stale_epochs >= config.patience) {
      break;
    }
  }

  report.best_epoch = best_epoch;
  return {std::move(best), std::move(report)};
}

TrainResult train(const Graph& graph, const NodeData& data, const TrainConfig& config,
                  const EpochCallback& callback, const ModelParams* warm_start) {
  config.validate();
  const NegSampler sampler(graph);
  StepContext ctx = StepContext::centralized(graph, data, sampler, config);
  ModelParams params = init_model(graph, data, config);
  if (warm_start != nullptr) {
    if (!params.t.same_shape(warm_start->t))
      throw ShapeError("resume checkpoint does not match the configured model");
    params = *warm_start;
  }

  StepFn step_fn = [&ctx](const ModelParams& live, StepKind kind, long) {
    BatchAccumulator acc(live);
    ctx.compute_step(live, kind, acc);
    return StepAggregate{std::move(acc.grads), acc.loss_sum, acc.terms, acc.stats};
  };
  return run_training_loop(graph, data, config, std::move(params), step_fn, callback);
}

void TrainReport::write_csv(const std::string& path, bool distributed_columns) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open report path: " + path);
  out << "epoch,l_s,l_c,val_acc,test_acc,wall_ms";
  if (distributed_columns) out << ",rounds,bytes";
  out << "\n";
  out.precision(17);
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.structure_loss << ',' << e.classification_loss << ','
        << e.val_acc << ',' << e.test_acc << ',' << e.wall_ms;
    if (distributed_columns) out << ',' << rounds << ',' << bytes_transferred;
    out << "\n";
  }
}

bool TrainReport::same_trajectory(const TrainReport& other) const {
  if (epochs.size() != other.epochs.size() || best_epoch != other.best_epoch) return false;
  auto eq = [](double a, double b) { return (is_nan(a) && is_nan(b)) || a == b; };
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = other.epochs[i];
    if (a.epoch != b.epoch || !eq(a.structure_loss, b.structure_loss) ||
        !eq(a.classification_loss, b.classification_loss) || !eq(a.val_acc, b.val_acc) ||
        !eq(a.test_acc, b.test_acc))
      return false;
  }
  return true;
}

}  // namespace ucmf
