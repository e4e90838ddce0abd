#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "ucmf/trainer.hpp"

namespace ucmf {

// Assignment of the sampling pools to logical workers: every edge-pool entry
// and every labeled train node lands on exactly one worker, uniformly at
// random, reproducible from the seed.
struct PartitionPlan {
  int workers = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::pair<int, int>>> edges;
  std::vector<std::vector<int>> labeled;
};

PartitionPlan partition_random(const Graph& graph, const NodeData& data, int workers,
                               std::uint64_t seed, bool undirected_pool = false);

enum class MsgKind : std::uint8_t {
  Pull = 0,
  PullReply = 1,
  PushGradients = 2,
  StepBarrier = 3,
};

// A parameter-server frame. Pull and StepBarrier carry no tensors; PullReply
// carries the parameter snapshot; PushGradients carries gradient sums plus a
// stats block (loss sum, term count, norm deviation).
struct PsMessage {
  MsgKind kind = MsgKind::Pull;
  std::uint64_t round = 0;
  ModelTensors tensors;
  StepKind step = StepKind::Structure;  // pull replies: which loss this round runs
  double loss_sum = 0.0;                // gradient pushes
  long terms = 0;
  double max_unit_norm_dev = 0.0;
};

// Length-prefixed versioned binary: [u64 body_len][u8 version][u8 kind]
// [u64 round][u32 tensor_count][per tensor: u64 rows, u64 cols, f64 ...].
std::vector<std::uint8_t> encode_message(const PsMessage& msg);
PsMessage decode_message(const std::uint8_t* data, std::size_t size);

// Ordered in-memory byte channel; FIFO per worker-server pair. pop returns
// nullopt on timeout or after close.
class Channel {
 public:
  void push(std::vector<std::uint8_t> frame);
  std::optional<std::vector<std::uint8_t>> pop(std::chrono::milliseconds timeout);
  void close();
  std::size_t pending() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> frames_;
  bool closed_ = false;
};

struct DistributedOptions {
  int workers = 2;
  // 0 means "derive from the training seed".
  std::uint64_t partition_seed = 0;
  // Synchronous when 0; otherwise workers may compute on a snapshot up to
  // this many rounds old (an extension beyond the synchronous protocol).
  int async_staleness = 0;
  bool use_threads = false;
  std::chrono::milliseconds barrier_timeout{30000};
};

// One server plus W logical workers exchanging PsMessages over FIFO channels.
// The sequential scheduler and the threaded scheduler produce identical
// synchronous results; gradients are aggregated in worker-id order.
class PsSimulation {
 public:
  PsSimulation(const Graph& graph, const NodeData& data, const TrainConfig& config,
               const DistributedOptions& options);
  ~PsSimulation();

  PsSimulation(const PsSimulation&) = delete;
  PsSimulation& operator=(const PsSimulation&) = delete;

  // Runs one full pull/compute/push/barrier round and returns the aggregated
  // gradient sums. Throws ShapeError on malformed pushes and StallError when
  // a worker misses the barrier.
  StepAggregate run_round(const ModelParams& params, StepKind kind);

  const PartitionPlan& plan() const { return plan_; }
  long rounds() const { return rounds_; }
  long bytes_transferred() const { return bytes_; }

  // Test hook: the worker skips its next push so the barrier times out.
  void wedge_worker(int worker_id);

 private:
  struct Worker;

  void start_threads();
  void stop_threads();

  const Graph* graph_;
  const NodeData* data_;
  TrainConfig config_;
  DistributedOptions options_;
  NegSampler sampler_;
  PartitionPlan plan_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::deque<ModelTensors> snapshot_history_;  // bounded-staleness mode
  long rounds_ = 0;
  long bytes_ = 0;
};

// Synchronous-round parameter-server training with the same epoch schedule,
// early stopping and divergence guards as the centralized trainer.
TrainResult train_distributed(const Graph& graph, const NodeData& data,
                              const TrainConfig& config, const DistributedOptions& options,
                              const EpochCallback& callback = nullptr);

}  // namespace ucmf
