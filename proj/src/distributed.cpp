#include "ucmf/distributed.hpp"

#include <atomic>
#include <thread>

#include "ucmf/serialize.hpp"

namespace ucmf {

PartitionPlan partition_random(const Graph& graph, const NodeData& data, int workers,
                               std::uint64_t seed, bool undirected_pool) {
  if (workers < 1) throw Error("worker count must be >= 1");
  PartitionPlan plan;
  plan.workers = workers;
  plan.seed = seed;
  plan.edges.resize(workers);
  plan.labeled.resize(workers);
  Rng rng = substream(seed, streams::kPartition);
  const auto pool = undirected_pool ? graph.undirected_edges() : graph.directed_edges();
  for (const auto& edge : pool)
    plan.edges[rng.uniform_index(workers)].push_back(edge);
  for (int node : data.train_nodes)
    plan.labeled[rng.uniform_index(workers)].push_back(node);
  return plan;
}

namespace {

constexpr std::uint8_t kWireVersion = 1;

void encode_body(ByteWriter& w, const PsMessage& msg) {
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(msg.kind));
  w.u64(msg.round);
  switch (msg.kind) {
    case MsgKind::Pull:
    case MsgKind::StepBarrier:
      w.u32(0);
      break;
    case MsgKind::PullReply: {
      w.u32(8);
      write_model_tensors_raw(w, msg.tensors);
      Eigen::VectorXd aux(1);
      aux(0) = msg.step == StepKind::Structure ? 0.0 : 1.0;
      write_tensor_values(w, aux);
      break;
    }
    case MsgKind::PushGradients: {
      w.u32(8);
      write_model_tensors_raw(w, msg.tensors);
      Eigen::VectorXd aux(3);
      aux(0) = msg.loss_sum;
      aux(1) = static_cast<double>(msg.terms);
      aux(2) = msg.max_unit_norm_dev;
      write_tensor_values(w, aux);
      break;
    }
  }
}

}  // namespace

std::vector<std::uint8_t> encode_message(const PsMessage& msg) {
  ByteWriter body;
  // Rough reservation: tensors dominate.
  body.bytes.reserve(64 + static_cast<std::size_t>(msg.tensors.total_values()) * 8);
  encode_body(body, msg);
  ByteWriter framed;
  framed.bytes.reserve(body.bytes.size() + 8);
  framed.u64(body.bytes.size());
  framed.raw(body.bytes.data(), body.bytes.size());
  return std::move(framed.bytes);
}

PsMessage decode_message(const std::uint8_t* data, std::size_t size) {
  ByteReader r{data, size};
  const std::uint64_t body_len = r.u64();
  if (body_len != size - 8) throw FormatError("frame length prefix mismatch");
  if (r.u8() != kWireVersion) throw FormatError("unsupported wire version");
  PsMessage msg;
  const std::uint8_t kind = r.u8();
  if (kind > 3) throw FormatError("unknown message kind");
  msg.kind = static_cast<MsgKind>(kind);
  msg.round = r.u64();
  const std::uint32_t n_tensors = r.u32();
  if (msg.kind == MsgKind::Pull || msg.kind == MsgKind::StepBarrier) {
    if (n_tensors != 0) throw FormatError("unexpected payload on control message");
    if (!r.done()) throw FormatError("trailing bytes in frame");
    return msg;
  }
  if (n_tensors != 8) throw ShapeError("payload must carry 7 tensors plus aux block");
  msg.tensors = read_model_tensors_raw(r);
  Eigen::VectorXd aux;
  read_tensor_values(r, aux);
  if (msg.kind == MsgKind::PullReply) {
    if (aux.size() != 1) throw ShapeError("bad aux block on pull reply");
    msg.step = aux(0) == 0.0 ? StepKind::Structure : StepKind::Classification;
  } else {
    if (aux.size() != 3) throw ShapeError("bad aux block on gradient push");
    msg.loss_sum = aux(0);
    msg.terms = static_cast<long>(aux(1));
    msg.max_unit_norm_dev = aux(2);
  }
  if (!r.done()) throw FormatError("trailing bytes in frame");
  return msg;
}

void Channel::push(std::vector<std::uint8_t> frame) {
  {
    std::lock_guard lock(mutex_);
    frames_.push_back(std::move(frame));
  }
  cv_.notify_one();
}

std::optional<std::vector<std::uint8_t>> Channel::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || !frames_.empty(); });
  if (frames_.empty()) return std::nullopt;  // timed out or closed
  auto frame = std::move(frames_.front());
  frames_.pop_front();
  return frame;
}

void Channel::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t Channel::pending() const {
  std::lock_guard lock(mutex_);
  return frames_.size();
}

struct PsSimulation::Worker {
  int id = 0;
  StepContext ctx;
  ModelParams local;
  Channel inbox;    // server -> worker
  Channel outbox;   // worker -> server
  bool wedged = false;
  std::thread thread;
  std::atomic<bool> stop{false};

  void send_pull(std::uint64_t round) {
    PsMessage msg;
    msg.kind = MsgKind::Pull;
    msg.round = round;
    outbox.push(encode_message(msg));
  }

  // Receive the parameter snapshot, compute this round's gradient sums and
  // push them. Returns false when the channel was shut down.
  bool round_body(std::chrono::milliseconds timeout) {
    auto frame = inbox.pop(timeout);
    if (!frame) return false;
    PsMessage reply = decode_message(frame->data(), frame->size());
    if (reply.kind != MsgKind::PullReply) throw FormatError("expected pull reply");
    if (!local.t.same_shape(reply.tensors))
      throw ShapeError("pull reply shape does not match worker model");
    local.t = std::move(reply.tensors);

    BatchAccumulator acc(local);
    const bool has_work = reply.step == StepKind::Structure ? !ctx.edge_pool.empty()
                                                            : !ctx.label_pool.empty();
    if (has_work) ctx.compute_step(local, reply.step, acc);

    if (wedged) {
      wedged = false;
      return true;
    }
    PsMessage push;
    push.kind = MsgKind::PushGradients;
    push.round = reply.round;
    push.tensors = std::move(acc.grads);
    push.loss_sum = acc.loss_sum;
    push.terms = acc.terms;
    push.max_unit_norm_dev = acc.stats.max_unit_norm_dev;
    outbox.push(encode_message(push));
    return true;
  }

  bool await_barrier(std::chrono::milliseconds timeout) {
    auto frame = inbox.pop(timeout);
    if (!frame) return false;
    const PsMessage msg = decode_message(frame->data(), frame->size());
    if (msg.kind != MsgKind::StepBarrier) throw FormatError("expected step barrier");
    return true;
  }

  void thread_main(std::chrono::milliseconds timeout) {
    // A decoding/shape error inside a worker thread surfaces at the server as
    // a stalled barrier.
    try {
      for (std::uint64_t round = 0; !stop.load(); ++round) {
        send_pull(round);
        if (!round_body(timeout)) return;
        if (!await_barrier(timeout)) return;
      }
    } catch (const std::exception&) {
    }
  }
};

PsSimulation::PsSimulation(const Graph& graph, const NodeData& data,
                           const TrainConfig& config, const DistributedOptions& options)
    : graph_(&graph), data_(&data), config_(config), options_(options), sampler_(graph) {
  if (options.workers < 1) throw Error("worker count must be >= 1");
  const std::uint64_t pseed =
      options.partition_seed != 0 ? options.partition_seed : config.seed;
  plan_ = partition_random(graph, data, options.workers, pseed, config.sample_undirected);

  // Shape template for decoding and local buffers.
  const ModelParams proto = init_model(graph, data, config);
  workers_.reserve(options.workers);
  for (int w = 0; w < options.workers; ++w) {
    auto worker = std::make_unique<Worker>();
    worker->id = w;
    worker->local = proto;
    worker->ctx.graph = &graph;
    worker->ctx.data = &data;
    worker->ctx.sampler = &sampler_;
    worker->ctx.edge_pool = plan_.edges[w];
    worker->ctx.label_pool = plan_.labeled[w];
    worker->ctx.config = config;
    worker->ctx.sample_rng = substream(config.seed, streams::kSample + w);
    worker->ctx.dropout_rng = substream(config.seed, streams::kDropout + w);
    workers_.push_back(std::move(worker));
  }
  if (options_.use_threads) start_threads();
}

PsSimulation::~PsSimulation() { stop_threads(); }

void PsSimulation::start_threads() {
  for (auto& w : workers_)
    w->thread = std::thread([worker = w.get(), timeout = options_.barrier_timeout] {
      worker->thread_main(timeout);
    });
}

void PsSimulation::stop_threads() {
  if (!options_.use_threads) return;
  for (auto& w : workers_) {
    w->stop.store(true);
    w->inbox.close();
  }
  for (auto& w : workers_)
    if (w->thread.joinable()) w->thread.join();
}

void PsSimulation::wedge_worker(int worker_id) { workers_.at(worker_id)->wedged = true; }

StepAggregate PsSimulation::run_round(const ModelParams& params, StepKind kind) {
  const std::uint64_t round = static_cast<std::uint64_t>(rounds_);
  const auto timeout = options_.barrier_timeout;

  PsMessage reply;
  reply.kind = MsgKind::PullReply;
  reply.round = round;
  reply.step = kind;
  if (options_.async_staleness == 0) {
    reply.tensors = params.t;
  } else {
    // Serve a snapshot up to `async_staleness` rounds old.
    snapshot_history_.push_back(params.t);
    while (static_cast<int>(snapshot_history_.size()) > options_.async_staleness + 1)
      snapshot_history_.pop_front();
    reply.tensors = snapshot_history_.front();
  }
  const auto reply_frame = encode_message(reply);

  if (!options_.use_threads) {
    for (auto& w : workers_) w->send_pull(round);
  }
  for (auto& w : workers_) {
    auto pull = w->outbox.pop(timeout);
    if (!pull) throw StallError("worker " + std::to_string(w->id) + " missed pull");
    const PsMessage msg = decode_message(pull->data(), pull->size());
    if (msg.kind != MsgKind::Pull) throw FormatError("expected pull request");
    bytes_ += static_cast<long>(pull->size());
    w->inbox.push(reply_frame);
    bytes_ += static_cast<long>(reply_frame.size());
  }
  if (!options_.use_threads) {
    for (auto& w : workers_)
      if (!w->round_body(timeout))
        throw StallError("worker " + std::to_string(w->id) + " unavailable");
  }

  StepAggregate agg;
  agg.grads = make_gradients(params);
  bool first = true;
  for (auto& w : workers_) {
    auto frame = w->outbox.pop(timeout);
    if (!frame)
      throw StallError("worker " + std::to_string(w->id) + " missed the round barrier");
    bytes_ += static_cast<long>(frame->size());
    const PsMessage push = decode_message(frame->data(), frame->size());
    if (push.kind != MsgKind::PushGradients) throw FormatError("expected gradient push");
    if (push.round != round) throw FormatError("out-of-order gradient push");
    if (!agg.grads.same_shape(push.tensors))
      throw ShapeError("gradient push shape mismatch from worker " + std::to_string(w->id));
    if (first) {
      agg.grads = push.tensors;
      first = false;
    } else {
      add_tensors(agg.grads, push.tensors);
    }
    agg.loss_sum += push.loss_sum;
    agg.terms += push.terms;
    agg.stats.max_unit_norm_dev =
        std::max(agg.stats.max_unit_norm_dev, push.max_unit_norm_dev);
  }

  PsMessage barrier;
  barrier.kind = MsgKind::StepBarrier;
  barrier.round = round;
  const auto barrier_frame = encode_message(barrier);
  for (auto& w : workers_) {
    w->inbox.push(barrier_frame);
    bytes_ += static_cast<long>(barrier_frame.size());
  }
  if (!options_.use_threads) {
    for (auto& w : workers_)
      if (!w->await_barrier(timeout))
        throw StallError("worker " + std::to_string(w->id) + " missed barrier ack");
  }

  ++rounds_;
  return agg;
}

TrainResult train_distributed(const Graph& graph, const NodeData& data,
                              const TrainConfig& config, const DistributedOptions& options,
                              const EpochCallback& callback) {
  config.validate();
  PsSimulation sim(graph, data, config, options);
  ModelParams params = init_model(graph, data, config);

  StepFn step_fn = [&sim](const ModelParams& live, StepKind kind, long) {
    return sim.run_round(live, kind);
  };
  TrainResult result =
      run_training_loop(graph, data, config, std::move(params), step_fn, callback);
  result.report.rounds = sim.rounds();
  result.report.bytes_transferred = sim.bytes_transferred();
  return result;
}

}  // namespace ucmf
