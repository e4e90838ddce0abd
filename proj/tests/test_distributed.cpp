#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "ucmf/datasets.hpp"
#include "ucmf/distributed.hpp"
#include "ucmf/serialize.hpp"

using namespace ucmf;

namespace {

TrainConfig toy_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.featureless = true;
  cfg.explicit_dim = 4;
  cfg.k = 4;
  cfg.b = 5;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.01;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("random partition covers everything exactly once") {
  const Dataset toy = make_two_clique_dataset(4);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);

  SUBCASE("single worker holds all edges in canonical order") {
    const PartitionPlan plan = partition_random(g, data, 1, 77);
    CHECK(plan.edges[0] == g.directed_edges());
    CHECK(plan.labeled[0] ==
          std::vector<int>(data.train_nodes.begin(), data.train_nodes.end()));
  }
  SUBCASE("two workers partition without loss or overlap") {
    const PartitionPlan plan = partition_random(g, data, 2, 77);
    std::set<std::pair<int, int>> seen;
    std::size_t total = 0;
    for (const auto& pool : plan.edges) {
      total += pool.size();
      for (const auto& e : pool) CHECK(seen.insert(e).second);
    }
    CHECK(total == g.directed_edges().size());
  }
  SUBCASE("same seed reproduces the plan") {
    const PartitionPlan a = partition_random(g, data, 2, 5);
    const PartitionPlan b = partition_random(g, data, 2, 5);
    CHECK(a.edges == b.edges);
    CHECK(a.labeled == b.labeled);
  }
}

TEST_CASE("random partition is balanced on a large edge pool") {
  // ~1e4 directed edges; each worker's share is Binomial(n, 1/2).
  const auto edges = random_connected_edges(900, 0.0115, 3);
  const Graph g = Graph::from_edges(900, edges);
  NodeData data;
  data.n_nodes = 900;
  data.labels.assign(900, kUnlabeled);
  data.split.assign(900, Split::None);
  data.rebuild_split_lists();

  const auto n = static_cast<double>(g.directed_edge_count());
  const PartitionPlan plan = partition_random(g, data, 2, 11);
  const double sigma = std::sqrt(n * 0.25);
  CHECK(std::abs(static_cast<double>(plan.edges[0].size()) - n / 2) < 3.0 * sigma);
}

TEST_CASE("wire codec round-trips every message kind") {
  auto inst = testutil::make_tiny_instance(3, false);

  PsMessage pull;
  pull.kind = MsgKind::Pull;
  pull.round = 42;
  const auto pull_bytes = encode_message(pull);
  const PsMessage pull2 = decode_message(pull_bytes.data(), pull_bytes.size());
  CHECK(pull2.kind == MsgKind::Pull);
  CHECK(pull2.round == 42);

  PsMessage reply;
  reply.kind = MsgKind::PullReply;
  reply.round = 7;
  reply.step = StepKind::Classification;
  reply.tensors = inst.params.t;
  const auto reply_bytes = encode_message(reply);
  const PsMessage reply2 = decode_message(reply_bytes.data(), reply_bytes.size());
  CHECK(reply2.step == StepKind::Classification);
  ByteWriter wa, wb;
  write_model_tensors(wa, reply.tensors);
  write_model_tensors(wb, reply2.tensors);
  CHECK(wa.bytes == wb.bytes);

  PsMessage push;
  push.kind = MsgKind::PushGradients;
  push.round = 9;
  push.tensors = make_gradients(inst.params);
  push.loss_sum = 1.25;
  push.terms = 17;
  push.max_unit_norm_dev = 3e-9;
  const auto push_bytes = encode_message(push);
  const PsMessage push2 = decode_message(push_bytes.data(), push_bytes.size());
  CHECK(push2.loss_sum == 1.25);
  CHECK(push2.terms == 17);
  CHECK(push2.max_unit_norm_dev == 3e-9);
}

TEST_CASE("malformed frames are rejected") {
  PsMessage pull;
  pull.kind = MsgKind::Pull;
  auto bytes = encode_message(pull);
  SUBCASE("truncated") {
    bytes.pop_back();
    CHECK_THROWS_AS(decode_message(bytes.data(), bytes.size()), FormatError);
  }
  SUBCASE("bad kind byte") {
    bytes[9] = 0x7f;  // kind sits after the length prefix and version byte
    CHECK_THROWS_AS(decode_message(bytes.data(), bytes.size()), FormatError);
  }
}

TEST_CASE("one-worker distributed training replays the centralized run bit for bit") {
  const Dataset toy = make_two_clique_dataset(4);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);
  TrainConfig cfg = toy_config(15);
  cfg.max_epochs = 25;
  cfg.patience = 25;

  const TrainResult central = train(g, data, cfg);
  DistributedOptions opts;
  opts.workers = 1;
  const TrainResult dist = train_distributed(g, data, cfg, opts);

  CHECK(serialize_params(central.params) == serialize_params(dist.params));
  CHECK(central.report.same_trajectory(dist.report));
  CHECK(dist.report.rounds > 0);
  CHECK(dist.report.bytes_transferred > 0);
}

TEST_CASE("aggregated worker gradients equal the centralized batch gradient") {
  auto inst = testutil::make_tiny_instance(19, false);
  const NegSampler sampler(inst.graph);
  Rng rng(100);
  const EdgeBatch batch = draw_edge_batch(inst.graph.directed_edges(), 32, 4, sampler, rng);

  BatchAccumulator central(inst.params);
  structure_batch_accumulate(inst.params, inst.mode, inst.data, batch, central);

  // Split the batch between two logical workers and push both halves through
  // the wire codec before summing, as the server would.
  EdgeBatch half1, half2;
  half1.k = half2.k = batch.k;
  for (std::size_t e = 0; e < batch.edges.size(); ++e) {
    EdgeBatch& dst = e < batch.edges.size() / 2 ? half1 : half2;
    dst.edges.push_back(batch.edges[e]);
    const auto negs = batch.negatives_of(e);
    dst.negatives.insert(dst.negatives.end(), negs.begin(), negs.end());
  }
  Gradients sum = make_gradients(inst.params);
  double loss_sum = 0.0;
  long terms = 0;
  for (const EdgeBatch* half : {&half1, &half2}) {
    BatchAccumulator acc(inst.params);
    structure_batch_accumulate(inst.params, inst.mode, inst.data, *half, acc);
    PsMessage push;
    push.kind = MsgKind::PushGradients;
    push.tensors = std::move(acc.grads);
    push.loss_sum = acc.loss_sum;
    push.terms = acc.terms;
    const auto bytes = encode_message(push);
    const PsMessage decoded = decode_message(bytes.data(), bytes.size());
    add_tensors(sum, decoded.tensors);
    loss_sum += decoded.loss_sum;
    terms += decoded.terms;
  }

  CHECK(terms == central.terms);
  CHECK(std::abs(loss_sum - central.loss_sum) < 1e-10);
  double max_diff = 0.0;
  testutil::zip_tensors(sum, central.grads, [&](const auto& a, const auto& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
      max_diff = std::max(max_diff, std::abs(*(a.data() + i) - *(b.data() + i)));
  });
  CHECK(max_diff < 1e-10);
}

TEST_CASE("two-worker distributed training solves the toy task") {
  const Dataset toy = make_two_clique_dataset(4);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);
  TrainConfig cfg = toy_config(33);
  cfg.max_epochs = 200;
  cfg.patience = 200;
  DistributedOptions opts;
  opts.workers = 2;
  const TrainResult result = train_distributed(g, data, cfg, opts);
  const double acc =
      evaluate_accuracy(result.params, cfg.encoder_mode(), data, Split::Test);
  CHECK(acc == doctest::Approx(1.0));
}

TEST_CASE("threaded and sequential schedulers agree in sync mode") {
  const Dataset toy = make_two_clique_dataset(3);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);
  TrainConfig cfg = toy_config(27);
  cfg.max_epochs = 10;
  cfg.patience = 10;

  DistributedOptions seq;
  seq.workers = 2;
  DistributedOptions thr = seq;
  thr.use_threads = true;

  const TrainResult a = train_distributed(g, data, cfg, seq);
  const TrainResult b = train_distributed(g, data, cfg, thr);
  CHECK(serialize_params(a.params) == serialize_params(b.params));
  CHECK(a.report.same_trajectory(b.report));
}

TEST_CASE("distributed determinism across repeats") {
  const Dataset toy = make_two_clique_dataset(3);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);
  TrainConfig cfg = toy_config(2);
  cfg.max_epochs = 12;
  cfg.patience = 12;
  DistributedOptions opts;
  opts.workers = 2;
  const TrainResult a = train_distributed(g, data, cfg, opts);
  const TrainResult b = train_distributed(g, data, cfg, opts);
  CHECK(serialize_params(a.params) == serialize_params(b.params));
}

TEST_CASE("a wedged worker stalls the round") {
  const Dataset toy = make_two_clique_dataset(3);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);
  TrainConfig cfg = toy_config(8);
  DistributedOptions opts;
  opts.workers = 2;
  opts.barrier_timeout = std::chrono::milliseconds(50);
  PsSimulation sim(g, data, cfg, opts);
  const ModelParams params = init_model(g, data, cfg);
  sim.wedge_worker(1);
  CHECK_THROWS_AS(sim.run_round(params, StepKind::Structure), StallError);
}

TEST_CASE("malformed gradient push raises a shape error") {
  // A worker model with the wrong embedding width cannot decode the reply.
  const Dataset toy = make_two_clique_dataset(3);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);
  TrainConfig cfg = toy_config(8);
  PsSimulation sim(g, data, cfg, DistributedOptions{.workers = 1});
  TrainConfig wrong = cfg;
  wrong.explicit_dim = 5;
  const ModelParams bad = init_model(g, data, wrong);
  CHECK_THROWS_AS(sim.run_round(bad, StepKind::Structure), ShapeError);
}

TEST_CASE("bounded staleness still converges on the toy") {
  const Dataset toy = make_two_clique_dataset(4);
  const Graph g = toy.build_graph();
  const NodeData data = toy.build_node_data(g);
  const TrainConfig cfg = toy_config(44);

  DistributedOptions sync;
  sync.workers = 2;
  DistributedOptions stale = sync;
  stale.async_staleness = 1;

  const TrainResult a = train_distributed(g, data, cfg, sync);
  const TrainResult b = train_distributed(g, data, cfg, stale);
  const double acc_sync =
      evaluate_accuracy(a.params, cfg.encoder_mode(), data, Split::Test);
  const double acc_stale =
      evaluate_accuracy(b.params, cfg.encoder_mode(), data, Split::Test);
  CHECK(std::abs(acc_sync - acc_stale) <= 0.02 + 1e-12);
}
