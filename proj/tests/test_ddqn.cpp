#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "racerl/ddqn.hpp"

using namespace racerl;

namespace {

// Linear 1-input network with fixed outputs: zero weights, chosen biases.
Network constant_net(std::vector<double> outputs) {
  NetworkShape shape;
  shape.input_size = 1;
  shape.layers.push_back(
      LayerSpec::dense(1, static_cast<int>(outputs.size()), Activation::kLinear));
  Network net(shape);
  net.layer_biases(0) = std::move(outputs);
  return net;
}

Transition make_transition(double reward, bool done, int action = 0) {
  Transition t;
  t.state = {0.0};
  t.next_state = {0.0};
  t.action = action;
  t.reward = reward;
  t.done = done;
  return t;
}

}  // namespace

TEST_CASE("zero discount reduces every target to the reward") {
  const Network online = constant_net({1.0, 2.0});
  const Network target = constant_net({5.0, 1.0});
  const Transition a = make_transition(0.25, false);
  const Transition b = make_transition(-3.5, false);
  const auto targets = double_q_targets({&a, &b}, online, target, 0.0);
  CHECK(targets[0] == 0.25);
  CHECK(targets[1] == -3.5);
}

TEST_CASE("terminal transitions ignore both networks") {
  const Network online = constant_net({100.0, 200.0});
  const Network target = constant_net({-7.0, 44.0});
  const Transition t = make_transition(1.5, true);
  CHECK(double_q_targets({&t}, online, target, 0.99)[0] == 1.5);
}

TEST_CASE("the online argmax is valued by the target network") {
  // Q(s') = [1, 2] picks index 1; T(s') = [5, 1] values it at 1.0.
  const Network online = constant_net({1.0, 2.0});
  const Network target = constant_net({5.0, 1.0});
  const Transition t = make_transition(1.0, false);
  const double y = double_q_targets({&t}, online, target, 0.9)[0];
  CHECK(std::abs(y - 1.9) <= 1e-12);
  CHECK(y != doctest::Approx(1.0 + 0.9 * 5.0));  // not the single-network value
}

TEST_CASE("tied online argmax resolves to the lowest action index") {
  const Network online = constant_net({2.0, 2.0});
  const Network target = constant_net({3.0, 7.0});
  const Transition t = make_transition(0.0, false);
  CHECK(double_q_targets({&t}, online, target, 1.0)[0] == doctest::Approx(3.0));
}

TEST_CASE("empty batches and mismatched networks are rejected") {
  const Network online = constant_net({1.0, 2.0});
  const Network other = constant_net({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(double_q_targets({}, online, online, 0.9), std::invalid_argument);
  const Transition t = make_transition(0.0, false);
  CHECK_THROWS_AS(double_q_targets({&t}, online, other, 0.9), std::invalid_argument);
}

TEST_CASE("greedy selection and tie-breaks") {
  Rng rng(1);
  CHECK(select_action({0.1, 0.9, 0.3}, 0.0, rng) == 1);
  CHECK(select_action({0.5, 0.5}, 0.0, rng) == 0);
  CHECK(select_action({-1.0, -2.0, -3.0}, 0.0, rng) == 0);
}

TEST_CASE("full exploration is uniform over the action set") {
  Rng rng(2);
  const std::vector<double> q{0.0, 10.0, -5.0, 3.0};
  const int draws = 10000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < draws; ++i) ++counts[select_action(q, 1.0, rng)];
  const double expected = 1.0 / 4.0;
  const double bound = 3.0 * std::sqrt(expected * (1.0 - expected) / draws);
  for (int a = 0; a < 4; ++a) {
    CHECK(counts[a] > 0);
    CHECK(std::abs(counts[a] / double(draws) - expected) <= bound);
  }
}

TEST_CASE("target sync copies without aliasing and is idempotent") {
  Rng rng(3);
  const NetworkShape shape = q_shape_features(11, 5);
  Network online = he_initialized(shape, rng);
  Network target(shape);

  sync_target(online, target);
  CHECK(encode(target).genes == encode(online).genes);

  sync_target(online, target);  // idempotent
  CHECK(encode(target).genes == encode(online).genes);

  const Genome before = encode(target);
  online.layer_weights(0)[0] += 1.0;
  CHECK(encode(target).genes == before.genes);  // no aliasing

  Network mismatched(q_shape_features(9, 5));
  CHECK_THROWS_AS(sync_target(online, mismatched), std::invalid_argument);
}

TEST_CASE("learn_step signals not-ready until the buffer holds a batch") {
  DdqnConfig cfg;
  cfg.batch_size = 4;
  cfg.replay_capacity = 8;
  Network online = constant_net({0.0, 0.0});
  Network target = constant_net({0.0, 0.0});
  SumTree tree(cfg.replay_capacity);
  Rng rng(4);

  tree.push(make_transition(1.0, true), 1.0);
  const Genome before = encode(online);
  const LearnResult result = learn_step(online, target, tree, cfg, rng);
  CHECK(!result.ready);
  CHECK(encode(online).genes == before.genes);
}

TEST_CASE("single-transition learn step matches the hand-computed update") {
  // One linear unit: Q(s) = w s + b with w = 0.3, b = 0.1; terminal reward 1
  // at s = 2 gives td = 0.7 - 1 = -0.3. With mean squared error and lr 0.05:
  // w <- w - lr * 2 td s = 0.36, b <- b - lr * 2 td = 0.13.
  NetworkShape shape;
  shape.input_size = 1;
  shape.layers.push_back(LayerSpec::dense(1, 1, Activation::kLinear));
  Network online(shape);
  online.layer_weights(0)[0] = 0.3;
  online.layer_biases(0)[0] = 0.1;
  Network target = online;

  DdqnConfig cfg;
  cfg.batch_size = 1;
  cfg.replay_capacity = 1;
  cfg.learning_rate = 0.05;
  cfg.priority_exponent = 0.6;
  cfg.priority_floor = 1e-3;

  SumTree tree(1);
  Transition t;
  t.state = {2.0};
  t.next_state = {2.0};
  t.action = 0;
  t.reward = 1.0;
  t.done = true;
  tree.push(t, 1.0);

  Rng rng(5);
  const LearnResult result = learn_step(online, target, tree, cfg, rng);
  REQUIRE(result.ready);
  CHECK(result.mean_abs_td == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(online.layer_weights(0)[0] == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(online.layer_biases(0)[0] == doctest::Approx(0.13).epsilon(1e-12));
  CHECK(tree.priority_of(0) ==
        doctest::Approx(std::pow(0.3 + cfg.priority_floor, cfg.priority_exponent)));
}

TEST_CASE("zero learning rate freezes the network but refreshes priorities") {
  NetworkShape shape;
  shape.input_size = 1;
  shape.layers.push_back(LayerSpec::dense(1, 2, Activation::kLinear));
  Network online(shape);
  online.layer_biases(0) = {0.4, -0.2};
  Network target = online;

  DdqnConfig cfg;
  cfg.batch_size = 2;
  cfg.replay_capacity = 4;
  cfg.learning_rate = 0.0;

  SumTree tree(4);
  tree.push(make_transition(1.0, true, 0), 1.0);
  tree.push(make_transition(-1.0, true, 1), 1.0);

  Rng rng(6);
  const Genome before = encode(online);
  const LearnResult result = learn_step(online, target, tree, cfg, rng);
  REQUIRE(result.ready);
  CHECK(encode(online).genes == before.genes);

  // Priorities now reflect the current errors, and every leaf stays positive.
  for (size_t leaf = 0; leaf < tree.size(); ++leaf) {
    CHECK(tree.priority_of(leaf) > 0.0);
    CHECK(tree.priority_of(leaf) != 1.0);
  }
}

TEST_CASE("target parameters hold still between syncs while online moves") {
  Rng rng(7);
  NetworkShape shape = NetworkShape::mlp({1, 8, 2}, Activation::kTanh, Activation::kLinear);
  Network online = he_initialized(shape, rng);
  Network target = online;

  DdqnConfig cfg;
  cfg.batch_size = 4;
  cfg.replay_capacity = 16;
  cfg.learning_rate = 0.05;
  cfg.gamma = 0.9;

  SumTree tree(16);
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.state = {i * 0.1};
    t.next_state = {i * 0.1 + 0.05};
    t.action = i % 2;
    t.reward = i % 3 == 0 ? 1.0 : -0.1;
    t.done = i == 7;
    tree.push(t, 1.0);
  }

  const Genome target_before = encode(target);
  const Genome online_before = encode(online);
  for (int step = 0; step < 5; ++step) learn_step(online, target, tree, cfg, rng);
  CHECK(encode(target).genes == target_before.genes);
  CHECK(encode(online).genes != online_before.genes);
}

TEST_CASE("config invariants are enforced") {
  DdqnConfig cfg;
  cfg.replay_capacity = 1000;  // not a power of two
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DdqnConfig{};
  cfg.batch_size = 64;
  cfg.replay_capacity = 32;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DdqnConfig{};
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DdqnConfig{};
  cfg.epsilon_start = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  DiscreteActionSet dup;
  dup.actions = {{0, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
  CHECK_NOTHROW(DiscreteActionSet::default_set().validate());
}

namespace {

TrackConfig tiny_track() {
  TrackConfig tc;
  tc.seed = 12;
  tc.tile_count = 40;
  tc.max_frames = 100;
  return tc;
}

DdqnConfig tiny_ddqn() {
  DdqnConfig cfg;
  cfg.observation = ObservationMode::kFeatures;
  cfg.episodes = 4;
  cfg.batch_size = 16;
  cfg.replay_capacity = 256;
  cfg.target_sync_period = 50;
  cfg.epsilon_decay_episodes = 3;
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("training produces one record per episode with the epsilon schedule") {
  const DdqnConfig cfg = tiny_ddqn();
  const auto [net, records] = train_ddqn(cfg, tiny_track(), DiscreteActionSet::default_set());
  REQUIRE(records.size() == 4);
  CHECK(records[0].epsilon == cfg.epsilon_start);
  CHECK(records[3].epsilon == cfg.epsilon_end);  // at and past decay_episodes
  for (const auto& rec : records) {
    CHECK(rec.frames > 0);
    CHECK(std::isfinite(rec.reward));
  }
}

TEST_CASE("training runs are deterministic per seed") {
  const DdqnConfig cfg = tiny_ddqn();
  const auto [net_a, rec_a] = train_ddqn(cfg, tiny_track(), DiscreteActionSet::default_set());
  const auto [net_b, rec_b] = train_ddqn(cfg, tiny_track(), DiscreteActionSet::default_set());
  REQUIRE(rec_a.size() == rec_b.size());
  for (size_t i = 0; i < rec_a.size(); ++i) {
    CHECK(rec_a[i].reward == rec_b[i].reward);
    CHECK(rec_a[i].frames == rec_b[i].frames);
    CHECK(rec_a[i].mean_td_error == rec_b[i].mean_td_error);
  }
  CHECK(encode(net_a).genes == encode(net_b).genes);
}

TEST_CASE("pixel-mode training drives the conv stack end to end") {
  DdqnConfig cfg;
  cfg.observation = ObservationMode::kPixels;
  cfg.episodes = 1;
  cfg.batch_size = 8;
  cfg.replay_capacity = 64;
  cfg.target_sync_period = 25;
  cfg.seed = 5;

  TrackConfig tc = tiny_track();
  tc.max_frames = 40;
  PixelSpec pixels;
  pixels.height = 16;
  pixels.width = 16;

  DdqnTrainer trainer(cfg, generate_track(tc), DiscreteActionSet::default_set(), {}, {},
                      pixels, tc.max_frames);
  CHECK(trainer.online().shape().grid_input);
  const DdqnEpisodeRecord rec = trainer.run_episode();
  CHECK(rec.frames > 0);
  CHECK(rec.mean_td_error > 0.0);  // the buffer warmed up and learning ran
  CHECK(std::isfinite(rec.reward));
}

TEST_CASE("trainer snapshots resume the exact episode sequence") {
  const DdqnConfig cfg = tiny_ddqn();
  DdqnTrainer full(cfg, generate_track(tiny_track()), DiscreteActionSet::default_set(), {},
                   {}, {}, tiny_track().max_frames);
  std::vector<DdqnEpisodeRecord> records;
  records.push_back(full.run_episode());
  records.push_back(full.run_episode());
  const std::string snapshot = full.save_state();
  records.push_back(full.run_episode());
  records.push_back(full.run_episode());

  DdqnTrainer resumed(cfg, generate_track(tiny_track()), DiscreteActionSet::default_set(), {},
                      {}, {}, tiny_track().max_frames);
  resumed.load_state(snapshot);
  CHECK(resumed.episode() == 2);
  for (int e = 2; e < 4; ++e) {
    const DdqnEpisodeRecord rec = resumed.run_episode();
    CHECK(rec.reward == records[e].reward);
    CHECK(rec.frames == records[e].frames);
    CHECK(rec.mean_td_error == records[e].mean_td_error);
  }
  CHECK(encode(resumed.online()).genes == encode(full.online()).genes);
}

// ---------------------------------------------------------------------------
// Tabular oracle: 3-state deterministic chain.

namespace {

struct ChainOutcome {
  int next = 0;
  double reward = 0.0;
  bool done = false;
};

// States 0,1,2; action 1 moves right, action 0 moves left (floored at 0).
// Entering state 2 pays +1 and terminates; every other step costs 0.04.
ChainOutcome chain_step(int state, int action) {
  const int next = action == 1 ? state + 1 : std::max(state - 1, 0);
  if (next == 2) return {next, 1.0, true};
  return {next, -0.04, false};
}

std::vector<double> one_hot(int state) {
  std::vector<double> v(3, 0.0);
  v[state] = 1.0;
  return v;
}

// Independent value iteration on the same MDP.
std::vector<std::vector<double>> chain_value_iteration(double gamma) {
  std::vector<std::vector<double>> q(3, std::vector<double>(2, 0.0));
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        const ChainOutcome out = chain_step(s, a);
        double y = out.reward;
        if (!out.done) y += gamma * std::max(q[out.next][0], q[out.next][1]);
        delta = std::max(delta, std::abs(y - q[s][a]));
        q[s][a] = y;
      }
    }
    if (delta < 1e-13) break;
  }
  return q;
}

}  // namespace

TEST_CASE("chain MDP: learned Q-values reach the value-iteration fixed point") {
  DdqnConfig cfg;
  cfg.gamma = 0.9;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 16;
  cfg.replay_capacity = 1024;
  cfg.target_sync_period = 50;
  cfg.epsilon_start = 1.0;
  cfg.epsilon_end = 0.05;
  cfg.epsilon_decay_episodes = 400;
  cfg.episodes = 600;

  const NetworkShape shape = NetworkShape::mlp({3, 32, 2}, Activation::kTanh,
                                               Activation::kLinear);
  Rng rng(2024);
  Network online = he_initialized(shape, rng);
  Network target = online;
  SumTree tree(cfg.replay_capacity);

  int64_t global_step = 0;
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const double epsilon =
        episode >= cfg.epsilon_decay_episodes
            ? cfg.epsilon_end
            : cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) *
                                      (double(episode) / cfg.epsilon_decay_episodes);
    int state = 0;
    for (int step = 0; step < 20; ++step) {
      const int action = select_action(online.forward(one_hot(state)), epsilon, rng);
      const ChainOutcome out = chain_step(state, action);

      Transition t;
      t.state = one_hot(state);
      t.next_state = one_hot(out.next);
      t.action = action;
      t.reward = out.reward;
      t.done = out.done;
      const double max_p = tree.max_priority();
      tree.push(std::move(t), max_p > 0.0 ? max_p : 1.0);

      learn_step(online, target, tree, cfg, rng);
      ++global_step;
      if (global_step % cfg.target_sync_period == 0) sync_target(online, target);

      if (out.done) break;
      state = out.next;
    }
  }

  const auto oracle = chain_value_iteration(cfg.gamma);
  for (int s = 0; s < 2; ++s) {
    const std::vector<double> q = online.forward(one_hot(s));
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(q[a] - oracle[s][a]) <= 1e-2);
    }
  }
}
