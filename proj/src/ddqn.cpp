#include "racerl/ddqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "racerl/binio.hpp"

namespace racerl {

void DiscreteActionSet::validate() const {
  if (actions.size() < 2) throw std::invalid_argument("actions: need at least 2 entries");
  for (const ContinuousAction& a : actions) a.validate();
  for (size_t i = 0; i < actions.size(); ++i) {
    for (size_t j = i + 1; j < actions.size(); ++j) {
      if (actions[i].steering == actions[j].steering && actions[i].gas == actions[j].gas &&
          actions[i].brake == actions[j].brake) {
        throw std::invalid_argument("actions: duplicate entries");
      }
    }
  }
}

DiscreteActionSet DiscreteActionSet::default_set() {
  DiscreteActionSet set;
  set.actions = {
      {-1.0, 0.0, 0.0},  // steer right
      {1.0, 0.0, 0.0},   // steer left
      {0.0, 1.0, 0.0},   // gas
      {0.0, 0.0, 0.8},   // brake
      {0.0, 0.0, 0.0},   // coast
  };
  return set;
}

void DdqnConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("ddqn: gamma must be in [0, 1]");
  if (learning_rate < 0.0) throw std::invalid_argument("ddqn: learning_rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("ddqn: batch_size must be >= 1");
  if (replay_capacity == 0 || (replay_capacity & (replay_capacity - 1)) != 0) {
    throw std::invalid_argument("ddqn: replay_capacity must be a power of two");
  }
  if (static_cast<size_t>(batch_size) > replay_capacity) {
    throw std::invalid_argument("ddqn: batch_size must not exceed replay_capacity");
  }
  if (priority_exponent < 0.0) throw std::invalid_argument("ddqn: priority_exponent must be >= 0");
  if (priority_floor <= 0.0) throw std::invalid_argument("ddqn: priority_floor must be > 0");
  if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0) {
    throw std::invalid_argument("ddqn: epsilon bounds must be in [0, 1]");
  }
  if (epsilon_decay_episodes < 0) {
    throw std::invalid_argument("ddqn: epsilon_decay_episodes must be >= 0");
  }
  if (target_sync_period < 1) throw std::invalid_argument("ddqn: target_sync_period must be >= 1");
  if (episodes < 0) throw std::invalid_argument("ddqn: episodes must be >= 0");
  if (is_beta < 0.0 || is_beta > 1.0) throw std::invalid_argument("ddqn: is_beta must be in [0, 1]");
}

int DdqnConfig::resolved_decay_episodes() const {
  if (epsilon_decay_episodes > 0) return epsilon_decay_episodes;
  return std::max(1, static_cast<int>(0.8 * episodes));
}

int argmax_lowest(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> double_q_targets(const std::vector<const Transition*>& batch,
                                     const Network& online, const Network& target,
                                     double gamma) {
  if (batch.empty()) throw std::invalid_argument("targets: empty batch");
  if (!(online.shape() == target.shape())) {
    throw std::invalid_argument("targets: online/target shapes differ");
  }
  std::vector<double> targets(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    if (t.done) {
      targets[i] = t.reward;
      continue;
    }
    const int chosen = argmax_lowest(online.forward(t.next_state));
    const std::vector<double> valued = target.forward(t.next_state);
    targets[i] = t.reward + gamma * valued[chosen];
  }
  return targets;
}

int select_action(const std::vector<double>& q_values, double epsilon, Rng& rng) {
  if (rng.uniform() < epsilon) {
    return static_cast<int>(rng.uniform_index(q_values.size()));
  }
  return argmax_lowest(q_values);
}

void sync_target(const Network& online, Network& target) {
  if (!(online.shape() == target.shape())) {
    throw std::invalid_argument("sync: online/target shapes differ");
  }
  for (size_t l = 0; l < online.layer_count(); ++l) {
    target.layer_weights(l) = online.layer_weights(l);
    target.layer_biases(l) = online.layer_biases(l);
  }
}

LearnResult learn_step(Network& online, const Network& target, SumTree& tree,
                       const DdqnConfig& cfg, Rng& rng) {
  if (tree.size() < static_cast<size_t>(cfg.batch_size)) return {false, 0.0};

  // Stratified proportional sampling: one prefix per equal sub-interval.
  const int batch = cfg.batch_size;
  const double segment = tree.total() / batch;
  std::vector<size_t> leaves(batch);
  std::vector<const Transition*> transitions(batch);
  std::vector<double> probabilities(batch);
  for (int k = 0; k < batch; ++k) {
    double prefix = (k + rng.uniform()) * segment;
    prefix = std::min(prefix, std::nextafter(tree.total(), 0.0));
    const SumTree::SampleRef ref = tree.sample(prefix);
    leaves[k] = ref.leaf;
    transitions[k] = &tree.at(ref.leaf);
    probabilities[k] = ref.priority / tree.total();
  }

  const std::vector<double> targets = double_q_targets(transitions, online, target, cfg.gamma);

  std::vector<double> weights(batch, 1.0);
  if (cfg.use_importance_sampling) {
    double max_w = 0.0;
    for (int k = 0; k < batch; ++k) {
      weights[k] = std::pow(tree.size() * probabilities[k], -cfg.is_beta);
      max_w = std::max(max_w, weights[k]);
    }
    for (double& w : weights) w /= max_w;
  }

  // Mean squared TD error over the batch; gradient lands on the taken action.
  GradientSet accumulated = online.zero_gradients();
  std::vector<double> td(batch);
  double mean_abs_td = 0.0;
  for (int k = 0; k < batch; ++k) {
    const Transition& t = *transitions[k];
    const std::vector<double> q = online.forward(t.state);
    td[k] = q[t.action] - targets[k];
    mean_abs_td += std::abs(td[k]);

    std::vector<double> upstream(q.size(), 0.0);
    upstream[t.action] = 2.0 * td[k] * weights[k] / batch;
    accumulated.accumulate(online.backward(t.state, upstream));
  }
  mean_abs_td /= batch;

  online.sgd_step(accumulated, cfg.learning_rate);

  for (int k = 0; k < batch; ++k) {
    tree.update(leaves[k], std::pow(std::abs(td[k]) + cfg.priority_floor, cfg.priority_exponent));
  }
  return {true, mean_abs_td};
}

NetworkShape q_shape_pixels(const PixelSpec& pixels, int action_count) {
  NetworkShape shape;
  shape.grid_input = true;
  shape.input_dims = {pixels.height, pixels.width, pixels.channels};
  shape.layers.push_back(LayerSpec::conv(pixels.channels, 8, 4, 2, Activation::kRelu));
  shape.layers.push_back(LayerSpec::conv(8, 16, 3, 2, Activation::kRelu));
  shape.layers.push_back(LayerSpec::flatten());
  const int h1 = (pixels.height - 4) / 2 + 1;
  const int w1 = (pixels.width - 4) / 2 + 1;
  const int h2 = (h1 - 3) / 2 + 1;
  const int w2 = (w1 - 3) / 2 + 1;
  shape.layers.push_back(LayerSpec::dense(h2 * w2 * 16, 64, Activation::kRelu));
  shape.layers.push_back(LayerSpec::dense(64, action_count, Activation::kLinear));
  return shape;
}

NetworkShape q_shape_features(int feature_count, int action_count) {
  return NetworkShape::mlp({feature_count, 64, 64, action_count}, Activation::kRelu,
                           Activation::kLinear);
}

namespace {

NetworkShape q_shape_for(const DdqnConfig& cfg, const FeatureSpec& features,
                         const PixelSpec& pixels, int action_count) {
  if (cfg.observation == ObservationMode::kPixels) {
    return q_shape_pixels(pixels, action_count);
  }
  return q_shape_features(6 + features.curvature_samples, action_count);
}

}  // namespace

DdqnTrainer::DdqnTrainer(DdqnConfig cfg, Track track, DiscreteActionSet actions,
                         CarParams car, FeatureSpec features, PixelSpec pixels,
                         int max_frames)
    : cfg_(cfg),
      actions_(std::move(actions)),
      env_(std::move(track), cfg.observation, features, pixels, car, max_frames),
      online_(q_shape_for(cfg, features, pixels, static_cast<int>(actions_.size()))),
      target_(online_.shape()),
      tree_(cfg.replay_capacity),
      rng_(Rng::from_stream(cfg.seed, 0x6464716Eull)) {  // ddqn stream
  cfg_.validate();
  actions_.validate();
  online_ = he_initialized(online_.shape(), rng_);
  sync_target(online_, target_);
}

double DdqnTrainer::epsilon_for(int episode) const {
  const int decay = cfg_.resolved_decay_episodes();
  if (episode >= decay) return cfg_.epsilon_end;
  return cfg_.epsilon_start +
         (cfg_.epsilon_end - cfg_.epsilon_start) * (static_cast<double>(episode) / decay);
}

DdqnEpisodeRecord DdqnTrainer::run_episode() {
  const double epsilon = epsilon_for(episode_);
  std::vector<double> obs = env_.reset().data;

  double td_sum = 0.0;
  int td_count = 0;
  while (!env_.done()) {
    const std::vector<double> q = online_.forward(obs);
    const int action = select_action(q, epsilon, rng_);
    const StepOutcome out = env_.step(actions_.actions[action]);

    Transition t;
    t.state = std::move(obs);
    t.next_state = out.observation.data;
    t.action = action;
    t.reward = out.reward;
    t.done = out.done;
    const double max_p = tree_.max_priority();
    tree_.push(std::move(t), max_p > 0.0 ? max_p : 1.0);

    const LearnResult learned = learn_step(online_, target_, tree_, cfg_, rng_);
    if (learned.ready) {
      td_sum += learned.mean_abs_td;
      ++td_count;
    }

    ++global_step_;
    if (global_step_ % cfg_.target_sync_period == 0) sync_target(online_, target_);

    obs = out.observation.data;
  }

  DdqnEpisodeRecord rec;
  rec.episode = episode_;
  rec.reward = env_.cumulative_reward();
  rec.frames = env_.frame();
  rec.tiles = env_.tiles_visited();
  rec.epsilon = epsilon;
  rec.mean_td_error = td_count > 0 ? td_sum / td_count : 0.0;
  ++episode_;
  return rec;
}

namespace {

constexpr uint32_t kDdqnStateMagic = 0x53515652u;  // "RVQS"

void write_params(BinWriter& w, const Network& net) {
  for (size_t l = 0; l < net.layer_count(); ++l) {
    for (double v : net.layer_weights(l)) w.f64(v);
    for (double v : net.layer_biases(l)) w.f64(v);
  }
}

void read_params(BinReader& r, Network& net) {
  for (size_t l = 0; l < net.layer_count(); ++l) {
    for (double& v : net.layer_weights(l)) v = r.f64();
    for (double& v : net.layer_biases(l)) v = r.f64();
  }
}

}  // namespace

std::string DdqnTrainer::save_state() const {
  BinWriter w;
  w.u32(kDdqnStateMagic);
  w.u32(1);  // version
  w.u32(static_cast<uint32_t>(episode_));
  w.u64(static_cast<uint64_t>(global_step_));
  const Rng::State rs = rng_.save();
  for (uint64_t word : rs.words) w.u64(word);
  w.u8(rs.has_spare ? 1 : 0);
  w.f64(rs.spare);
  write_params(w, online_);
  write_params(w, target_);
  tree_.serialize(w);
  return w.data();
}

void DdqnTrainer::load_state(const std::string& data) {
  BinReader r(data);
  if (r.u32() != kDdqnStateMagic) throw FormatError("ddqn state: bad magic", 0);
  if (r.u32() != 1) throw VersionError("ddqn state: unsupported version", 4);
  episode_ = static_cast<int>(r.u32());
  global_step_ = static_cast<int64_t>(r.u64());
  Rng::State rs;
  for (uint64_t& word : rs.words) word = r.u64();
  rs.has_spare = r.u8() != 0;
  rs.spare = r.f64();
  rng_.restore(rs);
  read_params(r, online_);
  read_params(r, target_);
  SumTree restored = SumTree::deserialize(r);
  if (restored.capacity() != cfg_.replay_capacity) {
    throw FormatError("ddqn state: replay capacity does not match config", r.offset());
  }
  tree_ = std::move(restored);
  r.expect_end();
}

std::pair<Network, std::vector<DdqnEpisodeRecord>> train_ddqn(
    const DdqnConfig& cfg, const TrackConfig& track_cfg, const DiscreteActionSet& actions) {
  DdqnTrainer trainer(cfg, generate_track(track_cfg), actions, {}, {}, {},
                      track_cfg.max_frames);
  std::vector<DdqnEpisodeRecord> records;
  records.reserve(cfg.episodes);
  for (int e = 0; e < cfg.episodes; ++e) records.push_back(trainer.run_episode());
  return {trainer.online(), std::move(records)};
}

}  // namespace racerl
