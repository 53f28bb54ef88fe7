#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "racerl/environment.hpp"
#include "racerl/network.hpp"
#include "racerl/rng.hpp"
#include "racerl/sum_tree.hpp"
#include "racerl/track.hpp"

namespace racerl {

// Fixed bank of continuous-control templates the Q-network chooses from.
struct DiscreteActionSet {
  std::vector<ContinuousAction> actions;

  size_t size() const { return actions.size(); }
  void validate() const;  // throws std::invalid_argument

  // Five controls spanning steering, gas and brake:
  // (-1,0,0), (1,0,0), (0,1,0), (0,0,0.8), (0,0,0).
  static DiscreteActionSet default_set();
};

struct DdqnConfig {
  double gamma = 0.99;
  double learning_rate = 1e-3;
  int batch_size = 32;
  size_t replay_capacity = 16384;     // power of two
  double priority_exponent = 0.6;     // alpha
  double priority_floor = 1e-3;       // epsilon_p
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 0;     // 0 -> 80% of episodes
  int target_sync_period = 1000;      // steps between hard target copies
  int episodes = 100;
  uint64_t seed = 0;
  bool use_importance_sampling = false;
  double is_beta = 0.4;
  ObservationMode observation = ObservationMode::kPixels;

  void validate() const;
  int resolved_decay_episodes() const;
};

// y = r for terminal transitions, otherwise r + gamma * T(s')[argmax Q(s')].
// The online network picks the action, the target network values it.
std::vector<double> double_q_targets(const std::vector<const Transition*>& batch,
                                     const Network& online, const Network& target,
                                     double gamma);

// Lowest index wins ties.
int argmax_lowest(const std::vector<double>& values);

// Uniform random with probability epsilon, otherwise greedy.
int select_action(const std::vector<double>& q_values, double epsilon, Rng& rng);

void sync_target(const Network& online, Network& target);

struct LearnResult {
  bool ready = false;        // false when the buffer is still warming up
  double mean_abs_td = 0.0;
};

// Stratified proportional batch, double-Q targets, one SGD step on the mean
// squared TD error, then per-leaf priority refresh to (|td| + floor)^alpha.
LearnResult learn_step(Network& online, const Network& target, SumTree& tree,
                       const DdqnConfig& cfg, Rng& rng);

struct DdqnEpisodeRecord {
  int episode = 0;
  double reward = 0.0;
  int frames = 0;
  int tiles = 0;
  double epsilon = 0.0;
  double mean_td_error = 0.0;
};

// Default Q-network layouts.
NetworkShape q_shape_pixels(const PixelSpec& pixels, int action_count);
NetworkShape q_shape_features(int feature_count, int action_count);

// Episode-at-a-time trainer: epsilon-greedy rollouts, per-frame learning once
// the buffer holds a batch, hard target syncs on a global step counter.
class DdqnTrainer {
 public:
  DdqnTrainer(DdqnConfig cfg, Track track, DiscreteActionSet actions,
              CarParams car = {}, FeatureSpec features = {}, PixelSpec pixels = {},
              int max_frames = 2000);

  DdqnEpisodeRecord run_episode();

  int episode() const { return episode_; }
  double epsilon_for(int episode) const;
  const Network& online() const { return online_; }
  const Network& target() const { return target_; }
  const DdqnConfig& config() const { return cfg_; }

  // Binary snapshot: episode/step counters, rng, both networks, full replay.
  std::string save_state() const;
  void load_state(const std::string& data);

 private:
  DdqnConfig cfg_;
  DiscreteActionSet actions_;
  Environment env_;
  Network online_;
  Network target_;
  SumTree tree_;
  Rng rng_;
  int episode_ = 0;
  int64_t global_step_ = 0;
};

std::pair<Network, std::vector<DdqnEpisodeRecord>> train_ddqn(
    const DdqnConfig& cfg, const TrackConfig& track_cfg, const DiscreteActionSet& actions);

}  // namespace racerl
