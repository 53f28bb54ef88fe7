#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "racerl/checkpoint.hpp"
#include "racerl/config.hpp"
#include "racerl/ddqn.hpp"
#include "racerl/evolution.hpp"

namespace racerl {

// Per-trial rewards of greedy evaluation episodes. solved requires at least
// 100 trials with mean reward >= 900, no rounding leniency.
struct EvaluationReport {
  int trials = 0;
  std::vector<double> rewards;
  double mean = 0.0;
  double stddev = 0.0;
  bool solved = false;
};

EvaluationReport make_report(const std::vector<double>& rewards);

struct TrialResult {
  uint64_t seed = 0;
  EpisodeResult episode;
};

struct EvalOptions {
  TrackConfig track;           // seed replaced per trial
  FeatureSpec features;
  PixelSpec pixels;
  CarParams car;
  DiscreteActionSet actions = DiscreteActionSet::default_set();
  // Pre-built circuits (e.g. loaded from serialized track files); when
  // non-empty these replace seed-generated tracks.
  std::vector<Track> track_override;
};

// Greedy deterministic episodes, one per seed (cycling through the list).
// Trials run in parallel workers; results are ordered by trial index.
std::vector<TrialResult> run_evaluation_trials(const Checkpoint& cp,
                                               const std::vector<uint64_t>& track_seeds,
                                               int trials, const EvalOptions& options);

EvaluationReport evaluate_policy(const std::string& checkpoint_path,
                                 const std::vector<uint64_t>& track_seeds, int trials,
                                 const EvalOptions& options,
                                 std::vector<TrialResult>* details = nullptr);

// Exit codes shared by the harness and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitIoError = 2;
inline constexpr int kExitTrainingError = 3;

// Dispatches to the configured trainer; writes the resolved config, the
// history CSV, periodic checkpoints + resume snapshots, and a final best
// checkpoint under config.out_dir. Returns an exit code instead of throwing.
int run_experiment(const ExperimentConfig& config, const std::string& resume_path = "");

}  // namespace racerl
