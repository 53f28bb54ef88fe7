#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "racerl/environment.hpp"
#include "racerl/network.hpp"
#include "racerl/rng.hpp"
#include "racerl/track.hpp"

namespace racerl {

struct EvoConfig {
  int population_size = 64;
  int parent_count = 8;
  double mutation_rate = 0.1;         // per-gene perturbation probability
  double mutation_sigma = 0.1;        // stddev of the perturbation
  double gene_bound = 1.0;            // genes clamped to [-B, B]
  double crossover_probability = 0.7; // per child pair
  int generations = 100;
  uint64_t seed = 0;
  int episodes_per_eval = 1;

  void validate() const;  // throws std::invalid_argument
};

struct EpisodeResult {
  double reward = 0.0;
  int frames = 0;
  int tiles = 0;
};

struct Individual {
  Genome genome;
  double fitness = 0.0;
  int frames = 0;
  int tiles = 0;
};

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  uint64_t best_checksum = 0;
  int best_frames = 0;
  int best_tiles = 0;
};

// Everything an episode rollout needs besides the genome and the track.
struct EvalContext {
  CarParams car;
  FeatureSpec features;
  int max_frames = 2000;
  int episodes = 1;
};

// Policy network layout: feature vector in, one output per control
// (gas, steer-left, steer-right, brake).
NetworkShape policy_shape(int feature_count);

// Map the four raw policy outputs onto a continuous action: steering is the
// tanh-bounded left-minus-right difference, gas and brake are clamped.
ContinuousAction policy_action(const std::vector<double>& outputs);

EpisodeResult run_policy_episode(const Network& policy, const Track& track,
                                 const EvalContext& ctx);

// Mean episode reward over ctx.episodes runs of the decoded genome; frames
// and tiles report the first episode.
EpisodeResult evaluate_genome(const Genome& genome, const Track& track,
                              const EvalContext& ctx);

// Fills fitness/frames/tiles for every individual. The parallel version
// splits individuals across OpenMP workers, each with a private environment;
// results land in individual order, so both versions produce identical
// populations.
void evaluate_population(std::vector<Individual>& population, const Track& track,
                         const EvalContext& ctx);
void evaluate_population_serial(std::vector<Individual>& population, const Track& track,
                                const EvalContext& ctx);

// Per-gene normal perturbation with probability mutation_rate, clamped to
// [-gene_bound, gene_bound]; untouched genes are bit-identical.
Genome mutate(const Genome& genome, const EvoConfig& cfg, Rng& rng);

// Children swap the genes in [begin, end) and keep the rest of their own
// parent.
std::pair<Genome, Genome> crossover_segment(const Genome& a, const Genome& b, size_t begin,
                                            size_t end);

// Swap a uniformly chosen contiguous gene segment between two parents.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, Rng& rng);

// Top parent_count individuals by fitness; ties keep the lower index.
std::vector<Individual> select_parents(const std::vector<Individual>& population,
                                       int parent_count);

struct GenerationOutput {
  std::vector<Individual> population;
  GenerationRecord record;
};

// Elites carry over verbatim with cached fitness; offspring fill the
// population via crossover + mutation and are evaluated in index order.
GenerationOutput evolve_generation(const std::vector<Individual>& parents,
                                   const EvoConfig& cfg, const Track& track,
                                   const EvalContext& ctx, Rng& rng, int generation_index);

// Stateful loop around evolve_generation with snapshot support for
// checkpoint/resume.
class EvolutionTrainer {
 public:
  EvolutionTrainer(EvoConfig cfg, Track track, EvalContext ctx);

  GenerationRecord run_generation();

  int generation() const { return generation_; }
  const EvoConfig& config() const { return cfg_; }
  const std::vector<Individual>& population() const { return population_; }
  const Individual& best_ever() const { return best_ever_; }

  // Binary snapshot of the mutable state (generation, rng, population, best).
  // Loading expects the same config and track the snapshot was taken with.
  std::string save_state() const;
  void load_state(const std::string& data);

 private:
  void refresh_best();

  EvoConfig cfg_;
  Track track_;
  EvalContext ctx_;
  Rng rng_;
  std::vector<Individual> population_;
  Individual best_ever_;
  int generation_ = 0;
};

struct EvolutionRun {
  Genome best_genome;
  double best_fitness = 0.0;
  std::vector<GenerationRecord> history;
};

EvolutionRun train_evolution(const EvoConfig& cfg, const TrackConfig& track_cfg);
EvolutionRun train_evolution(const EvoConfig& cfg, const TrackConfig& track_cfg,
                             const EvalContext& ctx);

}  // namespace racerl
