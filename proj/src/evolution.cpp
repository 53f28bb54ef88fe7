#include "racerl/evolution.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "racerl/binio.hpp"

namespace racerl {

void EvoConfig::validate() const {
  if (population_size < 1) throw std::invalid_argument("evolution: population_size must be >= 1");
  if (parent_count < 1 || parent_count > population_size) {
    throw std::invalid_argument("evolution: parent_count must be in [1, population_size]");
  }
  if (mutation_rate < 0.0 || mutation_rate > 1.0) {
    throw std::invalid_argument("evolution: mutation_rate must be in [0, 1]");
  }
  if (crossover_probability < 0.0 || crossover_probability > 1.0) {
    throw std::invalid_argument("evolution: crossover_probability must be in [0, 1]");
  }
  if (mutation_sigma <= 0.0) throw std::invalid_argument("evolution: mutation_sigma must be > 0");
  if (gene_bound <= 0.0) throw std::invalid_argument("evolution: gene_bound must be > 0");
  if (generations < 0) throw std::invalid_argument("evolution: generations must be >= 0");
  if (episodes_per_eval < 1) throw std::invalid_argument("evolution: episodes_per_eval must be >= 1");
}

NetworkShape policy_shape(int feature_count) {
  return NetworkShape::mlp({feature_count, 16, 16, 4}, Activation::kTanh, Activation::kLinear);
}

ContinuousAction policy_action(const std::vector<double>& outputs) {
  if (outputs.size() != 4) throw std::invalid_argument("policy: expected 4 outputs");
  ContinuousAction a;
  a.gas = std::clamp(outputs[0], 0.0, 1.0);
  a.steering = std::tanh(outputs[1] - outputs[2]);
  a.brake = std::clamp(outputs[3], 0.0, 1.0);
  return a;
}

EpisodeResult run_policy_episode(const Network& policy, const Track& track,
                                 const EvalContext& ctx) {
  Environment env(track, ObservationMode::kFeatures, ctx.features, {}, ctx.car,
                  ctx.max_frames);
  std::vector<double> obs = env.reset().data;
  while (!env.done()) {
    const StepOutcome out = env.step(policy_action(policy.forward(obs)));
    obs = out.observation.data;
  }
  return {env.cumulative_reward(), env.frame(), env.tiles_visited()};
}

EpisodeResult evaluate_genome(const Genome& genome, const Track& track,
                              const EvalContext& ctx) {
  const Network policy = decode(genome);
  EpisodeResult first{};
  double total = 0.0;
  for (int e = 0; e < ctx.episodes; ++e) {
    const EpisodeResult r = run_policy_episode(policy, track, ctx);
    if (e == 0) first = r;
    total += r.reward;
  }
  first.reward = total / ctx.episodes;
  return first;
}

namespace {

void fill_individual(Individual& ind, const Track& track, const EvalContext& ctx) {
  const EpisodeResult r = evaluate_genome(ind.genome, track, ctx);
  ind.fitness = r.reward;
  ind.frames = r.frames;
  ind.tiles = r.tiles;
}

}  // namespace

void evaluate_population(std::vector<Individual>& population, const Track& track,
                         const EvalContext& ctx) {
  const int n = static_cast<int>(population.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    fill_individual(population[i], track, ctx);
  }
}

void evaluate_population_serial(std::vector<Individual>& population, const Track& track,
                                const EvalContext& ctx) {
  for (Individual& ind : population) fill_individual(ind, track, ctx);
}

Genome mutate(const Genome& genome, const EvoConfig& cfg, Rng& rng) {
  Genome child = genome;
  for (double& gene : child.genes) {
    if (rng.uniform() < cfg.mutation_rate) {
      gene = std::clamp(gene + rng.normal(0.0, cfg.mutation_sigma), -cfg.gene_bound,
                        cfg.gene_bound);
    }
  }
  return child;
}

std::pair<Genome, Genome> crossover_segment(const Genome& a, const Genome& b, size_t begin,
                                            size_t end) {
  if (a.genes.size() != b.genes.size() || !(a.shape == b.shape)) {
    throw std::invalid_argument("crossover: parent shapes differ");
  }
  if (begin > end || end > a.genes.size()) {
    throw std::invalid_argument("crossover: segment out of range");
  }
  Genome ca = a;
  Genome cb = b;
  for (size_t k = begin; k < end; ++k) {
    ca.genes[k] = b.genes[k];
    cb.genes[k] = a.genes[k];
  }
  return {std::move(ca), std::move(cb)};
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, Rng& rng) {
  if (a.genes.size() != b.genes.size() || !(a.shape == b.shape)) {
    throw std::invalid_argument("crossover: parent shapes differ");
  }
  const size_t n = a.genes.size();
  size_t i = rng.uniform_index(n + 1);
  size_t j = rng.uniform_index(n + 1);
  if (i > j) std::swap(i, j);
  return crossover_segment(a, b, i, j);
}

std::vector<Individual> select_parents(const std::vector<Individual>& population,
                                       int parent_count) {
  if (parent_count < 1 || parent_count > static_cast<int>(population.size())) {
    throw std::invalid_argument("select_parents: parent_count exceeds population size");
  }
  std::vector<int> order(population.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    return population[lhs].fitness > population[rhs].fitness;
  });
  std::vector<Individual> parents;
  parents.reserve(parent_count);
  for (int k = 0; k < parent_count; ++k) parents.push_back(population[order[k]]);
  return parents;
}

GenerationOutput evolve_generation(const std::vector<Individual>& parents,
                                   const EvoConfig& cfg, const Track& track,
                                   const EvalContext& ctx, Rng& rng, int generation_index) {
  GenerationOutput out;
  out.population = parents;  // elites, fitness retained

  std::vector<Individual> offspring;
  while (out.population.size() + offspring.size() <
         static_cast<size_t>(cfg.population_size)) {
    const size_t ia = rng.uniform_index(parents.size());
    const size_t ib = rng.uniform_index(parents.size());
    Genome ca = parents[ia].genome;
    Genome cb = parents[ib].genome;
    if (rng.uniform() < cfg.crossover_probability) {
      std::tie(ca, cb) = crossover(ca, cb, rng);
    }
    offspring.push_back({mutate(ca, cfg, rng), 0.0, 0, 0});
    if (out.population.size() + offspring.size() <
        static_cast<size_t>(cfg.population_size)) {
      offspring.push_back({mutate(cb, cfg, rng), 0.0, 0, 0});
    }
  }
  evaluate_population(offspring, track, ctx);
  for (Individual& child : offspring) out.population.push_back(std::move(child));

  int best = 0;
  double mean = 0.0;
  for (size_t i = 0; i < out.population.size(); ++i) {
    mean += out.population[i].fitness;
    if (out.population[i].fitness > out.population[best].fitness) best = static_cast<int>(i);
  }
  mean /= static_cast<double>(out.population.size());

  out.record.generation = generation_index;
  out.record.best_fitness = out.population[best].fitness;
  out.record.mean_fitness = mean;
  out.record.best_checksum = genome_checksum(out.population[best].genome);
  out.record.best_frames = out.population[best].frames;
  out.record.best_tiles = out.population[best].tiles;
  return out;
}

EvolutionTrainer::EvolutionTrainer(EvoConfig cfg, Track track, EvalContext ctx)
    : cfg_(cfg),
      track_(std::move(track)),
      ctx_(ctx),
      rng_(Rng::from_stream(cfg.seed, 0x65766Full)) {  // evolution stream
  cfg_.validate();
  ctx_.episodes = cfg_.episodes_per_eval;
  const NetworkShape shape = policy_shape(6 + ctx_.features.curvature_samples);
  population_.reserve(cfg_.population_size);
  for (int i = 0; i < cfg_.population_size; ++i) {
    population_.push_back({random_genome(shape, rng_, cfg_.gene_bound), 0.0, 0, 0});
  }
  evaluate_population(population_, track_, ctx_);
  refresh_best();
}

void EvolutionTrainer::refresh_best() {
  const Individual* best = &population_.front();
  for (const Individual& ind : population_) {
    if (ind.fitness > best->fitness) best = &ind;
  }
  if (best_ever_.genome.genes.empty() || best->fitness > best_ever_.fitness) {
    best_ever_ = *best;
  }
}

GenerationRecord EvolutionTrainer::run_generation() {
  const std::vector<Individual> parents = select_parents(population_, cfg_.parent_count);
  GenerationOutput out = evolve_generation(parents, cfg_, track_, ctx_, rng_, generation_);
  population_ = std::move(out.population);
  ++generation_;
  refresh_best();
  return out.record;
}

namespace {

void write_genome(BinWriter& w, const Genome& g) {
  w.u64(g.genes.size());
  for (double gene : g.genes) w.f64(gene);
}

std::vector<double> read_genes(BinReader& r) {
  const uint64_t n = r.u64();
  std::vector<double> genes(n);
  for (uint64_t i = 0; i < n; ++i) genes[i] = r.f64();
  return genes;
}

constexpr uint32_t kEvoStateMagic = 0x53455652u;  // "RVES"

}  // namespace

std::string EvolutionTrainer::save_state() const {
  BinWriter w;
  w.u32(kEvoStateMagic);
  w.u32(1);  // version
  w.u32(static_cast<uint32_t>(generation_));
  const Rng::State rs = rng_.save();
  for (uint64_t word : rs.words) w.u64(word);
  w.u8(rs.has_spare ? 1 : 0);
  w.f64(rs.spare);
  w.u32(static_cast<uint32_t>(population_.size()));
  for (const Individual& ind : population_) {
    write_genome(w, ind.genome);
    w.f64(ind.fitness);
    w.u32(static_cast<uint32_t>(ind.frames));
    w.u32(static_cast<uint32_t>(ind.tiles));
  }
  write_genome(w, best_ever_.genome);
  w.f64(best_ever_.fitness);
  w.u32(static_cast<uint32_t>(best_ever_.frames));
  w.u32(static_cast<uint32_t>(best_ever_.tiles));
  return w.data();
}

void EvolutionTrainer::load_state(const std::string& data) {
  BinReader r(data);
  if (r.u32() != kEvoStateMagic) throw FormatError("evolution state: bad magic", 0);
  const uint32_t version = r.u32();
  if (version != 1) throw VersionError("evolution state: unsupported version", 4);
  generation_ = static_cast<int>(r.u32());
  Rng::State rs;
  for (uint64_t& word : rs.words) word = r.u64();
  rs.has_spare = r.u8() != 0;
  rs.spare = r.f64();
  rng_.restore(rs);

  const NetworkShape shape = policy_shape(6 + ctx_.features.curvature_samples);
  const uint32_t count = r.u32();
  if (count != static_cast<uint32_t>(cfg_.population_size)) {
    throw FormatError("evolution state: population size does not match config", r.offset());
  }
  population_.clear();
  for (uint32_t i = 0; i < count; ++i) {
    Individual ind;
    ind.genome = Genome{read_genes(r), shape};
    ind.fitness = r.f64();
    ind.frames = static_cast<int>(r.u32());
    ind.tiles = static_cast<int>(r.u32());
    population_.push_back(std::move(ind));
  }
  best_ever_.genome = Genome{read_genes(r), shape};
  best_ever_.fitness = r.f64();
  best_ever_.frames = static_cast<int>(r.u32());
  best_ever_.tiles = static_cast<int>(r.u32());
  r.expect_end();
}

EvolutionRun train_evolution(const EvoConfig& cfg, const TrackConfig& track_cfg) {
  EvalContext ctx;
  ctx.max_frames = track_cfg.max_frames;
  ctx.episodes = cfg.episodes_per_eval;
  return train_evolution(cfg, track_cfg, ctx);
}

EvolutionRun train_evolution(const EvoConfig& cfg, const TrackConfig& track_cfg,
                             const EvalContext& ctx) {
  EvolutionTrainer trainer(cfg, generate_track(track_cfg), ctx);
  EvolutionRun run;
  run.history.reserve(cfg.generations);
  for (int g = 0; g < cfg.generations; ++g) {
    run.history.push_back(trainer.run_generation());
  }
  run.best_genome = trainer.best_ever().genome;
  run.best_fitness = trainer.best_ever().fitness;
  return run;
}

}  // namespace racerl
