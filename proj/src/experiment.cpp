#include "racerl/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "racerl/csv.hpp"
#include "racerl/errors.hpp"

namespace racerl {

namespace fs = std::filesystem;

EvaluationReport make_report(const std::vector<double>& rewards) {
  EvaluationReport report;
  report.trials = static_cast<int>(rewards.size());
  report.rewards = rewards;
  if (rewards.empty()) return report;

  double sum = 0.0;
  for (double r : rewards) sum += r;
  report.mean = sum / report.trials;

  double sq = 0.0;
  for (double r : rewards) sq += (r - report.mean) * (r - report.mean);
  report.stddev = std::sqrt(sq / report.trials);

  report.solved = report.trials >= 100 && report.mean >= 900.0;
  return report;
}

namespace {

EpisodeResult run_greedy_q_episode(const Network& net, const Track& track,
                                   const EvalOptions& options, ObservationMode mode) {
  Environment env(track, mode, options.features, options.pixels, options.car,
                  options.track.max_frames);
  std::vector<double> obs = env.reset().data;
  while (!env.done()) {
    const int action = argmax_lowest(net.forward(obs));
    const StepOutcome out = env.step(options.actions.actions[action]);
    obs = out.observation.data;
  }
  return {env.cumulative_reward(), env.frame(), env.tiles_visited()};
}

// The checkpoint shape decides the rollout: policy genomes map four outputs
// onto continuous controls, Q-networks pick greedily from the action bank.
EpisodeResult run_checkpoint_episode(const Checkpoint& cp, const Network& net,
                                     const Track& track, const EvalOptions& options) {
  if (cp.role == CheckpointRole::kPolicyGenome) {
    EvalContext ctx;
    ctx.car = options.car;
    ctx.features = options.features;
    ctx.max_frames = options.track.max_frames;
    ctx.episodes = 1;
    return run_policy_episode(net, track, ctx);
  }
  const ObservationMode mode =
      cp.genome.shape.grid_input ? ObservationMode::kPixels : ObservationMode::kFeatures;
  return run_greedy_q_episode(net, track, options, mode);
}

// Feature count and pixel dims must match the checkpointed input layer.
EvalOptions reconcile_options(const Checkpoint& cp, EvalOptions options) {
  if (cp.genome.shape.grid_input) {
    options.pixels.height = cp.genome.shape.input_dims.height;
    options.pixels.width = cp.genome.shape.input_dims.width;
    options.pixels.channels = cp.genome.shape.input_dims.channels;
  } else {
    const int samples = cp.genome.shape.input_size - 6;
    if (samples < 0) {
      throw std::invalid_argument("evaluate: checkpoint input is smaller than the scalar block");
    }
    options.features.curvature_samples = samples;
  }
  return options;
}

}  // namespace

std::vector<TrialResult> run_evaluation_trials(const Checkpoint& cp,
                                               const std::vector<uint64_t>& track_seeds,
                                               int trials, const EvalOptions& options) {
  if (trials < 1) throw std::invalid_argument("evaluate: trials must be >= 1");
  if (track_seeds.empty() && options.track_override.empty()) {
    throw std::invalid_argument("evaluate: need at least one track seed");
  }

  const EvalOptions opts = reconcile_options(cp, options);
  const Network net = decode(cp.genome);

  // Explicit tracks win; otherwise tracks are generated once per seed. Trials
  // cycle the list either way.
  std::vector<Track> tracks = opts.track_override;
  std::vector<uint64_t> seeds;
  if (tracks.empty()) {
    tracks.reserve(track_seeds.size());
    for (uint64_t seed : track_seeds) {
      TrackConfig tc = opts.track;
      tc.seed = seed;
      tracks.push_back(generate_track(tc));
    }
    seeds = track_seeds;
  } else {
    for (const Track& t : tracks) seeds.push_back(t.seed());
  }

  std::vector<TrialResult> results(trials);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    const size_t which = static_cast<size_t>(t) % tracks.size();
    results[t].seed = seeds[which];
    results[t].episode = run_checkpoint_episode(cp, net, tracks[which], opts);
  }
  return results;
}

EvaluationReport evaluate_policy(const std::string& checkpoint_path,
                                 const std::vector<uint64_t>& track_seeds, int trials,
                                 const EvalOptions& options, std::vector<TrialResult>* details) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  std::vector<TrialResult> results = run_evaluation_trials(cp, track_seeds, trials, options);
  std::vector<double> rewards(results.size());
  for (size_t i = 0; i < results.size(); ++i) rewards[i] = results[i].episode.reward;
  if (details) *details = std::move(results);
  return make_report(rewards);
}

namespace {

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void run_evolution_experiment(const ExperimentConfig& cfg, const std::string& resume_path,
                              std::ofstream& history) {
  EvalContext ctx;
  ctx.features = cfg.features;
  ctx.max_frames = cfg.track.max_frames;
  ctx.episodes = cfg.evolution.episodes_per_eval;

  EvolutionTrainer trainer(cfg.evolution, generate_track(cfg.track), ctx);
  if (!resume_path.empty()) trainer.load_state(read_file(resume_path));

  const fs::path out_dir(cfg.out_dir);
  history << "generation,best_fitness,mean_fitness,frames_of_best,tiles_of_best\n";
  for (int g = trainer.generation(); g < cfg.evolution.generations; ++g) {
    const GenerationRecord rec = trainer.run_generation();
    history << rec.generation << ',' << format_double(rec.best_fitness) << ','
            << format_double(rec.mean_fitness) << ',' << rec.best_frames << ','
            << rec.best_tiles << '\n';
    std::printf("[evolution] gen %d/%d best %.3f mean %.3f\n", rec.generation + 1,
                cfg.evolution.generations, rec.best_fitness, rec.mean_fitness);
    std::fflush(stdout);

    const int completed = rec.generation + 1;
    if (completed % cfg.checkpoint_period == 0 && completed < cfg.evolution.generations) {
      save_checkpoint({CheckpointRole::kPolicyGenome, trainer.best_ever().genome},
                      (out_dir / ("checkpoint_" + std::to_string(completed) + ".bin")).string());
      write_file(out_dir / ("state_" + std::to_string(completed) + ".bin"),
                 trainer.save_state());
    }
  }
  save_checkpoint({CheckpointRole::kPolicyGenome, trainer.best_ever().genome},
                  (out_dir / "best.bin").string());
  write_file(out_dir / "state_final.bin", trainer.save_state());
}

void run_ddqn_experiment(const ExperimentConfig& cfg, const std::string& resume_path,
                         std::ofstream& history) {
  DdqnTrainer trainer(cfg.ddqn, generate_track(cfg.track), DiscreteActionSet::default_set(),
                      CarParams{}, cfg.features, cfg.pixels, cfg.track.max_frames);
  if (!resume_path.empty()) trainer.load_state(read_file(resume_path));

  const fs::path out_dir(cfg.out_dir);
  history << "episode,reward,frames,tiles,epsilon,mean_td_error\n";
  for (int e = trainer.episode(); e < cfg.ddqn.episodes; ++e) {
    const DdqnEpisodeRecord rec = trainer.run_episode();
    history << rec.episode << ',' << format_double(rec.reward) << ',' << rec.frames << ','
            << rec.tiles << ',' << format_double(rec.epsilon) << ','
            << format_double(rec.mean_td_error) << '\n';
    std::printf("[ddqn] episode %d/%d reward %.3f epsilon %.3f\n", rec.episode + 1,
                cfg.ddqn.episodes, rec.reward, rec.epsilon);
    std::fflush(stdout);

    const int completed = rec.episode + 1;
    if (completed % cfg.checkpoint_period == 0 && completed < cfg.ddqn.episodes) {
      save_checkpoint({CheckpointRole::kDdqnOnline, encode(trainer.online())},
                      (out_dir / ("checkpoint_" + std::to_string(completed) + ".bin")).string());
      write_file(out_dir / ("state_" + std::to_string(completed) + ".bin"),
                 trainer.save_state());
    }
  }
  save_checkpoint({CheckpointRole::kDdqnOnline, encode(trainer.online())},
                  (out_dir / "best.bin").string());
  write_file(out_dir / "state_final.bin", trainer.save_state());
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const std::string& resume_path) {
  try {
    config.validate();

    const fs::path out_dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + config.out_dir + "'");

    // Open the history first so an unwritable directory fails before training.
    std::ofstream history(out_dir / "history.csv", std::ios::trunc);
    if (!history) throw IoError("cannot open history.csv under '" + config.out_dir + "'");

    write_file(out_dir / "config.txt", render_config(config));

    if (config.method == TrainMethod::kEvolution) {
      run_evolution_experiment(config, resume_path, history);
    } else {
      run_ddqn_experiment(config, resume_path, history);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kExitTrainingError;
  }
}

}  // namespace racerl
