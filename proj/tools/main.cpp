#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "racerl/csv.hpp"
#include "racerl/errors.hpp"
#include "racerl/experiment.hpp"
#include "racerl/track.hpp"

namespace {

using namespace racerl;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  std::vector<uint64_t> seeds;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::strtoull(item.c_str(), nullptr, 10));
  }
  return seeds;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

void apply_seed_override(ExperimentConfig& cfg, uint64_t seed) {
  cfg.track.seed = seed;
  cfg.evolution.seed = seed;
  cfg.ddqn.seed = seed;
}

int cmd_train(const std::string& config_path, bool have_seed, uint64_t seed,
              const std::string& out, const std::string& resume) {
  ExperimentConfig cfg = load_config(config_path);
  if (have_seed) apply_seed_override(cfg, seed);
  if (!out.empty()) cfg.out_dir = out;
  return run_experiment(cfg, resume);
}

int cmd_evaluate(const std::string& checkpoint, const std::string& config_path,
                 const std::string& track_path, bool have_seed, uint64_t seed,
                 const std::string& seeds_text, int trials, const std::string& out) {
  EvalOptions options;
  if (!config_path.empty()) {
    const ExperimentConfig cfg = load_config(config_path);
    options.track = cfg.track;
    options.features = cfg.features;
    options.pixels = cfg.pixels;
  }
  if (have_seed) options.track.seed = seed;
  if (!track_path.empty()) {
    options.track_override.push_back(parse_track(read_text_file(track_path)));
  }

  std::vector<uint64_t> track_seeds = parse_seed_list(seeds_text);
  if (track_seeds.empty() && options.track_override.empty()) {
    // Held-out seeds by default: offset well past the training seed.
    for (uint64_t i = 0; i < 10; ++i) track_seeds.push_back(options.track.seed + 1000 + i);
  }

  std::vector<TrialResult> details;
  const EvaluationReport report =
      evaluate_policy(checkpoint, track_seeds, trials, options, &details);

  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream csv(std::filesystem::path(out) / "eval.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot open eval.csv under '" + out + "'");
    csv << "trial,seed,reward,frames,tiles\n";
    for (size_t i = 0; i < details.size(); ++i) {
      csv << i << ',' << details[i].seed << ',' << format_double(details[i].episode.reward)
          << ',' << details[i].episode.frames << ',' << details[i].episode.tiles << '\n';
    }
  }

  std::cout << "trials " << report.trials << "\n";
  std::cout << "mean " << format_double(report.mean) << "\n";
  std::cout << "stddev " << format_double(report.stddev) << "\n";
  std::cout << "solved " << (report.solved ? "true" : "false") << "\n";
  return kExitOk;
}

int cmd_gen_track(const std::string& config_path, bool have_seed, uint64_t seed,
                  const std::string& out) {
  TrackConfig tc;
  if (!config_path.empty()) tc = load_config(config_path).track;
  if (have_seed) tc.seed = seed;

  const Track track = generate_track(tc);
  std::filesystem::create_directories(out);
  const auto path = std::filesystem::path(out) / "track.txt";
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  file << serialize_track(track);
  std::cout << "wrote " << path.string() << " (" << track.tile_count() << " tiles, length "
            << format_double(track.total_length()) << ")\n";
  return kExitOk;
}

int cmd_inspect(const std::string& path) {
  const Checkpoint cp = load_checkpoint(path);
  const char* role = cp.role == CheckpointRole::kPolicyGenome  ? "policy-genome"
                     : cp.role == CheckpointRole::kDdqnOnline ? "ddqn-online"
                                                              : "ddqn-target";
  std::cout << "role " << role << "\n";
  if (cp.genome.shape.grid_input) {
    std::cout << "input grid " << cp.genome.shape.input_dims.height << "x"
              << cp.genome.shape.input_dims.width << "x" << cp.genome.shape.input_dims.channels
              << "\n";
  } else {
    std::cout << "input vector " << cp.genome.shape.input_size << "\n";
  }
  for (const LayerSpec& layer : cp.genome.shape.layers) {
    switch (layer.kind) {
      case LayerKind::kDense:
        std::cout << "layer dense " << layer.in << "->" << layer.out;
        break;
      case LayerKind::kConv:
        std::cout << "layer conv " << layer.in_channels << "->" << layer.out_channels
                  << " k" << layer.kernel << " s" << layer.stride;
        break;
      case LayerKind::kFlatten:
        std::cout << "layer flatten";
        break;
    }
    const char* act = layer.activation == Activation::kTanh   ? " tanh"
                      : layer.activation == Activation::kRelu ? " relu"
                                                              : "";
    std::cout << act << "\n";
  }
  std::cout << "parameters " << cp.genome.genes.size() << "\n";
  std::cout << "checksum " << genome_checksum(cp.genome) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"racerl: tile-track driving workbench with evolutionary and DDQN trainers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string resume;
  std::string checkpoint;
  std::string seeds_text;
  uint64_t seed = 0;
  int trials = 100;

  auto* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", config_path, "experiment config file")->required();
  auto* train_seed = train->add_option("--seed", seed, "override track and trainer seeds");
  train->add_option("--out", out, "override the output directory");
  train->add_option("--resume", resume, "resume from a state snapshot");

  std::string track_path;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint over seeded trials");
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  evaluate->add_option("--config", config_path, "experiment config for track/env settings");
  auto* eval_seed = evaluate->add_option("--seed", seed, "override the base track seed");
  evaluate->add_option("--track-seeds", seeds_text, "comma-separated evaluation track seeds");
  evaluate->add_option("--track", track_path, "serialized track file to evaluate on");
  evaluate->add_option("--trials", trials, "number of evaluation episodes");
  evaluate->add_option("--out", out, "directory for eval.csv");

  auto* gen = app.add_subcommand("gen-track", "generate and serialize a track");
  gen->add_option("--config", config_path, "experiment config for track settings");
  auto* gen_seed = gen->add_option("--seed", seed, "track seed");
  gen->add_option("--out", out, "output directory")->default_val(".");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect-checkpoint", "print checkpoint metadata");
  inspect->add_option("path", inspect_path, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return cmd_train(config_path, !train_seed->empty(), seed, out, resume);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(checkpoint, config_path, track_path, !eval_seed->empty(), seed,
                          seeds_text, trials, out);
    }
    if (gen->parsed()) {
      return cmd_gen_track(config_path, !gen_seed->empty(), seed, out);
    }
    if (inspect->parsed()) {
      return cmd_inspect(inspect_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const VersionError& e) {
    std::cerr << "version error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrainingError;
  }
  return kExitOk;
}
