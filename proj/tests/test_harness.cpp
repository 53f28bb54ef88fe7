#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "racerl/errors.hpp"
#include "racerl/experiment.hpp"

using namespace racerl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("racerl_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

ExperimentConfig small_evolution_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.method = TrainMethod::kEvolution;
  cfg.track.seed = 4;
  cfg.track.tile_count = 50;
  cfg.track.max_frames = 150;
  cfg.evolution.population_size = 8;
  cfg.evolution.parent_count = 2;
  cfg.evolution.generations = 3;
  cfg.evolution.seed = 11;
  cfg.out_dir = out;
  cfg.checkpoint_period = 2;
  return cfg;
}

ExperimentConfig small_ddqn_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.method = TrainMethod::kDdqn;
  cfg.track.seed = 4;
  cfg.track.tile_count = 50;
  cfg.track.max_frames = 80;
  cfg.ddqn.observation = ObservationMode::kFeatures;
  cfg.ddqn.episodes = 3;
  cfg.ddqn.batch_size = 16;
  cfg.ddqn.replay_capacity = 256;
  cfg.ddqn.target_sync_period = 40;
  cfg.ddqn.epsilon_decay_episodes = 2;
  cfg.ddqn.seed = 13;
  cfg.out_dir = out;
  cfg.checkpoint_period = 2;
  return cfg;
}

}  // namespace

TEST_CASE("a minimal config document fills every default") {
  const ExperimentConfig cfg = parse_config("experiment.method = evolution\n");
  CHECK(cfg.method == TrainMethod::kEvolution);
  CHECK(cfg.evolution.population_size == 64);
  CHECK(cfg.evolution.parent_count == 8);
  CHECK(cfg.evolution.mutation_rate == 0.1);
  CHECK(cfg.evolution.crossover_probability == 0.7);
  CHECK(cfg.track.tile_count == 100);
  CHECK(cfg.track.road_width == 5.0);
  CHECK(cfg.features.curvature_samples == 5);
  CHECK(cfg.checkpoint_period == 10);
}

TEST_CASE("comments and blank lines are ignored") {
  const std::string text =
      "# experiment file\n"
      "\n"
      "experiment.method = ddqn   # trainer choice\n"
      "ddqn.episodes = 12\n";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.method == TrainMethod::kDdqn);
  CHECK(cfg.ddqn.episodes == 12);
}

TEST_CASE("render and parse round-trip for both methods") {
  ExperimentConfig evo = small_evolution_config("runs/a");
  evo.evolution.mutation_rate = 0.075;
  evo.features.curvature_samples = 7;
  CHECK(parse_config(render_config(evo)) == evo);

  ExperimentConfig ddqn = small_ddqn_config("runs/b");
  ddqn.ddqn.gamma = 0.95;
  ddqn.ddqn.use_importance_sampling = true;
  CHECK(parse_config(render_config(ddqn)) == ddqn);
}

TEST_CASE("unknown keys are rejected by name") {
  const std::string text =
      "experiment.method = evolution\n"
      "evolution.mutation_rte = 0.2\n";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("evolution.mutation_rte") != std::string::npos);
  }
}

TEST_CASE("type mismatches name the key and value") {
  try {
    parse_config("experiment.method = ddqn\nddqn.gamma = fast\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("ddqn.gamma") != std::string::npos);
    CHECK(what.find("fast") != std::string::npos);
  }
}

TEST_CASE("invariant violations become config errors") {
  CHECK_THROWS_AS(parse_config("experiment.method = evolution\ntrack.tiles = 4\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment.method = ddqn\nddqn.replay_capacity = 1000\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("track.seed = 1\n"), ConfigError);  // method missing
}

TEST_CASE("keys for the inactive method are rejected") {
  CHECK_THROWS_AS(parse_config("experiment.method = evolution\nddqn.gamma = 0.9\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment.method = ddqn\nevolution.population = 32\n"),
                  ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Rng rng(21);
  Checkpoint cp;
  cp.role = CheckpointRole::kPolicyGenome;
  cp.genome = random_genome(policy_shape(11), rng, 1.0);

  const fs::path dir = temp_dir("checkpoint");
  const std::string path = (dir / "net.bin").string();
  save_checkpoint(cp, path);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.role == cp.role);
  CHECK(loaded.genome.shape == cp.genome.shape);
  CHECK(loaded.genome.genes == cp.genome.genes);
}

TEST_CASE("truncated and corrupted checkpoints are rejected with offsets") {
  Rng rng(22);
  Checkpoint cp;
  cp.genome = random_genome(policy_shape(5), rng, 1.0);
  std::string data = serialize_checkpoint(cp);

  std::string truncated = data.substr(0, data.size() - 1);
  CHECK_THROWS_AS(parse_checkpoint(truncated), FormatError);

  std::string bad_magic = data;
  bad_magic[0] = 'x';
  CHECK_THROWS_AS(parse_checkpoint(bad_magic), FormatError);

  std::string bad_version = data;
  bad_version[4] = 9;
  CHECK_THROWS_AS(parse_checkpoint(bad_version), VersionError);

  try {
    parse_checkpoint(truncated);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() > 0);
  }
}

TEST_CASE("the solved flag flips exactly at 100 trials and mean 900") {
  const EvaluationReport happy = make_report(std::vector<double>(100, 926.8));
  CHECK(happy.solved);
  CHECK(happy.mean == doctest::Approx(926.8));
  CHECK(happy.stddev == doctest::Approx(0.0));

  CHECK(!make_report(std::vector<double>(99, 950.0)).solved);
  CHECK(!make_report(std::vector<double>(100, 899.99)).solved);
  CHECK(make_report(std::vector<double>(100, 900.0)).solved);

  std::vector<double> mixed(100, 900.0);
  mixed[0] = 899.999999;  // drags the mean a hair under 900
  CHECK(!make_report(mixed).solved);
}

TEST_CASE("evolution runs write one CSV row per generation") {
  const fs::path dir = temp_dir("evo_run");
  const ExperimentConfig cfg = small_evolution_config(dir.string());
  CHECK(run_experiment(cfg) == kExitOk);

  const auto rows = lines_of(slurp(dir / "history.csv"));
  REQUIRE(rows.size() == 4);  // header + 3 generations
  CHECK(rows[0] == "generation,best_fitness,mean_fitness,frames_of_best,tiles_of_best");
  CHECK(rows[1].rfind("0,", 0) == 0);
  CHECK(rows[3].rfind("2,", 0) == 0);

  CHECK(fs::exists(dir / "best.bin"));
  CHECK(fs::exists(dir / "checkpoint_2.bin"));
  CHECK(fs::exists(dir / "state_2.bin"));
  CHECK(fs::exists(dir / "config.txt"));
  CHECK(parse_config(slurp(dir / "config.txt")) == cfg);
}

TEST_CASE("identical configs produce byte-identical histories") {
  const fs::path dir_a = temp_dir("evo_a");
  const fs::path dir_b = temp_dir("evo_b");
  ExperimentConfig a = small_evolution_config(dir_a.string());
  ExperimentConfig b = small_evolution_config(dir_b.string());
  REQUIRE(run_experiment(a) == kExitOk);
  REQUIRE(run_experiment(b) == kExitOk);
  CHECK(slurp(dir_a / "history.csv") == slurp(dir_b / "history.csv"));
  CHECK(slurp(dir_a / "best.bin") == slurp(dir_b / "best.bin"));
}

TEST_CASE("unwritable output directories fail before training") {
  const fs::path dir = temp_dir("blocked");
  std::ofstream(dir / "occupied").put('x');
  ExperimentConfig cfg = small_evolution_config((dir / "occupied" / "nested").string());
  CHECK(run_experiment(cfg) == kExitIoError);
}

TEST_CASE("resumed runs reproduce the uninterrupted history suffix") {
  const fs::path full_dir = temp_dir("resume_full");
  ExperimentConfig full = small_evolution_config(full_dir.string());
  full.evolution.generations = 6;
  full.checkpoint_period = 2;
  REQUIRE(run_experiment(full) == kExitOk);
  const auto full_rows = lines_of(slurp(full_dir / "history.csv"));
  REQUIRE(full_rows.size() == 7);

  const fs::path resumed_dir = temp_dir("resume_suffix");
  ExperimentConfig resumed = full;
  resumed.out_dir = resumed_dir.string();
  REQUIRE(run_experiment(resumed, (full_dir / "state_2.bin").string()) == kExitOk);
  const auto resumed_rows = lines_of(slurp(resumed_dir / "history.csv"));
  REQUIRE(resumed_rows.size() == 5);  // header + generations 2..5
  for (int g = 2; g < 6; ++g) {
    CHECK(resumed_rows[g - 1] == full_rows[g + 1]);
  }
}

TEST_CASE("ddqn feature-mode runs resume and reproduce as well") {
  const fs::path full_dir = temp_dir("ddqn_full");
  ExperimentConfig full = small_ddqn_config(full_dir.string());
  REQUIRE(run_experiment(full) == kExitOk);
  const auto full_rows = lines_of(slurp(full_dir / "history.csv"));
  REQUIRE(full_rows.size() == 4);  // header + 3 episodes
  CHECK(full_rows[0] == "episode,reward,frames,tiles,epsilon,mean_td_error");

  const fs::path resumed_dir = temp_dir("ddqn_resume");
  ExperimentConfig resumed = full;
  resumed.out_dir = resumed_dir.string();
  REQUIRE(run_experiment(resumed, (full_dir / "state_2.bin").string()) == kExitOk);
  const auto resumed_rows = lines_of(slurp(resumed_dir / "history.csv"));
  REQUIRE(resumed_rows.size() == 2);
  CHECK(resumed_rows[1] == full_rows[3]);
}

TEST_CASE("evolution checkpoints evaluate greedily and deterministically") {
  const fs::path dir = temp_dir("eval");
  const ExperimentConfig cfg = small_evolution_config(dir.string());
  REQUIRE(run_experiment(cfg) == kExitOk);

  EvalOptions options;
  options.track = cfg.track;
  options.features = cfg.features;
  const std::vector<uint64_t> seeds{101, 102, 103};

  std::vector<TrialResult> details;
  const EvaluationReport a =
      evaluate_policy((dir / "best.bin").string(), seeds, 7, options, &details);
  CHECK(a.trials == 7);
  REQUIRE(details.size() == 7);
  // Trials cycle through the seed list in order.
  CHECK(details[0].seed == 101);
  CHECK(details[2].seed == 103);
  CHECK(details[3].seed == 101);
  // Same seed, same checkpoint: identical rewards.
  CHECK(details[0].episode.reward == details[3].episode.reward);

  const EvaluationReport b = evaluate_policy((dir / "best.bin").string(), seeds, 7, options);
  CHECK(a.rewards == b.rewards);
  CHECK(a.mean == b.mean);
}

TEST_CASE("ddqn checkpoints evaluate through the greedy action bank") {
  const fs::path dir = temp_dir("eval_ddqn");
  const ExperimentConfig cfg = small_ddqn_config(dir.string());
  REQUIRE(run_experiment(cfg) == kExitOk);

  EvalOptions options;
  options.track = cfg.track;
  options.features = cfg.features;
  const EvaluationReport report =
      evaluate_policy((dir / "best.bin").string(), {55, 56}, 4, options);
  CHECK(report.trials == 4);
  CHECK(std::isfinite(report.mean));
  CHECK(!report.solved);  // 4 trials can never satisfy the gate
}

TEST_CASE("serialized tracks feed evaluation directly") {
  const fs::path dir = temp_dir("eval_trackfile");
  const ExperimentConfig cfg = small_evolution_config(dir.string());
  REQUIRE(run_experiment(cfg) == kExitOk);

  // Evaluating on the parsed copy of a generated track reproduces the
  // generated-track rewards exactly.
  TrackConfig tc = cfg.track;
  tc.seed = 321;
  const Track generated = generate_track(tc);
  const Track reloaded = parse_track(serialize_track(generated));

  EvalOptions by_seed;
  by_seed.track = cfg.track;
  const EvaluationReport seeded =
      evaluate_policy((dir / "best.bin").string(), {321}, 3, by_seed);

  EvalOptions by_file;
  by_file.track = cfg.track;
  by_file.track_override.push_back(reloaded);
  std::vector<TrialResult> details;
  const EvaluationReport from_file =
      evaluate_policy((dir / "best.bin").string(), {}, 3, by_file, &details);

  CHECK(from_file.rewards == seeded.rewards);
  CHECK(details[0].seed == 321);
}

TEST_CASE("evaluation rejects invalid arguments and corrupt checkpoints") {
  const fs::path dir = temp_dir("eval_bad");
  std::ofstream(dir / "garbage.bin") << "not a checkpoint";
  EvalOptions options;
  CHECK_THROWS_AS(evaluate_policy((dir / "garbage.bin").string(), {1}, 1, options),
                  FormatError);
  CHECK_THROWS_AS(evaluate_policy((dir / "missing.bin").string(), {1}, 1, options), IoError);

  Rng rng(33);
  Checkpoint cp;
  cp.genome = random_genome(policy_shape(5), rng, 1.0);
  const std::string good = (dir / "good.bin").string();
  save_checkpoint(cp, good);
  CHECK_THROWS_AS(evaluate_policy(good, {}, 5, options), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_policy(good, {1}, 0, options), std::invalid_argument);
}
