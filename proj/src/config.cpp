#include "racerl/config.hpp"

#include <cstdlib>
#include <sstream>
#include <vector>

#include "racerl/csv.hpp"
#include "racerl/errors.hpp"

namespace racerl {

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  auto track_eq = [](const TrackConfig& a, const TrackConfig& b) {
    return a.seed == b.seed && a.tile_count == b.tile_count && a.road_width == b.road_width &&
           a.control_points == b.control_points && a.max_frames == b.max_frames;
  };
  auto features_eq = [](const FeatureSpec& a, const FeatureSpec& b) {
    return a.curvature_samples == b.curvature_samples && a.lookahead == b.lookahead;
  };
  auto pixels_eq = [](const PixelSpec& a, const PixelSpec& b) {
    return a.height == b.height && a.width == b.width && a.channels == b.channels &&
           a.view_span == b.view_span;
  };
  auto evo_eq = [](const EvoConfig& a, const EvoConfig& b) {
    return a.population_size == b.population_size && a.parent_count == b.parent_count &&
           a.mutation_rate == b.mutation_rate && a.mutation_sigma == b.mutation_sigma &&
           a.gene_bound == b.gene_bound && a.crossover_probability == b.crossover_probability &&
           a.generations == b.generations && a.seed == b.seed &&
           a.episodes_per_eval == b.episodes_per_eval;
  };
  auto ddqn_eq = [](const DdqnConfig& a, const DdqnConfig& b) {
    return a.gamma == b.gamma && a.learning_rate == b.learning_rate &&
           a.batch_size == b.batch_size && a.replay_capacity == b.replay_capacity &&
           a.priority_exponent == b.priority_exponent && a.priority_floor == b.priority_floor &&
           a.epsilon_start == b.epsilon_start && a.epsilon_end == b.epsilon_end &&
           a.epsilon_decay_episodes == b.epsilon_decay_episodes &&
           a.target_sync_period == b.target_sync_period && a.episodes == b.episodes &&
           a.seed == b.seed && a.use_importance_sampling == b.use_importance_sampling &&
           a.is_beta == b.is_beta && a.observation == b.observation;
  };
  return method == o.method && track_eq(track, o.track) && features_eq(features, o.features) &&
         pixels_eq(pixels, o.pixels) && out_dir == o.out_dir &&
         checkpoint_period == o.checkpoint_period &&
         (method == TrainMethod::kEvolution ? evo_eq(evolution, o.evolution)
                                            : ddqn_eq(ddqn, o.ddqn));
}

void ExperimentConfig::validate() const {
  try {
    track.validate();
    if (method == TrainMethod::kEvolution) {
      evolution.validate();
    } else {
      ddqn.validate();
    }
    if (features.curvature_samples < 0) {
      throw std::invalid_argument("env: curvature_samples must be >= 0");
    }
    if (features.lookahead <= 0.0) throw std::invalid_argument("env: lookahead must be > 0");
    if (pixels.height < 16 || pixels.width < 16) {
      throw std::invalid_argument("env: pixel dims must be >= 16");
    }
    if (pixels.channels != 1 && pixels.channels != 3) {
      throw std::invalid_argument("env: pixel_channels must be 1 or 3");
    }
    if (pixels.view_span <= 0.0) throw std::invalid_argument("env: view_span must be > 0");
    if (checkpoint_period < 1) {
      throw std::invalid_argument("experiment: checkpoint_period must be >= 1");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

struct Line {
  int number = 0;
  std::string key;
  std::string value;
};

std::string trim(const std::string& s) {
  const size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<Line> split_lines(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const size_t eq = raw.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'section.key = value'");
    }
    Line line;
    line.number = number;
    line.key = trim(raw.substr(0, eq));
    line.value = trim(raw.substr(eq + 1));
    if (line.key.empty() || line.value.empty()) {
      throw ConfigError("line " + std::to_string(number) + ": empty key or value");
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void bad_value(const Line& line, const std::string& expected) {
  throw ConfigError("line " + std::to_string(line.number) + ": " + line.key + ": expected " +
                    expected + ", got '" + line.value + "'");
}

double parse_number(const Line& line) {
  char* end = nullptr;
  const double v = std::strtod(line.value.c_str(), &end);
  if (end == line.value.c_str() || *end != '\0') bad_value(line, "a number");
  return v;
}

int parse_int(const Line& line) {
  char* end = nullptr;
  const long v = std::strtol(line.value.c_str(), &end, 10);
  if (end == line.value.c_str() || *end != '\0') bad_value(line, "an integer");
  return static_cast<int>(v);
}

uint64_t parse_u64(const Line& line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(line.value.c_str(), &end, 10);
  if (end == line.value.c_str() || *end != '\0') bad_value(line, "an unsigned integer");
  return static_cast<uint64_t>(v);
}

bool parse_bool(const Line& line) {
  if (line.value == "true") return true;
  if (line.value == "false") return false;
  bad_value(line, "true or false");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool method_seen = false;
  bool evolution_keys = false;
  bool ddqn_keys = false;

  for (const Line& line : split_lines(text)) {
    const std::string& k = line.key;
    if (k == "experiment.method") {
      method_seen = true;
      if (line.value == "evolution") cfg.method = TrainMethod::kEvolution;
      else if (line.value == "ddqn") cfg.method = TrainMethod::kDdqn;
      else bad_value(line, "'evolution' or 'ddqn'");
    } else if (k == "experiment.out") {
      cfg.out_dir = line.value;
    } else if (k == "experiment.checkpoint_period") {
      cfg.checkpoint_period = parse_int(line);
    } else if (k == "track.seed") {
      cfg.track.seed = parse_u64(line);
    } else if (k == "track.tiles") {
      cfg.track.tile_count = parse_int(line);
    } else if (k == "track.width") {
      cfg.track.road_width = parse_number(line);
    } else if (k == "track.control_points") {
      cfg.track.control_points = parse_int(line);
    } else if (k == "track.max_frames") {
      cfg.track.max_frames = parse_int(line);
    } else if (k == "env.curvature_samples") {
      cfg.features.curvature_samples = parse_int(line);
    } else if (k == "env.lookahead") {
      cfg.features.lookahead = parse_number(line);
    } else if (k == "env.pixel_height") {
      cfg.pixels.height = parse_int(line);
    } else if (k == "env.pixel_width") {
      cfg.pixels.width = parse_int(line);
    } else if (k == "env.pixel_channels") {
      cfg.pixels.channels = parse_int(line);
    } else if (k == "env.view_span") {
      cfg.pixels.view_span = parse_number(line);
    } else if (k == "evolution.population") {
      evolution_keys = true;
      cfg.evolution.population_size = parse_int(line);
    } else if (k == "evolution.parents") {
      evolution_keys = true;
      cfg.evolution.parent_count = parse_int(line);
    } else if (k == "evolution.mutation_rate") {
      evolution_keys = true;
      cfg.evolution.mutation_rate = parse_number(line);
    } else if (k == "evolution.mutation_sigma") {
      evolution_keys = true;
      cfg.evolution.mutation_sigma = parse_number(line);
    } else if (k == "evolution.gene_bound") {
      evolution_keys = true;
      cfg.evolution.gene_bound = parse_number(line);
    } else if (k == "evolution.crossover_probability") {
      evolution_keys = true;
      cfg.evolution.crossover_probability = parse_number(line);
    } else if (k == "evolution.generations") {
      evolution_keys = true;
      cfg.evolution.generations = parse_int(line);
    } else if (k == "evolution.seed") {
      evolution_keys = true;
      cfg.evolution.seed = parse_u64(line);
    } else if (k == "evolution.episodes_per_eval") {
      evolution_keys = true;
      cfg.evolution.episodes_per_eval = parse_int(line);
    } else if (k == "ddqn.gamma") {
      ddqn_keys = true;
      cfg.ddqn.gamma = parse_number(line);
    } else if (k == "ddqn.learning_rate") {
      ddqn_keys = true;
      cfg.ddqn.learning_rate = parse_number(line);
    } else if (k == "ddqn.batch_size") {
      ddqn_keys = true;
      cfg.ddqn.batch_size = parse_int(line);
    } else if (k == "ddqn.replay_capacity") {
      ddqn_keys = true;
      cfg.ddqn.replay_capacity = static_cast<size_t>(parse_u64(line));
    } else if (k == "ddqn.priority_exponent") {
      ddqn_keys = true;
      cfg.ddqn.priority_exponent = parse_number(line);
    } else if (k == "ddqn.priority_floor") {
      ddqn_keys = true;
      cfg.ddqn.priority_floor = parse_number(line);
    } else if (k == "ddqn.epsilon_start") {
      ddqn_keys = true;
      cfg.ddqn.epsilon_start = parse_number(line);
    } else if (k == "ddqn.epsilon_end") {
      ddqn_keys = true;
      cfg.ddqn.epsilon_end = parse_number(line);
    } else if (k == "ddqn.epsilon_decay_episodes") {
      ddqn_keys = true;
      cfg.ddqn.epsilon_decay_episodes = parse_int(line);
    } else if (k == "ddqn.target_sync_period") {
      ddqn_keys = true;
      cfg.ddqn.target_sync_period = parse_int(line);
    } else if (k == "ddqn.episodes") {
      ddqn_keys = true;
      cfg.ddqn.episodes = parse_int(line);
    } else if (k == "ddqn.seed") {
      ddqn_keys = true;
      cfg.ddqn.seed = parse_u64(line);
    } else if (k == "ddqn.observation") {
      ddqn_keys = true;
      if (line.value == "feature") cfg.ddqn.observation = ObservationMode::kFeatures;
      else if (line.value == "pixel") cfg.ddqn.observation = ObservationMode::kPixels;
      else bad_value(line, "'feature' or 'pixel'");
    } else if (k == "ddqn.use_importance_sampling") {
      ddqn_keys = true;
      cfg.ddqn.use_importance_sampling = parse_bool(line);
    } else if (k == "ddqn.is_beta") {
      ddqn_keys = true;
      cfg.ddqn.is_beta = parse_number(line);
    } else {
      throw ConfigError("line " + std::to_string(line.number) + ": unknown key '" + k + "'");
    }
  }

  if (!method_seen) throw ConfigError("experiment.method is required");
  if (cfg.method == TrainMethod::kEvolution && ddqn_keys) {
    throw ConfigError("ddqn.* keys present but experiment.method is evolution");
  }
  if (cfg.method == TrainMethod::kDdqn && evolution_keys) {
    throw ConfigError("evolution.* keys present but experiment.method is ddqn");
  }
  cfg.validate();
  return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "experiment.method = "
      << (cfg.method == TrainMethod::kEvolution ? "evolution" : "ddqn") << "\n";
  out << "experiment.out = " << cfg.out_dir << "\n";
  out << "experiment.checkpoint_period = " << cfg.checkpoint_period << "\n";
  out << "track.seed = " << cfg.track.seed << "\n";
  out << "track.tiles = " << cfg.track.tile_count << "\n";
  out << "track.width = " << format_double(cfg.track.road_width) << "\n";
  out << "track.control_points = " << cfg.track.control_points << "\n";
  out << "track.max_frames = " << cfg.track.max_frames << "\n";
  out << "env.curvature_samples = " << cfg.features.curvature_samples << "\n";
  out << "env.lookahead = " << format_double(cfg.features.lookahead) << "\n";
  out << "env.pixel_height = " << cfg.pixels.height << "\n";
  out << "env.pixel_width = " << cfg.pixels.width << "\n";
  out << "env.pixel_channels = " << cfg.pixels.channels << "\n";
  out << "env.view_span = " << format_double(cfg.pixels.view_span) << "\n";
  if (cfg.method == TrainMethod::kEvolution) {
    out << "evolution.population = " << cfg.evolution.population_size << "\n";
    out << "evolution.parents = " << cfg.evolution.parent_count << "\n";
    out << "evolution.mutation_rate = " << format_double(cfg.evolution.mutation_rate) << "\n";
    out << "evolution.mutation_sigma = " << format_double(cfg.evolution.mutation_sigma) << "\n";
    out << "evolution.gene_bound = " << format_double(cfg.evolution.gene_bound) << "\n";
    out << "evolution.crossover_probability = "
        << format_double(cfg.evolution.crossover_probability) << "\n";
    out << "evolution.generations = " << cfg.evolution.generations << "\n";
    out << "evolution.seed = " << cfg.evolution.seed << "\n";
    out << "evolution.episodes_per_eval = " << cfg.evolution.episodes_per_eval << "\n";
  } else {
    out << "ddqn.gamma = " << format_double(cfg.ddqn.gamma) << "\n";
    out << "ddqn.learning_rate = " << format_double(cfg.ddqn.learning_rate) << "\n";
    out << "ddqn.batch_size = " << cfg.ddqn.batch_size << "\n";
    out << "ddqn.replay_capacity = " << cfg.ddqn.replay_capacity << "\n";
    out << "ddqn.priority_exponent = " << format_double(cfg.ddqn.priority_exponent) << "\n";
    out << "ddqn.priority_floor = " << format_double(cfg.ddqn.priority_floor) << "\n";
    out << "ddqn.epsilon_start = " << format_double(cfg.ddqn.epsilon_start) << "\n";
    out << "ddqn.epsilon_end = " << format_double(cfg.ddqn.epsilon_end) << "\n";
    out << "ddqn.epsilon_decay_episodes = " << cfg.ddqn.epsilon_decay_episodes << "\n";
    out << "ddqn.target_sync_period = " << cfg.ddqn.target_sync_period << "\n";
    out << "ddqn.episodes = " << cfg.ddqn.episodes << "\n";
    out << "ddqn.seed = " << cfg.ddqn.seed << "\n";
    out << "ddqn.observation = "
        << (cfg.ddqn.observation == ObservationMode::kFeatures ? "feature" : "pixel") << "\n";
    out << "ddqn.use_importance_sampling = "
        << (cfg.ddqn.use_importance_sampling ? "true" : "false") << "\n";
    out << "ddqn.is_beta = " << format_double(cfg.ddqn.is_beta) << "\n";
  }
  return out.str();
}

}  // namespace racerl
