#pragma once

#include <string>

#include "racerl/ddqn.hpp"
#include "racerl/environment.hpp"
#include "racerl/evolution.hpp"
#include "racerl/track.hpp"

namespace racerl {

enum class TrainMethod { kEvolution, kDdqn };

struct ExperimentConfig {
  TrainMethod method = TrainMethod::kEvolution;
  TrackConfig track;
  FeatureSpec features;
  PixelSpec pixels;
  EvoConfig evolution;
  DdqnConfig ddqn;
  std::string out_dir = "runs/experiment";
  int checkpoint_period = 10;  // generations or episodes between snapshots

  bool operator==(const ExperimentConfig&) const;
  void validate() const;  // throws ConfigError
};

// Line-oriented "section.key = value" text, UTF-8, '#' comments. Unknown keys
// and keys for the inactive method are rejected with the offending key path.
ExperimentConfig parse_config(const std::string& text);

// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& config);

}  // namespace racerl
