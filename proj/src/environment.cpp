#include "racerl/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "racerl/csv.hpp"

namespace racerl {

void ContinuousAction::validate() const {
  if (!(steering >= -1.0 && steering <= 1.0)) {
    throw std::out_of_range("action: steering outside [-1, 1]");
  }
  if (!(gas >= 0.0 && gas <= 1.0)) throw std::out_of_range("action: gas outside [0, 1]");
  if (!(brake >= 0.0 && brake <= 1.0)) throw std::out_of_range("action: brake outside [0, 1]");
}

std::vector<double> FeatureObservation::flat() const {
  std::vector<double> v;
  v.reserve(6 + curvatures.size());
  v.push_back(speed);
  v.push_back(car_angle);
  v.push_back(wheel_angle);
  v.push_back(speed_direction);
  v.push_back(angular_velocity);
  v.push_back(center_distance);
  v.insert(v.end(), curvatures.begin(), curvatures.end());
  return v;
}

FeatureObservation extract_features(const CarState& state, const Track& track,
                                    const FeatureSpec& spec) {
  const Track::Projection proj = track.project(state.position);
  // Termination triggers at one road width; the extra 5 m keeps the terminal
  // frame's own observation computable at any legal speed.
  if (std::abs(proj.lateral) > track.width() + 5.0) {
    throw std::domain_error("features: car beyond off-road tolerance");
  }
  FeatureObservation f;
  f.speed = state.speed;
  f.car_angle = wrap_angle(state.heading - proj.tangent_angle);
  f.wheel_angle = state.wheel_angle;
  f.speed_direction = wrap_angle(state.velocity_direction - state.heading);
  f.angular_velocity = state.angular_velocity;
  f.center_distance = proj.lateral;
  f.curvatures.resize(spec.curvature_samples);
  for (int k = 0; k < spec.curvature_samples; ++k) {
    f.curvatures[k] = track.curvature_at(proj.arc + (k + 1) * spec.lookahead);
  }
  return f;
}

Environment::Environment(Track track, ObservationMode mode, FeatureSpec features,
                         PixelSpec pixels, CarParams params, int max_frames)
    : track_(std::move(track)),
      mode_(mode),
      feature_spec_(features),
      pixel_spec_(pixels),
      params_(params),
      max_frames_(max_frames),
      visited_(track_.tile_count(), 0) {
  if (max_frames_ <= 0) throw std::invalid_argument("environment: max_frames must be > 0");
  reset();
}

Observation Environment::reset() {
  const Tile& first = track_.tiles().front();
  state_ = CarState{};
  state_.position = first.start;
  state_.heading = std::atan2(first.end.y - first.start.y, first.end.x - first.start.x);
  state_.velocity_direction = state_.heading;
  std::fill(visited_.begin(), visited_.end(), 0);
  tiles_visited_ = 0;
  frame_ = 0;
  done_ = false;
  cumulative_reward_ = 0.0;
  last_arc_ = track_.project(state_.position).arc;
  return observe();
}

Observation Environment::observe() const {
  Observation obs;
  obs.mode = mode_;
  if (mode_ == ObservationMode::kFeatures) {
    obs.data = features().flat();
  } else {
    PixelObservation px = pixels();
    obs.height = px.height;
    obs.width = px.width;
    obs.channels = px.channels;
    obs.data = std::move(px.grid);
  }
  return obs;
}

// Mark every tile whose arc span intersects the closed interval swept by the
// projection this frame. Returns the number of newly visited tiles.
int Environment::mark_swept(double from_arc, double to_arc) {
  const double length = track_.total_length();
  double ds = std::fmod(to_arc - from_arc, length);
  if (ds >= 0.5 * length) ds -= length;
  if (ds < -0.5 * length) ds += length;

  const double lo = std::min(from_arc, from_arc + ds);
  const double hi = std::max(from_arc, from_arc + ds);
  const int first = track_.tile_at(lo);
  const int last = track_.tile_at(hi);
  const int n = track_.tile_count();
  const int span = (last - first + n) % n;

  int newly = 0;
  for (int k = 0; k <= span; ++k) {
    const int tile = (first + k) % n;
    if (!visited_[tile]) {
      visited_[tile] = 1;
      ++newly;
    }
  }
  return newly;
}

StepOutcome Environment::step(const ContinuousAction& action) {
  action.validate();
  if (done_) throw std::logic_error("environment: step() after episode end");

  const CarParams& p = params_;

  // Wheel angle moves toward the steering target at a bounded rate.
  const double target = action.steering * p.wheel_angle_max;
  const double max_delta = p.wheel_rate * p.dt;
  state_.wheel_angle += std::clamp(target - state_.wheel_angle, -max_delta, max_delta);

  // Longitudinal: bounded acceleration and braking, speed-proportional drag.
  const double accel = action.gas * p.accel_max - action.brake * p.brake_max - p.drag * state_.speed;
  state_.speed = std::max(0.0, state_.speed + accel * p.dt);

  // Grip cap: limit the effective wheel angle so lateral acceleration stays
  // within lat_accel_max (understeer at speed).
  double effective = state_.wheel_angle;
  if (state_.speed > 1e-9) {
    const double lat = state_.speed * state_.speed * std::abs(std::tan(effective)) / p.wheelbase;
    if (lat > p.lat_accel_max) {
      const double tan_limit = p.lat_accel_max * p.wheelbase / (state_.speed * state_.speed);
      effective = std::copysign(std::atan(tan_limit), effective);
    }
  }

  // Kinematic bicycle with the reference point cg_to_rear_axle ahead of the
  // rear axle; slip angle beta separates velocity direction from heading.
  const double beta = std::atan(p.cg_to_rear_axle * std::tan(effective) / p.wheelbase);
  const double omega = state_.speed * std::cos(beta) * std::tan(effective) / p.wheelbase;
  state_.heading = wrap_angle(state_.heading + omega * p.dt);
  state_.angular_velocity = omega;
  state_.velocity_direction = wrap_angle(state_.heading + beta);
  state_.position.x += state_.speed * std::cos(state_.velocity_direction) * p.dt;
  state_.position.y += state_.speed * std::sin(state_.velocity_direction) * p.dt;

  ++frame_;

  const Track::Projection proj = track_.project(state_.position);
  const int newly = mark_swept(last_arc_, proj.arc);
  last_arc_ = proj.arc;
  tiles_visited_ += newly;

  const double reward = -0.1 + (1000.0 / track_.tile_count()) * newly;
  cumulative_reward_ += reward;

  done_ = tiles_visited_ == track_.tile_count() || frame_ == max_frames_ ||
          std::abs(proj.lateral) > track_.width();

  StepOutcome out;
  out.observation = observe();
  out.reward = reward;
  out.done = done_;
  out.tiles_visited = tiles_visited_;
  out.frame = frame_;
  return out;
}

std::string Environment::serialize_state() const {
  std::string s;
  s += format_double(state_.position.x) + " " + format_double(state_.position.y) + " ";
  s += format_double(state_.heading) + " " + format_double(state_.speed) + " ";
  s += format_double(state_.wheel_angle) + " " + format_double(state_.angular_velocity) + " ";
  s += format_double(state_.velocity_direction) + " ";
  s += std::to_string(frame_) + " " + std::to_string(tiles_visited_) + " ";
  s += format_double(cumulative_reward_);
  return s;
}

}  // namespace racerl
