#pragma once

#include <string>
#include <vector>

#include "racerl/track.hpp"

namespace racerl {

struct ContinuousAction {
  double steering = 0.0;  // [-1, 1], positive steers left
  double gas = 0.0;       // [0, 1]
  double brake = 0.0;     // [0, 1]

  void validate() const;  // throws std::out_of_range
};

struct CarParams {
  double wheelbase = 2.5;          // m
  double cg_to_rear_axle = 1.25;   // m; 0 gives a rear-axle reference (no slip)
  double wheel_angle_max = 0.6;    // rad
  double wheel_rate = 3.0;         // rad/s toward the steering target
  double accel_max = 8.0;          // m/s^2 at gas = 1
  double brake_max = 15.0;         // m/s^2 at brake = 1
  double drag = 0.08;              // 1/s, speed-proportional decay
  double lat_accel_max = 12.0;     // m/s^2 grip cap
  double dt = 0.02;                // s per frame
};

struct CarState {
  Vec2 position;
  double heading = 0.0;             // rad
  double speed = 0.0;               // m/s, >= 0
  double wheel_angle = 0.0;         // rad, |.| <= wheel_angle_max
  double angular_velocity = 0.0;    // rad/s
  double velocity_direction = 0.0;  // rad; heading plus slip angle
};

struct FeatureSpec {
  int curvature_samples = 5;  // n lookahead samples
  double lookahead = 5.0;     // m between samples
};

struct PixelSpec {
  int height = 32;
  int width = 32;
  int channels = 1;        // 1 grayscale or 3 rgb
  double view_span = 40.0; // m covered across the image width
};

// Scalar block plus n curvature samples; flat() is the policy input layout:
// [speed, car_angle, wheel_angle, speed_direction, angular_velocity,
//  center_distance, curvature_1..curvature_n].
struct FeatureObservation {
  double speed = 0.0;
  double car_angle = 0.0;         // heading minus centerline tangent
  double wheel_angle = 0.0;
  double speed_direction = 0.0;   // velocity direction minus heading
  double angular_velocity = 0.0;
  double center_distance = 0.0;   // signed, positive left of centerline
  std::vector<double> curvatures;

  std::vector<double> flat() const;
};

// Row-major (y, x, channel) grid of intensities in [0, 1].
struct PixelObservation {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> grid;

  double at(int y, int x, int c) const {
    return grid[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

enum class ObservationMode { kFeatures, kPixels };

// Mode-erased observation carried in StepOutcome; data is the feature vector
// or the flattened pixel grid.
struct Observation {
  ObservationMode mode = ObservationMode::kFeatures;
  std::vector<double> data;
  int height = 0;
  int width = 0;
  int channels = 0;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  int tiles_visited = 0;
  int frame = 0;
};

FeatureObservation extract_features(const CarState& state, const Track& track,
                                    const FeatureSpec& spec);

// Top-down, car-centered, heading-up rasterization. Road, off-road and the
// car footprint use distinct intensity bands.
PixelObservation render_pixels(const CarState& state, const Track& track,
                               const PixelSpec& spec);

// Deterministic tile-track driving episode. Reward is -0.1 per frame plus
// 1000/N per newly visited tile; an episode ends when every tile has been
// visited, the frame budget runs out, or the car leaves the road entirely.
class Environment {
 public:
  explicit Environment(Track track, ObservationMode mode = ObservationMode::kFeatures,
                       FeatureSpec features = {}, PixelSpec pixels = {},
                       CarParams params = {}, int max_frames = 2000);

  Observation reset();
  StepOutcome step(const ContinuousAction& action);

  FeatureObservation features() const { return extract_features(state_, track_, feature_spec_); }
  PixelObservation pixels() const { return render_pixels(state_, track_, pixel_spec_); }

  const Track& track() const { return track_; }
  const CarState& car_state() const { return state_; }
  const CarParams& params() const { return params_; }
  int frame() const { return frame_; }
  int tiles_visited() const { return tiles_visited_; }
  bool done() const { return done_; }
  double cumulative_reward() const { return cumulative_reward_; }
  int max_frames() const { return max_frames_; }

  // Full-precision text dump of the dynamic state, for determinism checks.
  std::string serialize_state() const;

 private:
  Observation observe() const;
  int mark_swept(double from_arc, double to_arc);

  Track track_;
  ObservationMode mode_;
  FeatureSpec feature_spec_;
  PixelSpec pixel_spec_;
  CarParams params_;
  int max_frames_;

  CarState state_;
  std::vector<char> visited_;
  int tiles_visited_ = 0;
  int frame_ = 0;
  bool done_ = false;
  double cumulative_reward_ = 0.0;
  double last_arc_ = 0.0;
};

}  // namespace racerl
