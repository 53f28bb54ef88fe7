#pragma once

// Deterministic full-lap fixture shared by the environment tests and the
// acceptance suite.
//
// The circuit is a 61-corner regular polygon whose edges are 12 frames long
// at 10 m/s (0.2 m per frame). Collinear split points subdivide the polygon
// into exactly 100 tiles, with the last tile starting half a frame before the
// lap closes. A car that accelerates to 10 m/s in one frame and takes each
// corner with a single-frame steering impulse traces the polygon edge-exact,
// so the lap completes on frame 61 * 12 = 732 with every tile visited.

#include <cmath>
#include <vector>

#include "racerl/environment.hpp"
#include "racerl/track.hpp"

namespace scripted {

struct Lap {
  racerl::Track track;
  racerl::CarParams params;
  int frames_per_edge = 12;
  int corners = 61;
  int completion_frame = 732;
  double turn_steering = 0.0;  // steering input that rotates one corner angle
};

inline Lap make_lap() {
  using racerl::Vec2;

  const int corners = 61;
  const int frames_per_edge = 12;
  const double dt = 0.02;
  const double speed = 10.0;
  const double step = speed * dt;             // 0.2 m per frame
  const double edge = frames_per_edge * step; // 2.4 m
  const double turn = racerl::kTwoPi / corners;

  // Corner vertices plus collinear splits: 61 + 38 + 1 = 100 boundaries.
  // The final split sits 0.1 m before the lap closes, so the last tile is
  // first touched mid-frame rather than exactly on a frame boundary.
  std::vector<Vec2> boundary;
  Vec2 v{0.0, 0.0};
  for (int j = 0; j < corners; ++j) {
    const Vec2 dir{std::cos(j * turn), std::sin(j * turn)};
    boundary.push_back(v);
    if (j <= 37) boundary.push_back(v + 1.2 * dir);
    if (j == corners - 1) boundary.push_back(v + 2.3 * dir);
    v = v + edge * dir;
  }

  Lap lap;
  lap.track = racerl::Track::from_centerline(boundary, 5.0);
  lap.params.wheelbase = 2.5;
  lap.params.cg_to_rear_axle = 0.0;  // rear-axle reference: no slip angle
  lap.params.wheel_angle_max = 1.2;
  lap.params.wheel_rate = 1000.0;    // wheel reaches any target in one frame
  lap.params.accel_max = 500.0;      // 0 -> 10 m/s in a single frame
  lap.params.brake_max = 15.0;
  lap.params.drag = 0.0;
  lap.params.lat_accel_max = 1e9;
  lap.params.dt = dt;

  const double wheel_needed = std::atan(turn * lap.params.wheelbase / step);
  lap.turn_steering = wheel_needed / lap.params.wheel_angle_max;
  return lap;
}

// Action for the 1-based frame about to be taken.
inline racerl::ContinuousAction action_for_frame(const Lap& lap, int frame) {
  racerl::ContinuousAction a;
  if (frame == 1) {
    a.gas = 1.0;
  } else if (frame % lap.frames_per_edge == 1 &&
             frame <= lap.frames_per_edge * (lap.corners - 1) + 1) {
    a.steering = lap.turn_steering;
  }
  return a;
}

}  // namespace scripted
