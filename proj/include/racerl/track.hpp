#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "racerl/geometry.hpp"

namespace racerl {

struct TrackConfig {
  uint64_t seed = 0;
  int tile_count = 100;
  double road_width = 5.0;
  int control_points = 12;
  int max_frames = 2000;

  void validate() const;  // throws std::invalid_argument
};

// One centerline segment. Curvature is signed, positive turning left.
struct Tile {
  Vec2 start;
  Vec2 end;
  double curvature = 0.0;
};

// Closed loop of centerline tiles with a constant road width. Arc length runs
// from 0 at the start of tile 0 and wraps at total_length().
class Track {
 public:
  // boundary[i] -> boundary[i+1] (wrapping) becomes tile i. Curvatures are
  // derived from the turn angle at each tile's trailing junction, which is
  // exact for equal chords inscribed in a circle.
  static Track from_centerline(std::vector<Vec2> boundary, double width, uint64_t seed = 0);

  // Regular tile_count-gon inscribed in a circle of the given radius; the
  // first tile starts at (radius, 0) heading +y.
  static Track circle(double radius, int tile_count, double width);

  int tile_count() const { return static_cast<int>(tiles_.size()); }
  const std::vector<Tile>& tiles() const { return tiles_; }
  double width() const { return width_; }
  double total_length() const { return total_length_; }
  uint64_t seed() const { return seed_; }

  double tile_start_arc(int tile) const { return start_arc_[tile]; }
  double tile_length(int tile) const { return start_arc_[tile + 1] - start_arc_[tile]; }

  double wrap_arc(double arc) const;
  int tile_at(double arc) const;
  double curvature_at(double arc) const { return tiles_[tile_at(arc)].curvature; }
  Vec2 point_at(double arc) const;
  double tangent_at(double arc) const;

  struct Projection {
    double arc = 0.0;           // arc position of the closest centerline point
    double lateral = 0.0;       // signed offset, positive to the left of travel
    double distance = 0.0;      // unsigned distance to the centerline
    int tile = 0;
    double tangent_angle = 0.0;
  };
  // Nearest-tile projection; ties broken by lower tile index.
  Projection project(Vec2 p) const;

  bool on_road(Vec2 p) const { return project(p).distance <= 0.5 * width_; }

 private:
  std::vector<Tile> tiles_;
  std::vector<double> start_arc_;  // size tile_count()+1, last entry == total_length_
  double width_ = 0.0;
  double total_length_ = 0.0;
  uint64_t seed_ = 0;
};

// Random control points on an annulus, periodic spline through them,
// resampled into tile_count equal-arc tiles. Deterministic per config.
Track generate_track(const TrackConfig& config);

// Versioned flat text format: header lines (magic, seed, tiles, width), then
// one "x0 y0 x1 y1 curvature" line per tile at full precision.
std::string serialize_track(const Track& track);
Track parse_track(const std::string& text);

}  // namespace racerl
