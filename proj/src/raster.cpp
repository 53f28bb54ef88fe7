#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "racerl/environment.hpp"

namespace racerl {

namespace {

constexpr double kCarHalfLength = 2.0;  // m
constexpr double kCarHalfWidth = 0.9;   // m

// Distinct intensity bands for off-road, road and the car footprint.
struct Band {
  double r, g, b;
  double gray;
};

constexpr Band kOffRoad{0.10, 0.55, 0.20, 0.25};
constexpr Band kRoad{0.50, 0.50, 0.50, 0.55};
constexpr Band kCar{0.90, 0.10, 0.10, 0.95};

double point_segment_dist2(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  double t = dot(p - a, ab) / dot(ab, ab);
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + t * ab;
  return dot(p - q, p - q);
}

}  // namespace

PixelObservation render_pixels(const CarState& state, const Track& track,
                               const PixelSpec& spec) {
  if (spec.height < 16 || spec.width < 16) {
    throw std::invalid_argument("pixels: height and width must be >= 16");
  }
  if (spec.channels != 1 && spec.channels != 3) {
    throw std::invalid_argument("pixels: channels must be 1 or 3");
  }

  PixelObservation obs;
  obs.height = spec.height;
  obs.width = spec.width;
  obs.channels = spec.channels;
  obs.grid.assign(static_cast<size_t>(spec.height) * spec.width * spec.channels, 0.0);

  const double mpp = spec.view_span / spec.width;  // meters per pixel
  const Vec2 forward{std::cos(state.heading), std::sin(state.heading)};
  const Vec2 right{std::sin(state.heading), -std::cos(state.heading)};

  // Only tiles near the view contribute.
  const double view_radius =
      0.5 * mpp * std::sqrt(static_cast<double>(spec.width * spec.width) +
                            static_cast<double>(spec.height * spec.height)) +
      track.width();
  std::vector<const Tile*> near;
  for (const Tile& t : track.tiles()) {
    if (point_segment_dist2(state.position, t.start, t.end) <= view_radius * view_radius) {
      near.push_back(&t);
    }
  }

  const double half_road = 0.5 * track.width();
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double sx = (x + 0.5) - 0.5 * spec.width;
      const double sy = 0.5 * spec.height - (y + 0.5);
      const Vec2 world = state.position + (sx * mpp) * right + (sy * mpp) * forward;

      const Band* band = &kOffRoad;
      const double dl = dot(world - state.position, forward);
      const double dw = dot(world - state.position, right);
      if (std::abs(dl) <= kCarHalfLength && std::abs(dw) <= kCarHalfWidth) {
        band = &kCar;
      } else {
        for (const Tile* t : near) {
          if (point_segment_dist2(world, t->start, t->end) <= half_road * half_road) {
            band = &kRoad;
            break;
          }
        }
      }

      const size_t base = (static_cast<size_t>(y) * spec.width + x) * spec.channels;
      if (spec.channels == 1) {
        obs.grid[base] = band->gray;
      } else {
        obs.grid[base + 0] = band->r;
        obs.grid[base + 1] = band->g;
        obs.grid[base + 2] = band->b;
      }
    }
  }
  return obs;
}

}  // namespace racerl
