#include "racerl/track.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "racerl/csv.hpp"
#include "racerl/errors.hpp"
#include "racerl/rng.hpp"

namespace racerl {

void TrackConfig::validate() const {
  if (tile_count < 8) throw std::invalid_argument("track: tile_count must be >= 8");
  if (road_width <= 0.0) throw std::invalid_argument("track: road_width must be > 0");
  if (control_points < 4) throw std::invalid_argument("track: control_points must be >= 4");
  if (max_frames <= 0) throw std::invalid_argument("track: max_frames must be > 0");
}

Track Track::from_centerline(std::vector<Vec2> boundary, double width, uint64_t seed) {
  const int n = static_cast<int>(boundary.size());
  if (n < 3) throw std::invalid_argument("track: need at least 3 boundary points");
  if (width <= 0.0) throw std::invalid_argument("track: road_width must be > 0");

  Track t;
  t.width_ = width;
  t.seed_ = seed;
  t.tiles_.resize(n);
  t.start_arc_.resize(n + 1);

  std::vector<double> dir(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 a = boundary[i];
    const Vec2 b = boundary[(i + 1) % n];
    const double len = norm(b - a);
    if (len <= 0.0) throw std::invalid_argument("track: zero-length tile");
    t.tiles_[i].start = a;
    t.tiles_[i].end = b;
    dir[i] = std::atan2(b.y - a.y, b.x - a.x);
  }

  double arc = 0.0;
  for (int i = 0; i < n; ++i) {
    t.start_arc_[i] = arc;
    const double len = norm(t.tiles_[i].end - t.tiles_[i].start);
    arc += len;
    // Chord curvature from the trailing junction: 2 sin(dtheta/2) / chord.
    const double turn = wrap_angle(dir[(i + 1) % n] - dir[i]);
    t.tiles_[i].curvature = 2.0 * std::sin(0.5 * turn) / len;
  }
  t.start_arc_[n] = arc;
  t.total_length_ = arc;
  return t;
}

Track Track::circle(double radius, int tile_count, double width) {
  if (radius <= 0.0) throw std::invalid_argument("track: radius must be > 0");
  if (tile_count < 8) throw std::invalid_argument("track: tile_count must be >= 8");
  std::vector<Vec2> pts(tile_count);
  for (int i = 0; i < tile_count; ++i) {
    const double a = kTwoPi * i / tile_count;
    pts[i] = {radius * std::cos(a), radius * std::sin(a)};
  }
  return from_centerline(std::move(pts), width);
}

double Track::wrap_arc(double arc) const {
  arc = std::fmod(arc, total_length_);
  if (arc < 0.0) arc += total_length_;
  return arc;
}

int Track::tile_at(double arc) const {
  arc = wrap_arc(arc);
  const auto it = std::upper_bound(start_arc_.begin(), start_arc_.end(), arc);
  int idx = static_cast<int>(it - start_arc_.begin()) - 1;
  if (idx >= tile_count()) idx = tile_count() - 1;
  if (idx < 0) idx = 0;
  return idx;
}

Vec2 Track::point_at(double arc) const {
  arc = wrap_arc(arc);
  const int i = tile_at(arc);
  const double t = (arc - start_arc_[i]) / tile_length(i);
  return tiles_[i].start + t * (tiles_[i].end - tiles_[i].start);
}

double Track::tangent_at(double arc) const {
  const Tile& tile = tiles_[tile_at(arc)];
  return std::atan2(tile.end.y - tile.start.y, tile.end.x - tile.start.x);
}

Track::Projection Track::project(Vec2 p) const {
  const int n = tile_count();
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_tile = 0;
  double best_t = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec2 a = tiles_[i].start;
    const Vec2 ab = tiles_[i].end - a;
    const double len2 = dot(ab, ab);
    double t = dot(p - a, ab) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q = a + t * ab;
    const double d2 = dot(p - q, p - q);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_tile = i;
      best_t = t;
    }
  }
  const Tile& tile = tiles_[best_tile];
  const Vec2 ab = tile.end - tile.start;
  const double len = norm(ab);
  const Vec2 q = tile.start + best_t * ab;
  Projection proj;
  proj.tile = best_tile;
  proj.arc = start_arc_[best_tile] + best_t * tile_length(best_tile);
  proj.distance = std::sqrt(best_d2);
  proj.lateral = cross((1.0 / len) * ab, p - q);
  proj.tangent_angle = std::atan2(ab.y, ab.x);
  return proj;
}

namespace {

// Closed uniform Catmull-Rom segment between p1 and p2.
Vec2 catmull_rom(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double c0 = -0.5 * t3 + t2 - 0.5 * t;
  const double c1 = 1.5 * t3 - 2.5 * t2 + 1.0;
  const double c2 = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
  const double c3 = 0.5 * t3 - 0.5 * t2;
  return c0 * p0 + c1 * p1 + c2 * p2 + c3 * p3;
}

}  // namespace

Track generate_track(const TrackConfig& config) {
  config.validate();
  Rng rng = Rng::from_stream(config.seed, 0x7261636Bull);  // track stream

  const int m = config.control_points;
  std::vector<Vec2> control(m);
  for (int k = 0; k < m; ++k) {
    const double jitter = rng.uniform(-0.35, 0.35);
    const double angle = kTwoPi * (k + jitter) / m;
    const double radius = rng.uniform(25.0, 45.0);
    control[k] = {radius * std::cos(angle), radius * std::sin(angle)};
  }

  // Dense closed polyline through the control loop.
  const int samples_per_segment = 96;
  std::vector<Vec2> dense;
  dense.reserve(static_cast<size_t>(m) * samples_per_segment);
  for (int k = 0; k < m; ++k) {
    const Vec2 p0 = control[(k + m - 1) % m];
    const Vec2 p1 = control[k];
    const Vec2 p2 = control[(k + 1) % m];
    const Vec2 p3 = control[(k + 2) % m];
    for (int j = 0; j < samples_per_segment; ++j) {
      dense.push_back(catmull_rom(p0, p1, p2, p3, static_cast<double>(j) / samples_per_segment));
    }
  }

  const size_t dn = dense.size();
  std::vector<double> cum(dn + 1, 0.0);
  for (size_t i = 0; i < dn; ++i) {
    cum[i + 1] = cum[i] + norm(dense[(i + 1) % dn] - dense[i]);
  }
  const double total = cum[dn];

  // Equal-arc tile boundaries along the dense polyline.
  const int n = config.tile_count;
  std::vector<Vec2> boundary(n);
  boundary[0] = dense[0];
  size_t cursor = 0;
  for (int i = 1; i < n; ++i) {
    const double target = total * i / n;
    while (cursor + 1 < dn && cum[cursor + 1] < target) ++cursor;
    const double seg_len = cum[cursor + 1] - cum[cursor];
    const double t = seg_len > 0.0 ? (target - cum[cursor]) / seg_len : 0.0;
    boundary[i] = dense[cursor] + t * (dense[(cursor + 1) % dn] - dense[cursor]);
  }

  return Track::from_centerline(std::move(boundary), config.road_width, config.seed);
}

std::string serialize_track(const Track& track) {
  std::string out;
  out += "racetrack 1\n";
  out += "seed " + std::to_string(track.seed()) + "\n";
  out += "tiles " + std::to_string(track.tile_count()) + "\n";
  out += "width " + format_double(track.width()) + "\n";
  for (const Tile& t : track.tiles()) {
    out += format_double(t.start.x) + " " + format_double(t.start.y) + " " +
           format_double(t.end.x) + " " + format_double(t.end.y) + " " +
           format_double(t.curvature) + "\n";
  }
  return out;
}

Track parse_track(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "racetrack") {
    throw FormatError("track: bad magic", 0);
  }
  if (version != 1) throw VersionError("track: unsupported version " + std::to_string(version), 10);

  std::string key;
  uint64_t seed = 0;
  int tiles = 0;
  double width = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (!(in >> key)) throw FormatError("track: truncated header", static_cast<size_t>(in.tellg()));
    if (key == "seed") in >> seed;
    else if (key == "tiles") in >> tiles;
    else if (key == "width") in >> width;
    else throw FormatError("track: unknown header key '" + key + "'", static_cast<size_t>(in.tellg()));
  }
  if (!in || tiles < 3) throw FormatError("track: bad header", static_cast<size_t>(in.tellg()));

  std::vector<Vec2> boundary(tiles);
  for (int i = 0; i < tiles; ++i) {
    double x0, y0, x1, y1, c;
    if (!(in >> x0 >> y0 >> x1 >> y1 >> c)) {
      throw FormatError("track: truncated tile list at tile " + std::to_string(i),
                        text.size());
    }
    boundary[i] = {x0, y0};
  }

  // Endpoints and curvature are derived from the start points on load;
  // identical doubles reproduce them bit-exactly.
  return Track::from_centerline(std::move(boundary), width, seed);
}

}  // namespace racerl
