#include "safex/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "safex/error.hpp"

namespace safex {

Obstacle Obstacle::circle(const Vec2& center, double radius) {
  Obstacle o;
  o.shape = Shape::Circle;
  o.center = center;
  o.radius = radius;
  o.validate();
  return o;
}

Obstacle Obstacle::rect(const Vec2& lo, const Vec2& hi) {
  Obstacle o;
  o.shape = Shape::Rect;
  o.lo = lo;
  o.hi = hi;
  o.validate();
  return o;
}

void Obstacle::validate() const {
  if (shape == Shape::Circle) {
    if (!(radius > 0.0) || !center.allFinite()) throw ConfigError("circle radius must be positive");
  } else if (!(lo.x() < hi.x() && lo.y() < hi.y()) || !lo.allFinite() || !hi.allFinite()) {
    throw ConfigError("rectangle needs min < max componentwise");
  }
}

void Workspace::validate() const {
  if (!(lo.x() < hi.x() && lo.y() < hi.y())) throw ConfigError("workspace bounds invalid");
}

double point_segment_distance(const Vec2& x, const Vec2& p, const Vec2& q) {
  const Vec2 d = q - p;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (x - p).norm();
  const double t = std::clamp((x - p).dot(d) / len2, 0.0, 1.0);
  return (x - (p + t * d)).norm();
}

namespace {

double rect_distance(const Vec2& lo, const Vec2& hi, const Vec2& p) {
  const double dx = std::max({lo.x() - p.x(), 0.0, p.x() - hi.x()});
  const double dy = std::max({lo.y() - p.y(), 0.0, p.y() - hi.y()});
  return std::hypot(dx, dy);
}

// Liang-Barsky clip of [p, q] against the closed box.
bool segment_hits_rect(const Vec2& lo, const Vec2& hi, const Vec2& p, const Vec2& q) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = q - p;
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) {
      if (p[axis] < lo[axis] || p[axis] > hi[axis]) return false;
      continue;
    }
    double ta = (lo[axis] - p[axis]) / d[axis];
    double tb = (hi[axis] - p[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

double Obstacle::distance(const Vec2& p) const {
  if (shape == Shape::Circle) return std::max(0.0, (p - center).norm() - radius);
  return rect_distance(lo, hi, p);
}

double Obstacle::segment_distance(const Vec2& p, const Vec2& q) const {
  if (shape == Shape::Circle) return std::max(0.0, point_segment_distance(center, p, q) - radius);
  if (segment_hits_rect(lo, hi, p, q)) return 0.0;
  double best = std::min(rect_distance(lo, hi, p), rect_distance(lo, hi, q));
  const Vec2 corners[] = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
  for (const auto& c : corners) best = std::min(best, point_segment_distance(c, p, q));
  return best;
}

Obstacle Obstacle::bloated(double e) const {
  if (e < 0.0) throw ConfigError("bloat radius must be >= 0");
  Obstacle o = *this;
  if (shape == Shape::Circle) {
    o.radius += e;
  } else {
    o.lo.array() -= e;
    o.hi.array() += e;
  }
  return o;
}

ObstacleSet bloat(const ObstacleSet& obstacles, double e) {
  if (e < 0.0) throw ConfigError("bloat radius must be >= 0");
  ObstacleSet out;
  out.reserve(obstacles.size());
  for (const auto& o : obstacles) out.push_back(o.bloated(e));
  return out;
}

double clearance(const Vec2& p, const ObstacleSet& obstacles) {
  double best = HUGE_VAL;
  for (const auto& o : obstacles) best = std::min(best, o.distance(p));
  return best;
}

bool point_free(const Vec2& p, const ObstacleSet& obstacles) { return clearance(p, obstacles) > 0.0; }

bool segment_free(const Vec2& p, const Vec2& q, const ObstacleSet& obstacles) {
  for (const auto& o : obstacles) {
    if (o.segment_distance(p, q) <= 0.0) return false;
  }
  return true;
}

}  // namespace safex
