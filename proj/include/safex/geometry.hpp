#pragma once

#include <vector>

#include "safex/linalg.hpp"

namespace safex {

/// Closed circle or axis-aligned rectangle in the position plane.
struct Obstacle {
  enum class Shape { Circle, Rect };

  Shape shape = Shape::Circle;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  static Obstacle circle(const Vec2& center, double radius);
  static Obstacle rect(const Vec2& lo, const Vec2& hi);

  void validate() const;
  /// Euclidean distance from p to the set; 0 inside.
  double distance(const Vec2& p) const;
  bool contains(const Vec2& p) const { return distance(p) <= 0.0; }
  /// Distance between the segment [p, q] and the set; 0 if they intersect.
  double segment_distance(const Vec2& p, const Vec2& q) const;
  /// Circle radius grows by e; rectangles grow by e on every side (superset of the Minkowski sum).
  Obstacle bloated(double e) const;

  bool operator==(const Obstacle&) const = default;
};

using ObstacleSet = std::vector<Obstacle>;

struct Workspace {
  Vec2 lo = Vec2(0.0, 0.0);
  Vec2 hi = Vec2(10.0, 10.0);

  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
  double area() const { return (hi - lo).prod(); }
  void validate() const;
};

ObstacleSet bloat(const ObstacleSet& obstacles, double e);

/// Distance to the nearest obstacle; +inf for an empty set.
double clearance(const Vec2& p, const ObstacleSet& obstacles);

bool point_free(const Vec2& p, const ObstacleSet& obstacles);

/// True iff the closed segment [p, q] misses every (closed) obstacle. Exact, no sampling.
bool segment_free(const Vec2& p, const Vec2& q, const ObstacleSet& obstacles);

double point_segment_distance(const Vec2& x, const Vec2& p, const Vec2& q);

}  // namespace safex
