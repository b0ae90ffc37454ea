#pragma once

#include <span>
#include <vector>

#include "trafficforge/common.hpp"

namespace trafficforge {

/// Foot point of a query on a polyline.
struct PolylineProjection {
  double s = 0.0;        // arc position of the foot point
  Vec2 foot;
  double distance = 0.0;
  double lateral = 0.0;  // signed, + left of the travel direction
  std::size_t segment = 0;
};

struct PolylineSample {
  Vec2 point;
  double heading = 0.0;
};

/// Ordered 2D points with cached cumulative arc length.
/// Consecutive points are distinct (enforced by the constructor).
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  std::span<const Vec2> points() const { return points_; }
  std::span<const double> cumulative() const { return cum_s_; }
  double length() const { return cum_s_.empty() ? 0.0 : cum_s_.back(); }
  std::size_t segment_count() const { return points_.empty() ? 0 : points_.size() - 1; }
  bool empty() const { return points_.size() < 2; }

  Vec2 front() const { return points_.front(); }
  Vec2 back() const { return points_.back(); }
  double segment_heading(std::size_t i) const { return (points_[i + 1] - points_[i]).heading(); }

  /// Point and heading at arc position s. At an interior vertex the heading
  /// is that of the following segment. Throws BoundsError outside [0, length].
  PolylineSample sample(double s) const;

  /// Same as sample() but clamps s into range and extends the end segments
  /// linearly beyond either end.
  PolylineSample sample_extended(double s) const;

  /// Global nearest foot point. Ties go to the lowest segment index.
  PolylineProjection project(const Vec2& p) const;

  /// Nearest foot point restricted to segments overlapping [s_lo, s_hi]. When
  /// the foot lands on the first or last vertex the arc position is
  /// extrapolated along that end segment, so the result can leave [0, length].
  PolylineProjection project_window(const Vec2& p, double s_lo, double s_hi) const;

  /// Polyline displaced perpendicularly by `offset` (+ left) with mitered joins.
  Polyline offset(double offset) const;
  Polyline reversed() const;

 private:
  PolylineProjection project_range(const Vec2& p, std::size_t first, std::size_t last) const;
  std::size_t segment_at(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> cum_s_;
};

/// Sum of wrapped heading changes between consecutive non-degenerate segments.
double cumulative_heading_change(std::span<const Vec2> points);

/// Removes consecutive points closer than `eps`.
std::vector<Vec2> dedupe_points(std::span<const Vec2> points, double eps = 1e-9);

}  // namespace trafficforge
