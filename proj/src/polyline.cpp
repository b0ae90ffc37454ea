#include "trafficforge/polyline.hpp"

#include <algorithm>
#include <limits>

namespace trafficforge {

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ValidationError("polyline needs at least 2 points");
  cum_s_.reserve(points_.size());
  cum_s_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double len = distance(points_[i - 1], points_[i]);
    if (!(len > 0.0)) throw ValidationError("polyline has coincident consecutive points");
    cum_s_.push_back(cum_s_.back() + len);
  }
}

std::size_t Polyline::segment_at(double s) const {
  // First vertex strictly after s, so an interior vertex maps to the following segment.
  auto it = std::upper_bound(cum_s_.begin(), cum_s_.end(), s);
  std::size_t idx = static_cast<std::size_t>(std::distance(cum_s_.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, segment_count() - 1);
}

PolylineSample Polyline::sample(double s) const {
  constexpr double kSlack = 1e-9;
  if (empty()) throw BoundsError("sample on empty polyline");
  if (!(s >= -kSlack && s <= length() + kSlack)) {
    throw BoundsError("arc position " + std::to_string(s) + " outside [0, " +
                      std::to_string(length()) + "]");
  }
  return sample_extended(std::clamp(s, 0.0, length()));
}

PolylineSample Polyline::sample_extended(double s) const {
  const std::size_t i = segment_at(s);
  const Vec2 a = points_[i];
  const Vec2 b = points_[i + 1];
  const double seg = cum_s_[i + 1] - cum_s_[i];
  const double t = (s - cum_s_[i]) / seg;
  if (t == 0.0) return {a, (b - a).heading()};
  return {a + (b - a) * t, (b - a).heading()};
}

PolylineProjection Polyline::project_range(const Vec2& p, std::size_t first, std::size_t last) const {
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = first; i <= last; ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const double len2 = d.dot(d);
    const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
    const Vec2 foot = t == 0.0 ? a : (t == 1.0 ? points_[i + 1] : a + d * t);
    const double dist = distance(p, foot);
    if (dist < best.distance) {
      best.distance = dist;
      best.foot = foot;
      best.segment = i;
      best.s = t == 1.0 ? cum_s_[i + 1] : cum_s_[i] + t * (cum_s_[i + 1] - cum_s_[i]);
      const double side = d.cross(p - foot);
      best.lateral = side > 0.0 ? dist : (side < 0.0 ? -dist : 0.0);
    }
  }
  return best;
}

PolylineProjection Polyline::project(const Vec2& p) const {
  if (empty()) throw BoundsError("projection on empty polyline");
  return project_range(p, 0, segment_count() - 1);
}

PolylineProjection Polyline::project_window(const Vec2& p, double s_lo, double s_hi) const {
  if (empty()) throw BoundsError("projection on empty polyline");
  const std::size_t first = segment_at(std::max(s_lo, 0.0));
  const std::size_t last = std::max(first, segment_at(std::min(s_hi, length())));
  PolylineProjection r = project_range(p, first, last);
  // Extrapolate past the ends along the end segments.
  const std::size_t n = segment_count();
  if (r.segment == n - 1 && r.s >= length()) {
    const Vec2 d = unit_from_heading(segment_heading(n - 1));
    const double along = (p - points_.back()).dot(d);
    if (along > 0.0) {
      r.s = length() + along;
      r.foot = points_.back() + d * along;
      r.lateral = d.cross(p - r.foot);
      r.distance = std::abs(r.lateral);
    }
  } else if (r.segment == 0 && r.s <= 0.0) {
    const Vec2 d = unit_from_heading(segment_heading(0));
    const double along = (p - points_.front()).dot(d);
    if (along < 0.0) {
      r.s = along;
      r.foot = points_.front() + d * along;
      r.lateral = d.cross(p - r.foot);
      r.distance = std::abs(r.lateral);
    }
  }
  return r;
}

Polyline Polyline::offset(double off) const {
  if (off == 0.0) return *this;
  const std::size_t n = points_.size();
  std::vector<Vec2> out;
  out.reserve(n);
  auto left_normal = [&](std::size_t seg) {
    const Vec2 d = (points_[seg + 1] - points_[seg]) / (cum_s_[seg + 1] - cum_s_[seg]);
    return Vec2{-d.y, d.x};
  };
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 normal;
    if (i == 0) {
      normal = left_normal(0);
    } else if (i == n - 1) {
      normal = left_normal(n - 2);
    } else {
      const Vec2 n0 = left_normal(i - 1);
      const Vec2 n1 = left_normal(i);
      const Vec2 sum = n0 + n1;
      const double sn = sum.norm();
      if (sn < 1e-6) {
        normal = n1;
      } else {
        const Vec2 miter = sum / sn;
        // Miter length grows as 1/cos(half angle); cap it at sharp corners.
        const double scale = std::min(1.0 / miter.dot(n1), 4.0);
        normal = miter * scale;
      }
    }
    out.push_back(points_[i] + normal * off);
  }
  auto cleaned = dedupe_points(out);
  if (cleaned.size() < 2) throw ValidationError("offset polyline collapsed");
  return Polyline(std::move(cleaned));
}

Polyline Polyline::reversed() const {
  std::vector<Vec2> pts(points_.rbegin(), points_.rend());
  return Polyline(std::move(pts));
}

double cumulative_heading_change(std::span<const Vec2> points) {
  double total = 0.0;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Vec2 d = points[i + 1] - points[i];
    if (d.x == 0.0 && d.y == 0.0) continue;
    const double h = d.heading();
    if (have_prev) total += wrap_angle(h - prev);
    prev = h;
    have_prev = true;
  }
  return total;
}

std::vector<Vec2> dedupe_points(std::span<const Vec2> points, double eps) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const Vec2& p : points) {
    if (!out.empty() && distance(out.back(), p) <= eps) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace trafficforge
