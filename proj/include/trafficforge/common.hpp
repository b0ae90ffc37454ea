#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trafficforge {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2 operator/(double k) const { return {x / k, y / k}; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  /// z-component of the 3D cross product; positive when `o` is counterclockwise of *this.
  constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double heading() const { return std::atan2(y, x); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 unit_from_heading(double psi) { return {std::cos(psi), std::sin(psi)}; }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

inline constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

enum class Maneuver { kLeft = 0, kRight = 1, kStraight = 2 };

inline constexpr std::string_view to_string(Maneuver m) {
  switch (m) {
    case Maneuver::kLeft: return "left";
    case Maneuver::kRight: return "right";
    case Maneuver::kStraight: return "straight";
  }
  return "straight";
}

std::optional<Maneuver> parse_maneuver(std::string_view s);

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition or schema.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class DegenerateCenterlineError : public ValidationError {
 public:
  DegenerateCenterlineError(long long centerline_id, const std::string& why);
  long long centerline_id() const { return centerline_id_; }

 private:
  long long centerline_id_;
};

class OffMapError : public Error {
 public:
  explicit OffMapError(double distance);
  double distance() const { return distance_; }

 private:
  double distance_;
};

class EmptySceneError : public Error {
 public:
  using Error::Error;
};

class MissingProfileError : public Error {
 public:
  explicit MissingProfileError(Maneuver label);
  Maneuver label() const { return label_; }

 private:
  Maneuver label_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class DegenerateTrajectoryError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace trafficforge
