#include "trafficforge/common.hpp"

#include <sstream>

namespace trafficforge {

std::optional<Maneuver> parse_maneuver(std::string_view s) {
  if (s == "left") return Maneuver::kLeft;
  if (s == "right") return Maneuver::kRight;
  if (s == "straight") return Maneuver::kStraight;
  return std::nullopt;
}

DegenerateCenterlineError::DegenerateCenterlineError(long long centerline_id, const std::string& why)
    : ValidationError("degenerate centerline " + std::to_string(centerline_id) + ": " + why),
      centerline_id_(centerline_id) {}

namespace {
std::string off_map_message(double d) {
  std::ostringstream os;
  os << "off-map: nearest lane is " << d << " m away";
  return os.str();
}
}  // namespace

OffMapError::OffMapError(double distance) : Error(off_map_message(distance)), distance_(distance) {}

MissingProfileError::MissingProfileError(Maneuver label)
    : Error("missing-profile: no reference velocity profile for label '" + std::string(to_string(label)) + "'"),
      label_(label) {}

}  // namespace trafficforge
