#include "trafficforge/controller.hpp"

#include <algorithm>
#include <cmath>

namespace trafficforge {

double lateral_velocity(double kp_lateral, double x_lateral, double epsilon) {
  return -kp_lateral * (x_lateral + epsilon);
}

double required_heading(double v, double v_lateral, double v_eps, double psi_req_max) {
  const double ratio = std::clamp(v_lateral / std::max(v, v_eps), -1.0, 1.0);
  return std::clamp(std::asin(ratio), -psi_req_max, psi_req_max);
}

double heading_rate(double kp_heading, double psi_future, double psi_req, double psi_current) {
  return kp_heading * wrap_angle(psi_future + psi_req - psi_current);
}

double steering_from_rate(double length, double v, double psi_dot, double v_eps, double phi_max) {
  const double phi = std::atan(length * psi_dot / std::max(v, v_eps));
  return std::clamp(phi, -phi_max, phi_max);
}

double longitudinal_command(double v, double v_ref, double kp_speed, double a_idm, double a_max_decel,
                            double a_cap) {
  const double a = std::min(kp_speed * (v_ref - v), a_idm);
  return std::clamp(a, -a_max_decel, a_cap);
}

VehicleState step_kinematics(const VehicleState& s, double a_cmd, double phi, const VehicleGeometry& geom,
                             double dt) {
  VehicleState n;
  n.v = std::max(0.0, s.v + a_cmd * dt);
  n.psi = wrap_angle(s.psi + (s.v / geom.length) * std::tan(phi) * dt);
  n.position = s.position + unit_from_heading(s.psi) * (s.v * dt);
  n.a = a_cmd;
  n.phi = phi;
  return n;
}

ControlCommand track_reference(const VehicleState& state, const Polyline& reference, double s_ref,
                               double x_lateral, double v_ref, double a_idm, const VehicleGeometry& geom,
                               const ControllerParams& p, double a_cap) {
  const double lookahead = std::max(state.v * p.lookahead_time, p.lookahead_min);
  const double psi_future = reference.sample_extended(std::clamp(s_ref + lookahead, 0.0, reference.length())).heading;
  const double v_lat = lateral_velocity(p.kp_lateral, x_lateral, p.epsilon);
  const double psi_req = required_heading(state.v, v_lat, p.v_eps, p.psi_req_max);
  const double psi_dot = heading_rate(p.kp_heading, psi_future, psi_req, state.psi);
  ControlCommand cmd;
  cmd.phi = steering_from_rate(geom.length, state.v, psi_dot, p.v_eps, p.phi_max);
  cmd.a_cmd = longitudinal_command(state.v, v_ref, p.kp_speed, a_idm, p.a_max_decel, a_cap);
  cmd.x_lateral = x_lateral;
  return cmd;
}

}  // namespace trafficforge
