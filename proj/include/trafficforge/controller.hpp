#pragma once

#include <limits>

#include "trafficforge/common.hpp"
#include "trafficforge/polyline.hpp"

namespace trafficforge {

struct VehicleState {
  Vec2 position;
  double v = 0.0;    // m/s, >= 0
  double psi = 0.0;  // rad, (-pi, pi]
  double a = 0.0;    // m/s^2, last commanded
  double phi = 0.0;  // rad, steering
};

struct VehicleGeometry {
  double length = 4.0;  // also used as L in the steering law
  double width = 1.8;
};

struct ControllerParams {
  double kp_lateral = 1.0;
  double kp_heading = 2.0;
  double epsilon = 0.0;  // lateral offset noise, drawn per agent
  double lookahead_time = 0.8;
  double lookahead_min = 2.0;
  double kp_speed = 1.0;
  double phi_max = deg_to_rad(35.0);
  double v_eps = 0.5;
  double psi_req_max = deg_to_rad(45.0);
  double a_max_decel = 8.0;
};

double lateral_velocity(double kp_lateral, double x_lateral, double epsilon);

double required_heading(double v, double v_lateral, double v_eps,
                        double psi_req_max = deg_to_rad(45.0));

/// Heading-error feedback: kp * wrap(psi_future + psi_req - psi_current).
double heading_rate(double kp_heading, double psi_future, double psi_req, double psi_current);

double steering_from_rate(double length, double v, double psi_dot, double v_eps, double phi_max);

/// min(kp*(v_ref - v), a_idm), clamped to [-a_max_decel, a_cap].
double longitudinal_command(double v, double v_ref, double kp_speed, double a_idm,
                            double a_max_decel = 8.0,
                            double a_cap = std::numeric_limits<double>::infinity());

/// Forward-Euler kinematic bicycle step.
VehicleState step_kinematics(const VehicleState& state, double a_cmd, double phi,
                             const VehicleGeometry& geom, double dt);

struct ControlCommand {
  double a_cmd = 0.0;
  double phi = 0.0;
  double x_lateral = 0.0;
};

/// Full lateral + longitudinal tracking of a reference centerline.
/// `s_ref` is the vehicle's arc position on `reference`, `x_lateral` its signed offset.
ControlCommand track_reference(const VehicleState& state, const Polyline& reference, double s_ref,
                               double x_lateral, double v_ref, double a_idm,
                               const VehicleGeometry& geom, const ControllerParams& params,
                               double a_cap = std::numeric_limits<double>::infinity());

}  // namespace trafficforge
