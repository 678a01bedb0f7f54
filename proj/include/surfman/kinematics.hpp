#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "surfman/errors.hpp"

namespace surfman::kinematics {

// End-effector state of one module. The mechanism has no yaw freedom, so the
// platform orientation is fully described by roll (about X) and pitch
// (about Y); height is the platform center above the base plane.
struct SurfacePose {
  double roll = 0.0;    // rad
  double pitch = 0.0;   // rad
  double height = 0.0;  // m
};

struct JointAngles {
  std::array<double, 3> q{0.0, 0.0, 0.0};  // leg drive angles, rad
};

// Parametric three-leg parallel mechanism: identical two-link legs spaced
// 120 degrees apart. Drive joint i rotates the upper link in the vertical
// plane through the leg's radial direction; a fixed-length coupler connects
// the elbow to the platform anchor.
struct ModuleGeometry {
  double surface_edge = 0.150;    // m, square top platform
  double base_radius = 0.090;     // m, drive axes circle
  double platform_radius = 0.060; // m, platform anchor circle
  double upper_link = 0.070;      // m
  double lower_link = 0.110;      // m
  double h_min = 0.060;           // m
  double h_max = 0.160;           // m
  double joint_min = -0.70;       // rad
  double joint_max = 1.92;        // rad
  double max_joint_rate = 15.0;   // rad/s

  // (height m, max tilt rad) knots, sorted by height, non-increasing tilt.
  std::vector<std::pair<double, double>> tilt_knots = default_tilt_knots();

  static std::vector<std::pair<double, double>> default_tilt_knots();
  void validate() const;  // throws ConfigError
};

// Top-surface orientation, Rx(roll) * Ry(pitch). Orthonormal, det +1.
Eigen::Matrix3d rotation_matrix(const SurfacePose& pose);

// Unit normal of the top surface: (sin th, -cos th sin ph, cos ph cos th).
// Equals the third column of rotation_matrix.
Eigen::Vector3d surface_normal(const SurfacePose& pose);

struct PolarAzimuth {
  double delta = 0.0;  // azimuthal angle of the tilt direction, rad
  double psi = 0.0;    // polar (tilt) angle from vertical, rad in [0, pi]
};

// Spherical angles of the surface normal. delta uses the two-argument
// arctangent of (-cos th sin ph, sin th) and is defined as 0 for the flat
// pose, where the direction is degenerate.
PolarAzimuth polar_azimuth(const SurfacePose& pose);

// Inverse of polar_azimuth: pose whose normal has the given spherical angles.
// Requires psi in [0, pi/2).
SurfacePose pose_from_polar(double delta, double psi, double height);

// Height modulation profile: A sin(omega t) + h_init.
double oscillation_height(double t, double amplitude, double omega,
                          double h_init);

// Maximum tilt angle available at a given height (piecewise-linear in the
// configured knots). Throws WorkspaceError for heights outside [h_min, h_max].
double tilt_envelope(double height, const ModuleGeometry& geom);

// Pose -> drive angles, closed form per leg. Throws WorkspaceError when the
// pose violates the height range, tilt envelope, leg reach, or joint limits.
JointAngles inverse_kinematics(const SurfacePose& pose,
                               const ModuleGeometry& geom);

// Drive angles -> pose, Newton iteration on the three coupler constraints.
// Throws SingularityError if the iteration cannot converge. The optional
// guess warm-starts the solve (useful when tracking a trajectory).
SurfacePose forward_kinematics(const JointAngles& joints,
                               const ModuleGeometry& geom);
SurfacePose forward_kinematics(const JointAngles& joints,
                               const ModuleGeometry& geom,
                               const SurfacePose& guess);

// Clamp a pose reference into the workspace: height to [h_min, h_max] and
// combined tilt to the envelope at that height (direction-preserving).
SurfacePose clamp_to_workspace(const SurfacePose& pose,
                               const ModuleGeometry& geom);

}  // namespace surfman::kinematics
