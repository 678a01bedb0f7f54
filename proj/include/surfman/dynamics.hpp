#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "surfman/errors.hpp"
#include "surfman/kinematics.hpp"

namespace surfman::dynamics {

using kinematics::SurfacePose;

// Manipulated cuboid. Planar state (x, y, yaw) plus height bookkeeping; the
// only out-of-plane motion modeled is the edge-pivot flip.
struct RigidObject {
  Eigen::Vector2d position{0.0, 0.0};  // CG, world frame, m
  double yaw = 0.0;                    // rad
  Eigen::Vector2d velocity{0.0, 0.0};  // m/s
  double yaw_rate = 0.0;               // rad/s

  double length = 0.08;     // m, footprint extent along body X (flip direction)
  double width = 0.08;      // m, body Y
  double thickness = 0.03;  // m
  double mass = 0.110;      // kg
  double edge_inertia = 0.110 * (0.08 * 0.08 + 0.03 * 0.03) / 3.0;  // kg m^2
  double mu = 0.30;         // Coulomb coefficient (static == kinetic)
  double gravity = 9.81;    // m/s^2
  bool homogeneous = true;  // edge_inertia must equal m(L^2+h^2)/3

  bool inverted = false;  // toggled by each completed flip
  double z = 0.0;         // CG height, m (maintained by the stepper)
  double vz = 0.0;        // vertical velocity during ballistic phases
  bool airborne = false;

  double yaw_inertia() const {
    return mass * (length * length + width * width) / 12.0;
  }
  void validate() const;  // throws ConfigError

  static RigidObject default_cuboid();  // 8x8x3 cm, 110 g test object
};

// Articulated particle chain standing in for the putty strip. Segments are
// inextensible; bending is a compliant constraint with physical stiffness.
struct DeformableStrip {
  int segments = 24;
  double segment_length = 0.15 / 24.0;  // m
  double width = 0.02;                  // m
  double thickness = 0.01;              // m
  double linear_density = 0.36;         // kg/m
  double bending_stiffness = 0.05;      // N*m/rad
  double joint_damping = 2e-4;          // N*m*s/rad
  double mu = 0.30;
  double gravity = 9.81;
  double yield_angle = 0.10;            // rad, elastic band before plastic flow

  std::vector<Eigen::Vector3d> pos;  // segments+1 particle positions
  std::vector<Eigen::Vector3d> vel;
  std::vector<double> rest_angle;    // per interior joint, evolves plastically

  double total_length() const { return segments * segment_length; }
  double particle_mass(int i) const;
  void validate() const;

  // Straight strip along +X starting at x0, resting on a plane of height z.
  static DeformableStrip make_straight(double strip_length, int segments,
                                       double x0, double y, double z_top);
};

struct StripMeasure {
  double length = 0.0;               // extent along the principal axis, m
  Eigen::Vector2d centroid{0.0, 0.0};  // area-weighted projection center, m
  double axis_angle = 0.0;           // principal axis direction, rad
};

// Planar extent and geometric center of the projected chain, computed the way
// an overhead camera sees it: folded-over material does not count twice.
StripMeasure measure_strip(const DeformableStrip& strip);

// One module's surface as a moving plane. Rates and the height acceleration
// are maintained by set_pose from consecutive commands.
struct SurfaceState {
  SurfacePose pose;
  Eigen::Vector2d center{0.0, 0.0};
  double half_edge = 0.075;

  double height_rate = 0.0;
  double height_accel = 0.0;
  double roll_rate = 0.0;
  double pitch_rate = 0.0;

  void set_pose(const SurfacePose& next, double dt);
  void reset_motion(const SurfacePose& p);

  Eigen::Vector3d normal() const { return kinematics::surface_normal(pose); }
  // Plane height under a world point.
  double plane_z(double x, double y) const;
  bool contains(double x, double y) const;
};

// Edge-pivot flip in progress: the object rotates about its far bottom edge
// while Surface 2's rising plane drives the near corner, then rotates freely.
struct FlipPhase {
  double alpha = 0.0;            // plate angle above horizontal, rad
  double omega = 0.0;            // rad/s
  double pivot_x = 0.0;          // world x of the pivot edge
  double pivot_z = 0.0;          // support plane height at the pivot
  double lever = 0.0;            // push lever arm = footprint extent, m
  double cg_lever = 0.0;         // CG distance from pivot along the plate, m
  double base_y = 0.0;
  double drive_z0 = 0.0;         // Surface 2 plane height when the push began
  bool separated = false;
  double separation_alpha = 0.0;
  double separation_omega = 0.0;
  bool resolved = false;
  bool flipped = false;
};

struct WorldState {
  SurfaceState surface1;  // occupies x >= 0
  SurfaceState surface2;  // occupies x < 0
  std::variant<RigidObject, DeformableStrip> object;
  double time = 0.0;
  double dt = 1e-3;  // s, must be in (0, 2e-3]

  std::optional<FlipPhase> flip;
  std::optional<FlipPhase> last_flip;  // most recently resolved flip
  bool object_supported = true;

  RigidObject& rigid() { return std::get<RigidObject>(object); }
  const RigidObject& rigid() const { return std::get<RigidObject>(object); }
  DeformableStrip& strip() { return std::get<DeformableStrip>(object); }
  const DeformableStrip& strip() const { return std::get<DeformableStrip>(object); }
  bool has_rigid() const { return std::holds_alternative<RigidObject>(object); }

  void validate() const;
  static WorldState make_default();  // two 150 mm surfaces at 9 cm, flat
};

// True iff a body slides on an incline of polar angle psi: mu < tan(psi).
bool sliding_condition(double mu, double psi);

// Minimum angular velocity at separation for a flip to carry past upright:
// sqrt(m g L (1 - sin theta) / J).
double flip_min_angular_velocity(const RigidObject& obj, double theta);

// Minimum Surface 2 linear velocity: L * flip_min_angular_velocity.
double flip_min_surface_velocity(const RigidObject& obj, double theta);

// Advance the rigid object one timestep under the two-patch Coulomb contact
// model (stick/slip tangential forces, oscillation-modulated normal load,
// ballistic separation, automatic edge-pivot flip when Surface 2 lifts the
// overhang). Surfaces must already hold their poses for this step.
void step_rigid(WorldState& world, double dt);

// Same stepper, with the dual-surface spanning precondition checked; named
// entry point for the rotation strategy's contact cycles.
void step_rotation_contact(WorldState& world, double dt);

// Advance the strip chain one timestep (XPBD constraint projection with
// per-particle plane contact and Coulomb friction).
void step_strip(WorldState& world, double dt);

// Dispatch on the object type; used by the experiment loop.
void step(WorldState& world, double dt);

// Constant-velocity rise profile for Surface 2 during a flip.
struct RiseProfile {
  double velocity = 0.7;  // m/s
  double stroke = 0.07;   // m
};

struct FlipResult {
  bool flipped = false;
  double separation_angle = 0.0;  // plate angle when contact ended, rad
  double separation_omega = 0.0;  // rad/s
  WorldState world;
};

// Stage-and-fire flip experiment: drives Surface 2 up by the profile with
// 0.1 ms substeps and integrates until the object either completes the flip
// or settles back. Throws ConfigError when the object's CG is not over
// Surface 1 with an overhang contacting Surface 2.
FlipResult simulate_flip(const WorldState& world, const RiseProfile& profile);

}  // namespace surfman::dynamics
