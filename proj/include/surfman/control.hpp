#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "surfman/errors.hpp"
#include "surfman/kinematics.hpp"

namespace surfman::control {

using kinematics::JointAngles;
using kinematics::ModuleGeometry;
using kinematics::SurfacePose;

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integrator_clamp = 0.5;  // bound on the accumulated integral
  double output_clamp = M_PI / 2.0;
  void validate() const;  // all gains >= 0
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
  double last_raw = 0.0;  // unclamped Kp e + Ki int + Kd de/dt

  // One sample of the PID law; returns the output clamped to +-output_clamp.
  double update(const PidGains& gains, double error, double dt);
  void reset();
};

struct Observation {
  Eigen::Vector2d position{0.0, 0.0};  // m, world
  double yaw = 0.0;                    // rad
  std::optional<double> strip_length;  // m, deformable objects only
  double timestamp = 0.0;              // s
};

enum class Mode { Idle, Translation, Rotation, Flipping };
const char* mode_name(Mode mode);

struct SurfaceRefs {
  SurfacePose s1;
  SurfacePose s2;
  bool s2_kinematic = false;  // surface 2 must track the command exactly
  bool converged = false;
};

// Strategy constants. Heights and timing literals follow the staged
// sequences; the error->tilt sign mapping is fixed so the proportional law
// reduces error under the Rx(roll)Ry(pitch) surface orientation (positive
// pitch drives +X, positive roll drives -Y, hence roll_sign = -1).
struct StrategyParams {
  double eps_pos = 0.01;                    // m
  double eps_yaw = 2.0 * M_PI / 180.0;      // rad
  double theta_beta = 5.0 * M_PI / 180.0;   // center-hold pitch
  double theta_gamma = 5.0 * M_PI / 180.0;  // assist roll
  double osc_amplitude = 0.01;              // m
  double osc_omega = 2.0 * M_PI;            // rad/s
  double h_init = 0.09;
  double h_low = 0.07;
  double h_high = 0.14;
  double settle_s = 0.5;    // rotation contact hold
  double preflip_s = 5.0;   // settle before the impact
  double rise_s = 0.1;      // commanded rise window
  double postflip_s = 1.0;  // settle after the impact
  double travel_s = 0.5;    // reconfiguration time between staged poses
  double roll_ramp_s = 0.2;
  double rise_velocity = 0.7;   // m/s
  double flip_overhang = 0.01;  // m past the boundary when staged
  double sample_period = 0.01;  // s (100 Hz)
  double roll_sign = -1.0;
  double pitch_sign = 1.0;
  PidGains translation;  // X error -> pitch, Y error -> roll
  PidGains rotation;     // yaw error -> surface 2 roll, clamped to 12 deg

  StrategyParams();
  void validate(const ModuleGeometry& geom) const;
};

// Single-surface translation: per-axis PID tilt plus height oscillation.
class TranslationStrategy {
public:
  explicit TranslationStrategy(const StrategyParams& params);
  SurfaceRefs update(const Observation& obs, const Eigen::Vector2d& target,
                     double t);
  void reset();
  bool converged() const { return converged_; }
  // Raw PID outputs (pre sign mapping and clamping), for inspection.
  double raw_roll_pid() const { return pid_y_.last_raw; }
  double raw_pitch_pid() const { return pid_x_.last_raw; }

private:
  StrategyParams params_;
  PidState pid_x_;
  PidState pid_y_;
  bool converged_ = false;
};

// Dual-surface yaw rotation in contact/reset cycles.
class RotationStrategy {
public:
  explicit RotationStrategy(const StrategyParams& params);
  SurfaceRefs update(const Observation& obs, double target_yaw, double t);
  void reset();
  bool finished() const { return phase_ == Phase::Done; }
  int cycles() const { return cycles_; }
  double last_roll_command() const { return roll2_; }

private:
  enum class Phase { Check, Ramp, Hold, ResetLower, ResetRaise, FinalReset, Done };
  StrategyParams params_;
  PidState pid_yaw_;
  Phase phase_ = Phase::Check;
  double phase_start_ = 0.0;
  double last_check_ = -1.0;
  double roll1_ = 0.0;
  double roll2_ = 0.0;
  int cycles_ = 0;
  SurfaceRefs ramp_from_;
};

// Timed flip sequence; delegates to translation while off the staging point.
// In fold mode the staging overhang is one third of the measured length.
class FlippingStrategy {
public:
  FlippingStrategy(const StrategyParams& params, double object_extent,
                   bool fold_mode);
  SurfaceRefs update(const Observation& obs, double t);
  void reset();
  bool finished() const { return phase_ == Phase::Done; }
  Eigen::Vector2d staging_target(const Observation& obs) const;

private:
  enum class Phase { Stage, Lower, PreSettle, Rise, PostSettle, Reset, Done };
  StrategyParams params_;
  double object_extent_;
  bool fold_mode_;
  TranslationStrategy translator_;
  Phase phase_ = Phase::Stage;
  double phase_start_ = 0.0;
  double rise_start_height_ = 0.0;
};

// Rate-limited joint tracking; exact when the rate limit is infinite.
JointAngles joint_servo(const JointAngles& ref, const JointAngles& current,
                        double dt, double max_rate);

struct ScriptStep {
  enum class Kind { TranslateTo, RotateTo, Flip, Fold };
  Kind kind = Kind::TranslateTo;
  Eigen::Vector2d target{0.0, 0.0};  // TranslateTo
  double target_yaw = 0.0;           // RotateTo
  std::string str() const;
};

struct PlannerConfig {
  StrategyParams params;
  ModuleGeometry geometry;
  double object_extent = 0.08;  // footprint along the boundary normal
  double step_timeout = 120.0;  // simulated seconds per script step
};

// Task-level state machine: runs each script step's strategy to convergence,
// emitting workspace-clamped surface references at the control rate.
class TaskPlanner {
public:
  TaskPlanner(std::vector<ScriptStep> script, PlannerConfig config);

  struct Output {
    SurfaceRefs refs;
    Mode mode = Mode::Idle;
    int step_index = 0;
    bool done = false;
  };

  // Advance one control sample. Throws SimulationError on step timeout.
  Output update(const Observation& obs, double t);

  const std::vector<ScriptStep>& script() const { return script_; }

private:
  void advance(double t);

  std::vector<ScriptStep> script_;
  PlannerConfig config_;
  size_t current_ = 0;
  double step_start_ = 0.0;
  bool step_started_ = false;
  double hold_since_ = -1.0;
  std::optional<TranslationStrategy> translation_;
  std::optional<RotationStrategy> rotation_;
  std::optional<FlippingStrategy> flipping_;
};

}  // namespace surfman::control
