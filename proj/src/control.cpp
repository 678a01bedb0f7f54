#include "surfman/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace surfman::control {

namespace {

constexpr double kRotationRollCap = 12.0 * M_PI / 180.0;

SurfacePose lerp(const SurfacePose& a, const SurfacePose& b, double t) {
  const double s = std::clamp(t, 0.0, 1.0);
  return {a.roll + s * (b.roll - a.roll), a.pitch + s * (b.pitch - a.pitch),
          a.height + s * (b.height - a.height)};
}

}  // namespace

void PidGains::validate() const {
  if (kp < 0.0 || ki < 0.0 || kd < 0.0)
    throw ConfigError("pid: gains must be >= 0");
  if (integrator_clamp < 0.0 || output_clamp <= 0.0)
    throw ConfigError("pid: clamps must be positive");
}

double PidState::update(const PidGains& gains, double error, double dt) {
  integral = std::clamp(integral + error * dt, -gains.integrator_clamp,
                        gains.integrator_clamp);
  const double derivative = has_prev ? (error - prev_error) / dt : 0.0;
  prev_error = error;
  has_prev = true;
  last_raw = gains.kp * error + gains.ki * integral + gains.kd * derivative;
  return std::clamp(last_raw, -gains.output_clamp, gains.output_clamp);
}

void PidState::reset() {
  integral = 0.0;
  prev_error = 0.0;
  has_prev = false;
  last_raw = 0.0;
}

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::Idle: return "idle";
    case Mode::Translation: return "translation";
    case Mode::Rotation: return "rotation";
    case Mode::Flipping: return "flipping";
  }
  return "?";
}

StrategyParams::StrategyParams() {
  translation.kp = 2.4;
  translation.ki = 1.0;
  translation.kd = 0.9;
  translation.integrator_clamp = 0.12;
  translation.output_clamp = 0.45;
  rotation.kp = 10.0;
  rotation.ki = 0.0;
  rotation.kd = 0.0;
  rotation.integrator_clamp = 0.10;
  rotation.output_clamp = kRotationRollCap;
}

void StrategyParams::validate(const ModuleGeometry& geom) const {
  translation.validate();
  rotation.validate();
  if (rotation.output_clamp > kRotationRollCap + 1e-12)
    throw ConfigError("params: rotation roll clamp above the 12 deg cycle cap");
  if (!(h_low < h_init && h_init < h_high))
    throw ConfigError("params: require h_low < h_init < h_high");
  if (h_low < geom.h_min || h_high > geom.h_max)
    throw ConfigError("params: strategy heights outside module height range");
  if (osc_amplitude < 0.0)
    throw ConfigError("params: oscillation amplitude must be >= 0");
  if (h_init + osc_amplitude > geom.h_max || h_init - osc_amplitude < geom.h_min)
    throw ConfigError("params: oscillation band exceeds module height limits");
  if (eps_pos <= 0.0 || eps_yaw <= 0.0)
    throw ConfigError("params: tolerances must be > 0");
  if (sample_period <= 0.0) throw ConfigError("params: sample period must be > 0");
  if (rise_velocity < 0.0) throw ConfigError("params: rise velocity must be >= 0");
}

TranslationStrategy::TranslationStrategy(const StrategyParams& params)
    : params_(params) {}

void TranslationStrategy::reset() {
  pid_x_.reset();
  pid_y_.reset();
  converged_ = false;
}

SurfaceRefs TranslationStrategy::update(const Observation& obs,
                                        const Eigen::Vector2d& target,
                                        double t) {
  SurfaceRefs refs;
  refs.s1 = {0.0, 0.0, params_.h_init};
  refs.s2 = {0.0, 0.0, params_.h_init};

  const double ex = target.x() - obs.position.x();
  const double ey = target.y() - obs.position.y();
  converged_ = std::abs(ex) + std::abs(ey) < params_.eps_pos;

  SurfacePose* active = obs.position.x() >= 0.0 ? &refs.s1 : &refs.s2;
  if (converged_) {
    // Loop guard satisfied: flat and hold.
    pid_x_.reset();
    pid_y_.reset();
    refs.converged = true;
    return refs;
  }

  const double pitch_cmd = pid_x_.update(params_.translation, ex, params_.sample_period);
  const double roll_cmd = pid_y_.update(params_.translation, ey, params_.sample_period);
  active->roll = params_.roll_sign * roll_cmd;
  active->pitch = params_.pitch_sign * pitch_cmd;
  active->height = kinematics::oscillation_height(t, params_.osc_amplitude,
                                                  params_.osc_omega, params_.h_init);
  return refs;
}

RotationStrategy::RotationStrategy(const StrategyParams& params)
    : params_(params) {}

void RotationStrategy::reset() {
  pid_yaw_.reset();
  phase_ = Phase::Check;
  phase_start_ = 0.0;
  last_check_ = -1.0;
  roll1_ = roll2_ = 0.0;
  cycles_ = 0;
}

SurfaceRefs RotationStrategy::update(const Observation& obs, double target_yaw,
                                     double t) {
  SurfaceRefs refs;
  refs.s1 = {0.0, 0.0, params_.h_init};
  refs.s2 = {0.0, 0.0, params_.h_init};

  const double err = std::remainder(target_yaw - obs.yaw, 2.0 * M_PI);

  switch (phase_) {
    case Phase::Check: {
      if (std::abs(err) < params_.eps_yaw) {
        phase_ = Phase::FinalReset;
        phase_start_ = t;
        break;
      }
      const double dt = last_check_ >= 0.0 ? t - last_check_ : params_.sample_period;
      last_check_ = t;
      roll2_ = pid_yaw_.update(params_.rotation, err, std::max(dt, params_.sample_period));
      roll1_ = roll2_ >= 0.0 ? -params_.theta_gamma : params_.theta_gamma;
      ramp_from_ = refs;
      ramp_from_.s2.pitch = params_.theta_beta;  // where the reset left it
      phase_ = Phase::Ramp;
      phase_start_ = t;
      cycles_ += 1;
      [[fallthrough]];
    }
    case Phase::Ramp: {
      const double s = (t - phase_start_) / params_.roll_ramp_s;
      const SurfacePose s1_hold{roll1_, -params_.theta_beta, params_.h_init};
      const SurfacePose s2_hold{roll2_, -params_.theta_beta, params_.h_init};
      refs.s1 = lerp(ramp_from_.s1, s1_hold, s);
      refs.s2 = lerp(ramp_from_.s2, s2_hold, s);
      if (s >= 1.0) {
        phase_ = Phase::Hold;
        phase_start_ = t;
      }
      break;
    }
    case Phase::Hold:
      refs.s1 = {roll1_, -params_.theta_beta, params_.h_init};
      refs.s2 = {roll2_, -params_.theta_beta, params_.h_init};
      if (t - phase_start_ >= params_.settle_s) {
        phase_ = Phase::ResetLower;
        phase_start_ = t;
      }
      break;
    case Phase::ResetLower:
      // Flatten and drop surface 2 to break contact for fresh contact points.
      refs.s1 = {0.0, 0.0, params_.h_init};
      refs.s2 = {0.0, params_.theta_beta, params_.h_low};
      if (t - phase_start_ >= params_.travel_s) {
        phase_ = Phase::ResetRaise;
        phase_start_ = t;
      }
      break;
    case Phase::ResetRaise:
      refs.s1 = {0.0, 0.0, params_.h_init};
      refs.s2 = {0.0, params_.theta_beta, params_.h_init};
      if (t - phase_start_ >= params_.travel_s) {
        phase_ = Phase::Check;
        phase_start_ = t;
      }
      break;
    case Phase::FinalReset:
      if (t - phase_start_ >= params_.travel_s) phase_ = Phase::Done;
      break;
    case Phase::Done:
      refs.converged = true;
      break;
  }
  if (phase_ == Phase::FinalReset || phase_ == Phase::Done)
    refs.s1 = refs.s2 = {0.0, 0.0, params_.h_init};
  return refs;
}

FlippingStrategy::FlippingStrategy(const StrategyParams& params,
                                   double object_extent, bool fold_mode)
    : params_(params),
      object_extent_(object_extent),
      fold_mode_(fold_mode),
      translator_(params) {}

void FlippingStrategy::reset() {
  translator_.reset();
  phase_ = Phase::Stage;
  phase_start_ = 0.0;
}

Eigen::Vector2d FlippingStrategy::staging_target(const Observation& obs) const {
  const double extent =
      fold_mode_ ? obs.strip_length.value_or(object_extent_) : object_extent_;
  const double overhang = fold_mode_ ? extent / 3.0 : params_.flip_overhang;
  return {0.5 * extent - overhang, 0.0};
}

SurfaceRefs FlippingStrategy::update(const Observation& obs, double t) {
  SurfaceRefs refs;
  refs.s1 = {0.0, 0.0, params_.h_init};
  refs.s2 = {0.0, 0.0, params_.h_init};
  const double stroke = params_.h_high - params_.h_low;

  switch (phase_) {
    case Phase::Stage: {
      const Eigen::Vector2d target = staging_target(obs);
      if ((target - obs.position).norm() > params_.eps_pos) {
        refs = translator_.update(obs, target, t);
        refs.s2 = {0.0, -params_.theta_beta, params_.h_init - 0.01};
        return refs;
      }
      phase_ = Phase::Lower;
      phase_start_ = t;
      [[fallthrough]];
    }
    case Phase::Lower:
      refs.s1 = {0.0, 0.0, params_.h_low};
      refs.s2 = {0.0, params_.theta_beta, params_.h_low};
      if (t - phase_start_ >= params_.travel_s) {
        phase_ = Phase::PreSettle;
        phase_start_ = t;
      }
      break;
    case Phase::PreSettle:
      refs.s1 = {0.0, 0.0, params_.h_low};
      refs.s2 = {0.0, params_.theta_beta, params_.h_low};
      if (t - phase_start_ >= params_.preflip_s) {
        phase_ = Phase::Rise;
        phase_start_ = t;
        rise_start_height_ = params_.h_low;
      }
      break;
    case Phase::Rise: {
      // Impact: surface 2 to (0, 0, h_high) inside the rise window, tracked
      // kinematically. The tilt unwinds with the height progress.
      const double dh = params_.rise_velocity * (t - phase_start_);
      const double progress = stroke > 0.0 ? std::clamp(dh / stroke, 0.0, 1.0) : 1.0;
      refs.s1 = {0.0, 0.0, params_.h_low};
      refs.s2 = {0.0, (1.0 - progress) * params_.theta_beta,
                 rise_start_height_ + progress * stroke};
      refs.s2_kinematic = true;
      const double window =
          std::max(params_.rise_s,
                   params_.rise_velocity > 0.0 ? stroke / params_.rise_velocity
                                               : params_.rise_s);
      if (t - phase_start_ >= window) {
        phase_ = Phase::PostSettle;
        phase_start_ = t;
      }
      break;
    }
    case Phase::PostSettle:
      refs.s1 = {0.0, 0.0, params_.h_low};
      refs.s2 = {0.0, 0.0, params_.h_high};
      if (t - phase_start_ >= params_.postflip_s) {
        phase_ = Phase::Reset;
        phase_start_ = t;
      }
      break;
    case Phase::Reset:
      refs.s1 = {0.0, 0.0, params_.h_init};
      refs.s2 = {0.0, 0.0, params_.h_init};
      if (t - phase_start_ >= params_.travel_s) phase_ = Phase::Done;
      break;
    case Phase::Done:
      refs.converged = true;
      break;
  }
  return refs;
}

JointAngles joint_servo(const JointAngles& ref, const JointAngles& current,
                        double dt, double max_rate) {
  JointAngles next = current;
  const double cap = max_rate * dt;
  for (int i = 0; i < 3; ++i) {
    const double delta = ref.q[i] - current.q[i];
    next.q[i] = current.q[i] + (std::isfinite(cap)
                                    ? std::clamp(delta, -cap, cap)
                                    : delta);
  }
  return next;
}

std::string ScriptStep::str() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::TranslateTo:
      out << "translate_to_m " << target.x() << " " << target.y();
      break;
    case Kind::RotateTo:
      out << "rotate_to_rad " << target_yaw;
      break;
    case Kind::Flip:
      out << "flip";
      break;
    case Kind::Fold:
      out << "fold";
      break;
  }
  return out.str();
}

TaskPlanner::TaskPlanner(std::vector<ScriptStep> script, PlannerConfig config)
    : script_(std::move(script)), config_(std::move(config)) {
  config_.params.validate(config_.geometry);
}

void TaskPlanner::advance(double t) {
  current_ += 1;
  step_started_ = false;
  hold_since_ = -1.0;
  translation_.reset();
  rotation_.reset();
  flipping_.reset();
}

TaskPlanner::Output TaskPlanner::update(const Observation& obs, double t) {
  Output out;
  out.refs.s1 = {0.0, 0.0, config_.params.h_init};
  out.refs.s2 = {0.0, 0.0, config_.params.h_init};

  if (current_ >= script_.size()) {
    out.mode = Mode::Idle;
    out.step_index = static_cast<int>(script_.size());
    out.done = true;
    return out;
  }

  const ScriptStep& step = script_[current_];
  if (!step_started_) {
    step_started_ = true;
    step_start_ = t;
    switch (step.kind) {
      case ScriptStep::Kind::TranslateTo:
        translation_.emplace(config_.params);
        break;
      case ScriptStep::Kind::RotateTo:
        rotation_.emplace(config_.params);
        break;
      case ScriptStep::Kind::Flip:
        flipping_.emplace(config_.params, config_.object_extent, false);
        break;
      case ScriptStep::Kind::Fold:
        flipping_.emplace(config_.params, config_.object_extent, true);
        break;
    }
  }

  if (t - step_start_ > config_.step_timeout) {
    std::ostringstream msg;
    msg << "task_planner: step " << current_ << " (" << step.str()
        << ") timed out after " << config_.step_timeout
        << " s simulated; object at (" << obs.position.x() << ", "
        << obs.position.y() << "), yaw " << obs.yaw;
    throw SimulationError(msg.str());
  }

  out.step_index = static_cast<int>(current_);
  bool step_done = false;

  switch (step.kind) {
    case ScriptStep::Kind::TranslateTo: {
      out.mode = Mode::Translation;
      out.refs = translation_->update(obs, step.target, t);
      // Require a short converged hold so the steady state is real rather
      // than one sample passing through the deadband.
      if (translation_->converged()) {
        if (hold_since_ < 0.0) hold_since_ = t;
        if (t - hold_since_ >= 1.0) step_done = true;
      } else {
        hold_since_ = -1.0;
      }
      break;
    }
    case ScriptStep::Kind::RotateTo:
      out.mode = Mode::Rotation;
      out.refs = rotation_->update(obs, step.target_yaw, t);
      step_done = rotation_->finished();
      break;
    case ScriptStep::Kind::Flip:
    case ScriptStep::Kind::Fold:
      out.mode = Mode::Flipping;
      out.refs = flipping_->update(obs, t);
      step_done = flipping_->finished();
      break;
  }

  // Planner safety: never emit references outside the workspace.
  out.refs.s1 = kinematics::clamp_to_workspace(out.refs.s1, config_.geometry);
  out.refs.s2 = kinematics::clamp_to_workspace(out.refs.s2, config_.geometry);

  if (step_done) {
    advance(t);
    out.done = current_ >= script_.size();
  }
  return out;
}

}  // namespace surfman::control
