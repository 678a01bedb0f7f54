#include "surfman/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace surfman::kinematics {

namespace {

constexpr double kLegAzimuth[3] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};

Eigen::Vector3d leg_radial(int i) {
  return {std::cos(kLegAzimuth[i]), std::sin(kLegAzimuth[i]), 0.0};
}

// Platform anchor of leg i in the base frame for a given pose.
Eigen::Vector3d platform_anchor(const SurfacePose& pose,
                                const ModuleGeometry& geom, int i) {
  const Eigen::Vector3d local = geom.platform_radius * leg_radial(i);
  return Eigen::Vector3d(0.0, 0.0, pose.height) + rotation_matrix(pose) * local;
}

Eigen::Vector3d elbow(const ModuleGeometry& geom, int i, double q) {
  const Eigen::Vector3d u = leg_radial(i);
  return geom.base_radius * u +
         geom.upper_link * (std::cos(q) * u + std::sin(q) * Eigen::Vector3d::UnitZ());
}

// Residual of the three coupler-length constraints for a pose candidate.
Eigen::Vector3d coupler_residual(const SurfacePose& pose,
                                 const JointAngles& joints,
                                 const ModuleGeometry& geom) {
  Eigen::Vector3d r;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d d = platform_anchor(pose, geom, i) - elbow(geom, i, joints.q[i]);
    r[i] = d.squaredNorm() - geom.lower_link * geom.lower_link;
  }
  return r;
}

}  // namespace

std::vector<std::pair<double, double>> ModuleGeometry::default_tilt_knots() {
  const double deg = M_PI / 180.0;
  return {{0.060, 25.0 * deg},
          {0.080, 22.0 * deg},
          {0.090, 20.0 * deg},
          {0.120, 14.0 * deg},
          {0.160, 8.0 * deg}};
}

void ModuleGeometry::validate() const {
  if (surface_edge <= 0.0) throw ConfigError("geometry: surface_edge must be > 0");
  if (upper_link <= 0.0 || lower_link <= 0.0)
    throw ConfigError("geometry: link lengths must be > 0");
  if (!(h_min < h_max)) throw ConfigError("geometry: require h_min < h_max");
  if (max_joint_rate <= 0.0) throw ConfigError("geometry: max_joint_rate must be > 0");
  if (tilt_knots.size() < 2) throw ConfigError("geometry: need >= 2 tilt envelope knots");
  for (size_t k = 1; k < tilt_knots.size(); ++k) {
    if (tilt_knots[k].first <= tilt_knots[k - 1].first)
      throw ConfigError("geometry: tilt envelope knot heights must increase");
    if (tilt_knots[k].second > tilt_knots[k - 1].second + 1e-12)
      throw ConfigError("geometry: tilt envelope must be non-increasing in height");
  }
  if (tilt_knots.front().first > h_min + 1e-12 || tilt_knots.back().first < h_max - 1e-12)
    throw ConfigError("geometry: tilt envelope knots must cover [h_min, h_max]");
}

Eigen::Matrix3d rotation_matrix(const SurfacePose& pose) {
  const double cf = std::cos(pose.roll), sf = std::sin(pose.roll);
  const double ct = std::cos(pose.pitch), st = std::sin(pose.pitch);
  Eigen::Matrix3d c;
  c << ct, 0.0, st,
       sf * st, cf, -ct * sf,
       -cf * st, sf, cf * ct;
  return c;
}

Eigen::Vector3d surface_normal(const SurfacePose& pose) {
  const double cf = std::cos(pose.roll), sf = std::sin(pose.roll);
  const double ct = std::cos(pose.pitch), st = std::sin(pose.pitch);
  return {st, -ct * sf, cf * ct};
}

PolarAzimuth polar_azimuth(const SurfacePose& pose) {
  const Eigen::Vector3d n = surface_normal(pose);
  PolarAzimuth out;
  out.psi = std::acos(std::clamp(n.z(), -1.0, 1.0));
  // atan2(0, 0) would be 0 anyway, but make the flat-pose contract explicit.
  out.delta = (n.x() == 0.0 && n.y() == 0.0) ? 0.0 : std::atan2(n.y(), n.x());
  return out;
}

SurfacePose pose_from_polar(double delta, double psi, double height) {
  if (psi < 0.0 || psi >= M_PI / 2.0)
    throw WorkspaceError("pose_from_polar: psi must be in [0, pi/2)");
  // Normal components: nx = sin th, ny = -cos th sin ph, nz = cos ph cos th.
  const double nx = std::sin(psi) * std::cos(delta);
  const double ny = std::sin(psi) * std::sin(delta);
  SurfacePose pose;
  pose.pitch = std::asin(std::clamp(nx, -1.0, 1.0));
  const double ct = std::cos(pose.pitch);
  pose.roll = (ct == 0.0) ? 0.0 : -std::asin(std::clamp(ny / ct, -1.0, 1.0));
  pose.height = height;
  return pose;
}

double oscillation_height(double t, double amplitude, double omega,
                          double h_init) {
  return amplitude * std::sin(omega * t) + h_init;
}

double tilt_envelope(double height, const ModuleGeometry& geom) {
  const auto& knots = geom.tilt_knots;
  if (height < geom.h_min - 1e-12 || height > geom.h_max + 1e-12) {
    std::ostringstream msg;
    msg << "tilt_envelope: height " << height << " outside [" << geom.h_min
        << ", " << geom.h_max << "]";
    throw WorkspaceError(msg.str());
  }
  const double h = std::clamp(height, knots.front().first, knots.back().first);
  for (size_t k = 1; k < knots.size(); ++k) {
    if (h <= knots[k].first) {
      const double t = (h - knots[k - 1].first) /
                       (knots[k].first - knots[k - 1].first);
      return knots[k - 1].second +
             t * (knots[k].second - knots[k - 1].second);
    }
  }
  return knots.back().second;
}

JointAngles inverse_kinematics(const SurfacePose& pose,
                               const ModuleGeometry& geom) {
  if (pose.height < geom.h_min - 1e-9 || pose.height > geom.h_max + 1e-9) {
    std::ostringstream msg;
    msg << "inverse_kinematics: height " << pose.height << " outside ["
        << geom.h_min << ", " << geom.h_max << "]";
    throw WorkspaceError(msg.str());
  }
  const double envelope = tilt_envelope(
      std::clamp(pose.height, geom.h_min, geom.h_max), geom);
  const double psi = polar_azimuth(pose).psi;
  if (psi > envelope + 1e-9) {
    std::ostringstream msg;
    msg << "inverse_kinematics: tilt " << psi << " rad exceeds envelope "
        << envelope << " rad at height " << pose.height;
    throw WorkspaceError(msg.str());
  }

  JointAngles joints;
  const double a = geom.upper_link, b = geom.lower_link;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d u = leg_radial(i);
    const Eigen::Vector3d d = platform_anchor(pose, geom, i) - geom.base_radius * u;
    const double dr = d.dot(u);
    const double dz = d.z();
    const double e = (d.squaredNorm() + a * a - b * b) / (2.0 * a);
    const double rho = std::hypot(dr, dz);
    if (rho < 1e-12 || std::abs(e) > rho) {
      std::ostringstream msg;
      msg << "inverse_kinematics: leg " << i << " cannot reach anchor (|d|="
          << d.norm() << ", links " << a << "/" << b << ")";
      throw WorkspaceError(msg.str());
    }
    // Elbow-out branch: continuous over the workspace, matches q increasing
    // with height.
    const double q = std::atan2(dz, dr) - std::acos(e / rho);
    if (q < geom.joint_min - 1e-9 || q > geom.joint_max + 1e-9) {
      std::ostringstream msg;
      msg << "inverse_kinematics: leg " << i << " drive angle " << q
          << " outside joint limits [" << geom.joint_min << ", "
          << geom.joint_max << "]";
      throw WorkspaceError(msg.str());
    }
    joints.q[i] = q;
  }
  return joints;
}

SurfacePose forward_kinematics(const JointAngles& joints,
                               const ModuleGeometry& geom) {
  SurfacePose guess;
  guess.height = 0.5 * (geom.h_min + geom.h_max);
  return forward_kinematics(joints, geom, guess);
}

SurfacePose forward_kinematics(const JointAngles& joints,
                               const ModuleGeometry& geom,
                               const SurfacePose& guess) {
  // Damped Newton on the coupler-length residuals in (roll, pitch, height).
  Eigen::Vector3d x(guess.roll, guess.pitch, guess.height);
  const auto residual = [&](const Eigen::Vector3d& v) {
    return coupler_residual({v[0], v[1], v[2]}, joints, geom);
  };

  Eigen::Vector3d r = residual(x);
  for (int iter = 0; iter < 80; ++iter) {
    if (r.norm() < 1e-14) break;
    Eigen::Matrix3d jac;
    const double eps = 1e-7;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d xp = x;
      xp[c] += eps;
      jac.col(c) = (residual(xp) - r) / eps;
    }
    // Levenberg damping keeps steps sane near fold-flat leg configurations.
    const Eigen::Matrix3d h =
        jac.transpose() * jac + 1e-12 * Eigen::Matrix3d::Identity();
    const Eigen::Vector3d step = h.ldlt().solve(jac.transpose() * r);
    if (!step.allFinite()) break;
    x -= step;
    r = residual(x);
  }
  if (!(r.norm() < 1e-10) || !x.allFinite()) {
    std::ostringstream msg;
    msg << "forward_kinematics: no convergence (residual " << r.norm()
        << "); configuration near-singular";
    throw SingularityError(msg.str());
  }
  return {x[0], x[1], x[2]};
}

SurfacePose clamp_to_workspace(const SurfacePose& pose,
                               const ModuleGeometry& geom) {
  SurfacePose out = pose;
  out.height = std::clamp(pose.height, geom.h_min, geom.h_max);
  const double envelope = tilt_envelope(out.height, geom);
  PolarAzimuth pa = polar_azimuth(out);
  if (pa.psi > envelope) {
    // Shrink the tilt along its direction until the combined angle fits.
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 60; ++k) {
      const double s = 0.5 * (lo + hi);
      SurfacePose trial{out.roll * s, out.pitch * s, out.height};
      (polar_azimuth(trial).psi <= envelope ? lo : hi) = s;
    }
    out.roll *= lo;
    out.pitch *= lo;
  }
  return out;
}

}  // namespace surfman::kinematics
