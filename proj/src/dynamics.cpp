#include "surfman/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace surfman::dynamics {

namespace {

constexpr double kPatchAreaMin = 1e-7;    // m^2, below this a patch is ignored
constexpr double kSupportGapTol = 0.012;  // m, plane drop that breaks contact
constexpr double kFlipLiftTol = 0.003;    // m, Surface 2 lead that starts a flip
constexpr double kFlipRateMin = 0.05;     // m/s, minimum rise rate for a flip
constexpr double kFlipSubstep = 1e-4;     // s, refined integration during flips

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

struct Polygon {
  std::vector<Eigen::Vector2d> pts;
};

Polygon footprint(const RigidObject& obj) {
  const double c = std::cos(obj.yaw), s = std::sin(obj.yaw);
  const double hl = 0.5 * obj.length, hw = 0.5 * obj.width;
  Polygon poly;
  for (const auto& corner : {Eigen::Vector2d{hl, hw}, Eigen::Vector2d{-hl, hw},
                             Eigen::Vector2d{-hl, -hw}, Eigen::Vector2d{hl, -hw}}) {
    poly.pts.push_back(obj.position + Eigen::Vector2d(c * corner.x() - s * corner.y(),
                                                      s * corner.x() + c * corner.y()));
  }
  return poly;
}

// Keep the part of a convex polygon with sign * x >= 0 (Sutherland-Hodgman
// against the shared surface boundary).
Polygon clip_x(const Polygon& poly, double sign) {
  Polygon out;
  const size_t n = poly.pts.size();
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = poly.pts[i];
    const Eigen::Vector2d& b = poly.pts[(i + 1) % n];
    const bool ain = sign * a.x() >= 0.0, bin = sign * b.x() >= 0.0;
    if (ain) out.pts.push_back(a);
    if (ain != bin) {
      const double t = a.x() / (a.x() - b.x());
      out.pts.push_back(a + t * (b - a));
    }
  }
  return out;
}

struct AreaCentroid {
  double area = 0.0;
  Eigen::Vector2d centroid{0.0, 0.0};
};

AreaCentroid area_centroid(const Polygon& poly) {
  AreaCentroid out;
  const size_t n = poly.pts.size();
  if (n < 3) return out;
  double acc = 0.0;
  Eigen::Vector2d cacc{0.0, 0.0};
  for (size_t i = 0; i < n; ++i) {
    const auto& a = poly.pts[i];
    const auto& b = poly.pts[(i + 1) % n];
    const double w = cross2(a, b);
    acc += w;
    cacc += w * (a + b);
  }
  out.area = 0.5 * std::abs(acc);
  if (std::abs(acc) > 1e-16) out.centroid = cacc / (3.0 * acc);
  return out;
}

struct Patch {
  const SurfaceState* surface = nullptr;
  double area = 0.0;
  Eigen::Vector2d centroid{0.0, 0.0};
  double plane_height = 0.0;  // at the centroid
  double share = 0.0;         // fraction of the vertical load
  double normal_force = 0.0;  // N
  bool supporting = false;
};

// Solve per-step friction impulses at up to two contact points with a
// sequential-impulse loop (accumulated clamping keeps it dissipative).
void friction_impulses(RigidObject& obj, std::vector<Patch>& patches, double dt) {
  const double inv_m = 1.0 / obj.mass;
  const double iz = obj.yaw_inertia();
  std::vector<Eigen::Vector2d> accum(patches.size(), Eigen::Vector2d::Zero());

  for (int iter = 0; iter < 8; ++iter) {
    for (size_t k = 0; k < patches.size(); ++k) {
      Patch& p = patches[k];
      if (!p.supporting || p.normal_force <= 0.0) continue;
      const Eigen::Vector2d r = p.centroid - obj.position;
      const Eigen::Vector2d u =
          obj.velocity + obj.yaw_rate * Eigen::Vector2d(-r.y(), r.x());
      Eigen::Matrix2d kmat;
      kmat << inv_m + r.y() * r.y() / iz, -r.x() * r.y() / iz,
              -r.x() * r.y() / iz, inv_m + r.x() * r.x() / iz;
      Eigen::Vector2d impulse = kmat.inverse() * (-u);

      const double nz = p.surface->normal().z();
      const double cap = obj.mu * p.normal_force * nz * dt;  // horizontal cap
      const Eigen::Vector2d old = accum[k];
      Eigen::Vector2d next = old + impulse;
      if (next.norm() > cap) next *= cap / next.norm();
      impulse = next - old;
      accum[k] = next;

      obj.velocity += impulse * inv_m;
      obj.yaw_rate += cross2(r, impulse) / iz;
    }
  }

  // Finite-patch spin friction so a one-patch support still arrests yaw.
  for (const Patch& p : patches) {
    if (!p.supporting || p.normal_force <= 0.0) continue;
    const double cap = obj.mu * p.normal_force * 0.3 * std::sqrt(p.area) * dt / iz;
    obj.yaw_rate -= std::clamp(obj.yaw_rate, -cap, cap);
  }
}

void begin_flip(WorldState& world) {
  RigidObject& obj = world.rigid();
  FlipPhase flip;
  const double c = std::abs(std::cos(obj.yaw)), s = std::abs(std::sin(obj.yaw));
  flip.lever = obj.length * c + obj.width * s;
  flip.cg_lever = 0.5 * flip.lever;
  flip.pivot_x = obj.position.x() + 0.5 * flip.lever;
  flip.base_y = obj.position.y();
  flip.pivot_z = world.surface1.plane_z(flip.pivot_x, flip.base_y);
  flip.drive_z0 = flip.pivot_z;
  world.flip = flip;
}

// Edge-pivot phase: kinematic corner-on-plane push while Surface 2 outruns
// the free pendulum, free rotation afterwards.
void step_flip(WorldState& world, double dt) {
  RigidObject& obj = world.rigid();
  FlipPhase& flip = *world.flip;
  const double j = obj.edge_inertia;
  const double mgl = obj.mass * obj.gravity * flip.cg_lever;

  const int nsub = std::max(1, static_cast<int>(std::round(dt / kFlipSubstep)));
  const double h = dt / nsub;
  bool in_contact_prev = !flip.separated;

  for (int sub = 0; sub < nsub && !flip.resolved; ++sub) {
    // Free pendulum candidate.
    double omega_f = flip.omega - h * mgl * std::cos(flip.alpha) / j;
    double alpha_f = flip.alpha + h * omega_f;

    // Kinematic target from Surface 2's plane under the near corner.
    const double corner_x = flip.pivot_x - flip.lever * std::cos(flip.alpha);
    const double drive_z = world.surface2.plane_z(corner_x, flip.base_y);
    const double lift = std::clamp((drive_z - flip.pivot_z) / flip.lever, -1.0, 1.0);
    const double alpha_target = (lift > 0.0) ? std::asin(lift) : 0.0;

    if (!flip.separated && alpha_target > alpha_f) {
      flip.omega = (alpha_target - flip.alpha) / h;
      flip.alpha = alpha_target;
      in_contact_prev = true;
    } else {
      if (in_contact_prev && !flip.separated && omega_f > 0.0 && flip.alpha > 1e-6) {
        flip.separated = true;
        flip.separation_alpha = flip.alpha;
        flip.separation_omega = flip.omega;
      }
      flip.alpha = alpha_f;
      flip.omega = omega_f;
      in_contact_prev = false;

      if (flip.alpha >= M_PI) {
        flip.resolved = true;
        flip.flipped = true;
      } else if (flip.omega <= 0.0 && flip.alpha <= alpha_target + 1e-9) {
        // Fell back onto the support; rides Surface 2 down until flat.
        flip.alpha = alpha_target;
        flip.omega = 0.0;
        flip.separated = false;
        if (alpha_target <= 1e-4) {
          flip.resolved = true;
          flip.flipped = false;
        }
      }
    }
  }

  // Project the planar state for logging while the flip runs.
  obj.position.x() = flip.pivot_x - flip.cg_lever * std::cos(flip.alpha);
  obj.z = flip.pivot_z + flip.cg_lever * std::sin(flip.alpha);
  obj.velocity = Eigen::Vector2d(flip.cg_lever * std::sin(flip.alpha) * flip.omega, 0.0);
  obj.yaw_rate = 0.0;

  if (flip.resolved) {
    if (flip.flipped) {
      obj.position.x() = flip.pivot_x + flip.cg_lever;
      obj.yaw = std::remainder(obj.yaw + M_PI, 2.0 * M_PI);
      obj.inverted = !obj.inverted;
    } else {
      obj.position.x() = flip.pivot_x - flip.cg_lever;
    }
    obj.velocity.setZero();
    obj.yaw_rate = 0.0;
    obj.z = world.surface1.plane_z(obj.position.x(), obj.position.y()) +
            0.5 * obj.thickness;
    world.last_flip = flip;
    world.flip.reset();
  }
}

}  // namespace

void RigidObject::validate() const {
  if (mass <= 0.0) throw ConfigError("object: mass must be > 0");
  if (edge_inertia <= 0.0) throw ConfigError("object: edge inertia must be > 0");
  if (mu < 0.0) throw ConfigError("object: friction must be >= 0");
  if (length <= 0.0 || width <= 0.0 || thickness <= 0.0)
    throw ConfigError("object: dimensions must be > 0");
  if (homogeneous) {
    const double expected = mass * (length * length + thickness * thickness) / 3.0;
    if (std::abs(edge_inertia - expected) > 1e-9 * std::max(1.0, expected))
      throw ConfigError(
          "object: edge inertia inconsistent with homogeneous cuboid "
          "m(L^2+h^2)/3");
  }
}

RigidObject RigidObject::default_cuboid() { return RigidObject{}; }

double DeformableStrip::particle_mass(int i) const {
  const double m = linear_density * segment_length;
  return (i == 0 || i == segments) ? 0.5 * m : m;
}

void DeformableStrip::validate() const {
  if (segments < 12) throw ConfigError("strip: need >= 12 segments");
  if (segment_length <= 0.0) throw ConfigError("strip: segment length must be > 0");
  if (linear_density <= 0.0) throw ConfigError("strip: linear density must be > 0");
  if (bending_stiffness < 0.0 || joint_damping < 0.0)
    throw ConfigError("strip: stiffness and damping must be >= 0");
  if (mu < 0.0) throw ConfigError("strip: friction must be >= 0");
  if (pos.size() != static_cast<size_t>(segments + 1) || vel.size() != pos.size())
    throw ConfigError("strip: particle arrays must hold segments+1 entries");
}

DeformableStrip DeformableStrip::make_straight(double strip_length, int segments,
                                               double x0, double y, double z_top) {
  DeformableStrip strip;
  strip.segments = segments;
  strip.segment_length = strip_length / segments;
  strip.pos.resize(segments + 1);
  strip.vel.assign(segments + 1, Eigen::Vector3d::Zero());
  strip.rest_angle.assign(segments - 1, 0.0);
  for (int i = 0; i <= segments; ++i)
    strip.pos[i] = Eigen::Vector3d(x0 + i * strip.segment_length, y,
                                   z_top + 0.5 * strip.thickness);
  return strip;
}

void SurfaceState::set_pose(const SurfacePose& next, double dt) {
  if (dt <= 0.0) throw SimulationError("surface set_pose: dt must be > 0");
  const double new_rate = (next.height - pose.height) / dt;
  height_accel = (new_rate - height_rate) / dt;
  height_rate = new_rate;
  roll_rate = (next.roll - pose.roll) / dt;
  pitch_rate = (next.pitch - pose.pitch) / dt;
  pose = next;
}

void SurfaceState::reset_motion(const SurfacePose& p) {
  pose = p;
  height_rate = height_accel = roll_rate = pitch_rate = 0.0;
}

double SurfaceState::plane_z(double x, double y) const {
  const Eigen::Vector3d n = normal();
  return pose.height - (n.x() * (x - center.x()) + n.y() * (y - center.y())) / n.z();
}

bool SurfaceState::contains(double x, double y) const {
  return std::abs(x - center.x()) <= half_edge && std::abs(y - center.y()) <= half_edge;
}

void WorldState::validate() const {
  if (!(dt > 0.0) || dt > 2e-3 + 1e-12)
    throw SimulationError("world: timestep must be in (0, 2 ms]");
  if (has_rigid()) rigid().validate();
  else strip().validate();
}

WorldState WorldState::make_default() {
  WorldState world;
  world.surface1.center = {0.075, 0.0};
  world.surface2.center = {-0.075, 0.0};
  world.surface1.half_edge = world.surface2.half_edge = 0.075;
  world.surface1.reset_motion({0.0, 0.0, 0.09});
  world.surface2.reset_motion({0.0, 0.0, 0.09});
  RigidObject obj = RigidObject::default_cuboid();
  obj.position = {0.075, 0.0};
  obj.z = 0.09 + 0.5 * obj.thickness;
  world.object = obj;
  return world;
}

bool sliding_condition(double mu, double psi) {
  if (psi < 0.0 || psi >= M_PI / 2.0)
    throw ConfigError("sliding_condition: psi must be in [0, pi/2)");
  return mu < std::tan(psi);
}

double flip_min_angular_velocity(const RigidObject& obj, double theta) {
  if (theta < 0.0 || theta > M_PI / 2.0 + 1e-12)
    throw ConfigError("flip threshold: theta must be in [0, pi/2]");
  const double e = obj.mass * obj.gravity * obj.length * (1.0 - std::sin(theta));
  return std::sqrt(std::max(0.0, e) / obj.edge_inertia);
}

double flip_min_surface_velocity(const RigidObject& obj, double theta) {
  return obj.length * flip_min_angular_velocity(obj, theta);
}

void step_rigid(WorldState& world, double dt) {
  if (!(dt > 0.0) || dt > 2e-3 + 1e-12)
    throw SimulationError("step_rigid: timestep must be in (0, 2 ms]");
  RigidObject& obj = world.rigid();

  if (world.flip) {
    step_flip(world, dt);
    world.time += dt;
    return;
  }

  // Contact patches either side of the shared boundary (x = 0).
  const Polygon fp = footprint(obj);
  std::vector<Patch> patches;
  for (const auto& [surface, sign] :
       {std::pair<const SurfaceState*, double>{&world.surface1, 1.0},
        std::pair<const SurfaceState*, double>{&world.surface2, -1.0}}) {
    const AreaCentroid ac = area_centroid(clip_x(fp, sign));
    if (ac.area < kPatchAreaMin) continue;
    Patch p;
    p.surface = surface;
    p.area = ac.area;
    p.centroid = ac.centroid;
    p.plane_height = surface->plane_z(ac.centroid.x(), ac.centroid.y());
    patches.push_back(p);
  }

  if (patches.empty()) {
    // Off the surfaces entirely: free fall, flagged for the harness.
    world.object_supported = false;
    obj.airborne = true;
    obj.vz -= obj.gravity * dt;
    obj.z += obj.vz * dt;
    obj.position += obj.velocity * dt;
    world.time += dt;
    return;
  }
  world.object_supported = true;

  // The object rides the highest patch plane; a surface that has dropped away
  // from the underside is out of contact.
  double z_ride = patches[0].plane_height;
  for (const Patch& p : patches) z_ride = std::max(z_ride, p.plane_height);
  for (Patch& p : patches)
    p.supporting = p.plane_height >= z_ride - kSupportGapTol;

  // Automatic edge-pivot flip: Surface 2's plane leads Surface 1's under the
  // overhang and is still rising, with the CG over Surface 1.
  if (patches.size() == 2 && !obj.airborne) {
    const Patch* p1 = patches[0].surface == &world.surface1 ? &patches[0] : &patches[1];
    const Patch* p2 = patches[0].surface == &world.surface2 ? &patches[0] : &patches[1];
    if (p1->surface == &world.surface1 && p2->surface == &world.surface2 &&
        p2->plane_height - p1->plane_height > kFlipLiftTol &&
        world.surface2.height_rate > kFlipRateMin && obj.position.x() > 0.0) {
      begin_flip(world);
      step_flip(world, dt);
      world.time += dt;
      return;
    }
  }

  // Vertical load: support share of gravity plus the riding acceleration.
  double share_sum = 0.0;
  for (Patch& p : patches)
    if (p.supporting) share_sum += 1.0;

  if (patches.size() == 2 && patches[0].supporting && patches[1].supporting) {
    const double x1 = patches[0].centroid.x(), x2 = patches[1].centroid.x();
    const double span = x1 - x2;
    double s1 = std::abs(span) > 1e-9
                    ? std::clamp((obj.position.x() - x2) / span, 0.0, 1.0)
                    : 0.5;
    patches[0].share = s1;
    patches[1].share = 1.0 - s1;
  } else {
    for (Patch& p : patches) p.share = p.supporting ? 1.0 / share_sum : 0.0;
  }

  double support_accel = 0.0;
  for (const Patch& p : patches)
    if (p.supporting) support_accel += p.share * p.surface->height_accel;

  const double g_eff = obj.gravity + support_accel;

  if (!obj.airborne && g_eff <= 0.0) {
    // Surface accelerating downward faster than gravity: contact force hits
    // zero and the object goes ballistic for part of the cycle.
    obj.airborne = true;
    double support_rate = 0.0;
    for (const Patch& p : patches)
      if (p.supporting) support_rate += p.share * p.surface->height_rate;
    obj.vz = support_rate;
  }

  if (obj.airborne) {
    obj.vz -= obj.gravity * dt;
    obj.z += obj.vz * dt;
    obj.position += obj.velocity * dt;
    obj.yaw += obj.yaw_rate * dt;
    if (obj.z - 0.5 * obj.thickness <= z_ride) {
      obj.airborne = false;  // inelastic landing
      obj.z = z_ride + 0.5 * obj.thickness;
      obj.vz = 0.0;
    }
    world.time += dt;
    return;
  }

  for (Patch& p : patches)
    p.normal_force = p.supporting ? p.share * obj.mass * g_eff : 0.0;

  // In-plane support force: horizontal component of each patch's normal force
  // drives the object downhill; Coulomb friction resists at the patch.
  const double iz = obj.yaw_inertia();
  for (const Patch& p : patches) {
    if (!p.supporting) continue;
    const Eigen::Vector3d n = p.surface->normal();
    const Eigen::Vector2d force =
        p.share * obj.mass * g_eff * n.z() * Eigen::Vector2d(n.x(), n.y());
    obj.velocity += force / obj.mass * dt;
    const Eigen::Vector2d r = p.centroid - obj.position;
    obj.yaw_rate += cross2(r, force) / iz * dt;
  }

  friction_impulses(obj, patches, dt);

  obj.position += obj.velocity * dt;
  obj.yaw += obj.yaw_rate * dt;
  obj.z = z_ride + 0.5 * obj.thickness;

  if (!obj.position.allFinite() || !std::isfinite(obj.yaw))
    throw SimulationError("step_rigid: state diverged (NaN)");
  world.time += dt;
}

void step_rotation_contact(WorldState& world, double dt) {
  const RigidObject& obj = world.rigid();
  const Polygon fp = footprint(obj);
  const double a1 = area_centroid(clip_x(fp, 1.0)).area;
  const double a2 = area_centroid(clip_x(fp, -1.0)).area;
  if (a1 < kPatchAreaMin || a2 < kPatchAreaMin)
    throw ConfigError("step_rotation_contact: object must span both surfaces");
  step_rigid(world, dt);
}

void step(WorldState& world, double dt) {
  if (world.has_rigid()) step_rigid(world, dt);
  else step_strip(world, dt);
}

FlipResult simulate_flip(const WorldState& world, const RiseProfile& profile) {
  FlipResult result;
  result.world = world;
  WorldState& w = result.world;
  if (!w.has_rigid())
    throw ConfigError("simulate_flip: rigid object required");
  const RigidObject& obj = w.rigid();
  const double c = std::abs(std::cos(obj.yaw)), s = std::abs(std::sin(obj.yaw));
  const double extent = obj.length * c + obj.width * s;
  if (obj.position.x() < 0.0)
    throw ConfigError("simulate_flip: object CG must be over Surface 1");
  if (obj.position.x() - 0.5 * extent > -1e-4)
    throw ConfigError("simulate_flip: object must overhang onto Surface 2");

  w.last_flip.reset();
  const double dt = 1e-3;
  const double h0 = w.surface2.pose.height;
  const double rise_time =
      profile.velocity > 0.0 ? profile.stroke / profile.velocity : 0.0;
  const double t0 = w.time;
  const double t_end = t0 + rise_time + 2.0;

  while (w.time < t_end) {
    const double tau = w.time + dt - t0;
    SurfacePose p2 = w.surface2.pose;
    p2.height = (profile.velocity > 0.0)
                    ? std::min(h0 + profile.velocity * tau, h0 + profile.stroke)
                    : h0;
    w.surface1.set_pose(w.surface1.pose, dt);
    w.surface2.set_pose(p2, dt);
    step_rigid(w, dt);
    if (w.last_flip) break;
  }

  if (w.last_flip) {
    result.flipped = w.last_flip->flipped;
    result.separation_angle = w.last_flip->separation_alpha;
    result.separation_omega = w.last_flip->separation_omega;
  }
  return result;
}

}  // namespace surfman::dynamics
