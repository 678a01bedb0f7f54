#include <algorithm>
#include <cmath>
#include <numeric>

#include "surfman/dynamics.hpp"

namespace surfman::dynamics {

namespace {

constexpr int kSolverIterations = 16;

const SurfaceState& support_surface(const WorldState& world, double x) {
  return x >= 0.0 ? world.surface1 : world.surface2;
}

// Unsigned angle between consecutive segments at interior particle i.
double joint_angle(const std::vector<Eigen::Vector3d>& p, int i) {
  const Eigen::Vector3d d1 = p[i] - p[i - 1];
  const Eigen::Vector3d d2 = p[i + 1] - p[i];
  return std::atan2(d1.cross(d2).norm(), d1.dot(d2));
}

}  // namespace

void step_strip(WorldState& world, double dt) {
  if (!(dt > 0.0) || dt > 2e-3 + 1e-12)
    throw SimulationError("step_strip: timestep must be in (0, 2 ms]");
  DeformableStrip& strip = world.strip();
  strip.validate();
  const int n = strip.segments;
  const double seg = strip.segment_length;
  const double radius = 0.5 * strip.thickness;

  if (strip.rest_angle.size() != static_cast<size_t>(std::max(0, n - 1)))
    strip.rest_angle.assign(std::max(0, n - 1), 0.0);

  std::vector<double> angle_before(n - 1);
  for (int i = 1; i < n; ++i) angle_before[i - 1] = joint_angle(strip.pos, i);

  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = 1.0 / strip.particle_mass(i);

  // Predict under gravity.
  std::vector<Eigen::Vector3d> p(n + 1);
  for (int i = 0; i <= n; ++i) {
    strip.vel[i].z() -= strip.gravity * dt;
    p[i] = strip.pos[i] + strip.vel[i] * dt;
  }

  // XPBD: rigid distance constraints plus compliant bending about the
  // per-joint plastic rest angle.
  const double alpha_tilde =
      strip.bending_stiffness > 0.0
          ? 1.0 / (strip.bending_stiffness * dt * dt)
          : 0.0;  // stiffness 0 -> free hinge, handled below
  std::vector<double> lambda(n - 1, 0.0);

  for (int iter = 0; iter < kSolverIterations; ++iter) {
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d d = p[i + 1] - p[i];
      const double len = d.norm();
      if (len < 1e-12) continue;
      const double corr = (len - seg) / (len * (w[i] + w[i + 1]));
      p[i] += w[i] * corr * d;
      p[i + 1] -= w[i + 1] * corr * d;
    }

    if (strip.bending_stiffness > 0.0) {
      for (int i = 1; i < n; ++i) {
        const Eigen::Vector3d d1 = p[i] - p[i - 1];
        const Eigen::Vector3d d2 = p[i + 1] - p[i];
        const double l1 = d1.norm(), l2 = d2.norm();
        if (l1 < 1e-12 || l2 < 1e-12) continue;
        const Eigen::Vector3d u1 = d1 / l1, u2 = d2 / l2;
        const double cosphi = std::clamp(u1.dot(u2), -1.0, 1.0);
        const double sinphi = u1.cross(u2).norm();
        if (sinphi < 1e-9) continue;  // straight, gradient undefined and C~rest
        const double phi = std::atan2(sinphi, cosphi);
        const double c = phi - strip.rest_angle[i - 1];
        const Eigen::Vector3d e1 = (u2 - cosphi * u1) / sinphi;  // unit, _|_ u1
        const Eigen::Vector3d e2 = (u1 - cosphi * u2) / sinphi;
        const Eigen::Vector3d g_prev = e1 / l1;
        const Eigen::Vector3d g_next = -e2 / l2;
        const Eigen::Vector3d g_mid = -(g_prev + g_next);
        const double denom = w[i - 1] * g_prev.squaredNorm() +
                             w[i] * g_mid.squaredNorm() +
                             w[i + 1] * g_next.squaredNorm() + alpha_tilde;
        if (denom < 1e-16) continue;
        const double dlambda = (-c - alpha_tilde * lambda[i - 1]) / denom;
        lambda[i - 1] += dlambda;
        p[i - 1] += w[i - 1] * dlambda * g_prev;
        p[i] += w[i] * dlambda * g_mid;
        p[i + 1] += w[i + 1] * dlambda * g_next;
      }
    }

    // Plane contact with position-level Coulomb friction.
    for (int i = 0; i <= n; ++i) {
      const SurfaceState& surf = support_surface(world, p[i].x());
      if (!surf.contains(p[i].x(), p[i].y())) continue;
      const double zs = surf.plane_z(p[i].x(), p[i].y()) + radius;
      if (p[i].z() >= zs) continue;
      const double dn = zs - p[i].z();
      p[i].z() = zs;
      // Static contact removes the whole tangential step, dynamic keeps the
      // part beyond the friction cone.
      Eigen::Vector2d slide(p[i].x() - strip.pos[i].x(), p[i].y() - strip.pos[i].y());
      const double smax = strip.mu * dn;
      const double slen = slide.norm();
      if (slen > 1e-15) {
        const double keep = slen <= smax ? 0.0 : 1.0 - smax / slen;
        p[i].x() = strip.pos[i].x() + keep * slide.x();
        p[i].y() = strip.pos[i].y() + keep * slide.y();
      }
    }
  }

  // Exact connectivity pass; the solver already sits within ~1e-6 so this
  // perturbs positions negligibly while pinning the invariant.
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d d = p[i + 1] - p[i];
    const double len = d.norm();
    if (len > 1e-12) p[i + 1] = p[i] + d * (seg / len);
  }

  for (int i = 0; i <= n; ++i) {
    strip.vel[i] = (p[i] - strip.pos[i]) / dt;
    strip.pos[i] = p[i];
  }

  // Implicit Laplacian smoothing of velocities stands in for joint damping;
  // unconditionally stable for any coefficient.
  if (strip.joint_damping > 0.0 && n >= 2) {
    const double inertia = strip.linear_density * seg * seg * seg;
    const double s = strip.joint_damping * dt / std::max(inertia, 1e-12);
    std::vector<Eigen::Vector3d> v = strip.vel;
    for (int i = 1; i < n; ++i)
      v[i] = (strip.vel[i] + s * (strip.vel[i - 1] + strip.vel[i + 1])) /
             (1.0 + 2.0 * s);
    strip.vel = std::move(v);
  }

  // Plastic flow: keep each joint's elastic deflection inside the yield band.
  double max_rotation = 0.0;
  for (int i = 1; i < n; ++i) {
    const double phi = joint_angle(strip.pos, i);
    max_rotation = std::max(max_rotation, std::abs(phi - angle_before[i - 1]));
    double& rest = strip.rest_angle[i - 1];
    rest = std::clamp(rest, phi - strip.yield_angle, phi + strip.yield_angle);
    rest = std::max(0.0, rest);
  }
  if (max_rotation > 0.1)
    throw SimulationError("step_strip: joint rotation per step exceeds 0.1 rad; "
                          "timestep too large");

  for (const auto& q : strip.pos)
    if (!q.allFinite()) throw SimulationError("step_strip: state diverged (NaN)");
  world.time += dt;
}

StripMeasure measure_strip(const DeformableStrip& strip) {
  StripMeasure out;
  const int n = strip.segments;
  if (strip.pos.size() != static_cast<size_t>(n + 1)) return out;

  // Sample the chain densely and project onto the footprint's principal axis.
  constexpr int kSamplesPerSegment = 8;
  std::vector<Eigen::Vector2d> samples;
  samples.reserve(n * kSamplesPerSegment + 1);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kSamplesPerSegment; ++k) {
      const double t = static_cast<double>(k) / kSamplesPerSegment;
      const Eigen::Vector3d q = strip.pos[i] + t * (strip.pos[i + 1] - strip.pos[i]);
      samples.emplace_back(q.x(), q.y());
    }
  }
  samples.emplace_back(strip.pos[n].x(), strip.pos[n].y());

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& q : samples) mean += q;
  mean /= static_cast<double>(samples.size());

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& q : samples) {
    const Eigen::Vector2d d = q - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Eigen::Vector2d axis = eig.eigenvectors().col(1);  // largest eigenvalue
  if (axis.x() < 0.0) axis = -axis;
  out.axis_angle = std::atan2(axis.y(), axis.x());

  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (const auto& q : samples) {
    const double u = (q - mean).dot(axis);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  out.length = hi - lo;

  // Camera-style geometric center: occupancy bins along the axis so folded
  // material does not count twice.
  const double bin = 0.25 * strip.segment_length;
  const int nbins = std::max(1, static_cast<int>(std::ceil((hi - lo) / bin)));
  std::vector<char> occupied(nbins, 0);
  std::vector<Eigen::Vector2d> bin_sum(nbins, Eigen::Vector2d::Zero());
  std::vector<int> bin_count(nbins, 0);
  for (const auto& q : samples) {
    const double u = (q - mean).dot(axis);
    int idx = std::min(nbins - 1, std::max(0, static_cast<int>((u - lo) / bin)));
    occupied[idx] = 1;
    bin_sum[idx] += q;
    bin_count[idx] += 1;
  }
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  int used = 0;
  for (int b = 0; b < nbins; ++b) {
    if (!occupied[b]) continue;
    centroid += bin_sum[b] / bin_count[b];
    used += 1;
  }
  out.centroid = used > 0 ? Eigen::Vector2d(centroid / used) : mean;
  return out;
}

}  // namespace surfman::dynamics
