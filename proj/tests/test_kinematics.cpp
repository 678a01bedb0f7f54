#include <doctest.h>

#include <cmath>
#include <random>

#include "surfman/kinematics.hpp"

using namespace surfman;
using namespace surfman::kinematics;

namespace {

constexpr double kDeg = M_PI / 180.0;

// Deterministic pose sampler across the workspace (tilt within the envelope).
SurfacePose random_pose(std::mt19937_64& rng, const ModuleGeometry& geom,
                        double envelope_margin = 0.999) {
  std::uniform_real_distribution<double> uh(geom.h_min, geom.h_max);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double h = uh(rng);
  const double psi = u01(rng) * tilt_envelope(h, geom) * envelope_margin;
  const double delta = u01(rng) * 2.0 * M_PI - M_PI;
  return pose_from_polar(delta, psi, h);
}

}  // namespace

TEST_CASE("rotation matrix basics") {
  const Eigen::Matrix3d identity = rotation_matrix({0.0, 0.0, 0.1});
  CHECK((identity - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0.0));

  // Pure pitch is a rotation about Y.
  const double th = 0.7;
  const Eigen::Matrix3d ry = rotation_matrix({0.0, th, 0.1});
  Eigen::Matrix3d expected;
  expected << std::cos(th), 0, std::sin(th), 0, 1, 0, -std::sin(th), 0, std::cos(th);
  CHECK((ry - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rotation matrix third column at roll 30 pitch 40") {
  const SurfacePose pose{30.0 * kDeg, 40.0 * kDeg, 0.1};
  const Eigen::Matrix3d c = rotation_matrix(pose);
  // Independent trig evaluation of the normal component formulas.
  CHECK(c(0, 2) == doctest::Approx(0.6428).epsilon(1e-3));
  CHECK(c(1, 2) == doctest::Approx(-0.3830).epsilon(1e-3));
  CHECK(c(2, 2) == doctest::Approx(0.6634).epsilon(1e-3));
  CHECK((c.col(2) - surface_normal(pose)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rotation matrix equals Rx(roll)*Ry(pitch)") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const double roll = u(rng), pitch = u(rng);
    const Eigen::Matrix3d composed =
        (Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()))
            .toRotationMatrix();
    const Eigen::Matrix3d c = rotation_matrix({roll, pitch, 0.1});
    CHECK((c - composed).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("orientation math invariants over random poses") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int i = 0; i < 10000; ++i) {
    const SurfacePose pose{u(rng), u(rng), 0.1};
    const Eigen::Matrix3d c = rotation_matrix(pose);
    CHECK((c.transpose() * c - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(c.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::Vector3d n = surface_normal(pose);
    CHECK(std::abs(n.norm() - 1.0) < 1e-12);
    CHECK((c.col(2) - n).cwiseAbs().maxCoeff() < 1e-15);
    const PolarAzimuth pa = polar_azimuth(pose);
    CHECK(std::abs(pa.psi - std::acos(n.z())) < 1e-12);
  }
}

TEST_CASE("surface normal examples") {
  const Eigen::Vector3d flat = surface_normal({0.0, 0.0, 0.1});
  CHECK((flat - Eigen::Vector3d::UnitZ()).norm() < 1e-15);

  const Eigen::Vector3d roll30 = surface_normal({30.0 * kDeg, 0.0, 0.1});
  CHECK(roll30.x() == doctest::Approx(0.0));
  CHECK(roll30.y() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(roll30.z() == doctest::Approx(std::cos(30.0 * kDeg)).epsilon(1e-12));

  const Eigen::Vector3d both30 = surface_normal({30.0 * kDeg, 30.0 * kDeg, 0.1});
  CHECK(both30.x() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(both30.y() == doctest::Approx(-0.4330).epsilon(1e-4));
  CHECK(both30.z() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("polar and azimuthal angles") {
  const PolarAzimuth flat = polar_azimuth({0.0, 0.0, 0.1});
  CHECK(flat.delta == 0.0);
  CHECK(flat.psi == 0.0);

  const PolarAzimuth pitch30 = polar_azimuth({0.0, 30.0 * kDeg, 0.1});
  CHECK(pitch30.delta == doctest::Approx(0.0));
  CHECK(pitch30.psi == doctest::Approx(30.0 * kDeg).epsilon(1e-12));

  // psi = arccos(cos(30) cos(40)) ~ 48.45 deg, cross-checked via the normal.
  const SurfacePose pose{30.0 * kDeg, 40.0 * kDeg, 0.1};
  const PolarAzimuth pa = polar_azimuth(pose);
  CHECK(pa.psi == doctest::Approx(48.448 * kDeg).epsilon(1e-4));
  CHECK(pa.psi == doctest::Approx(std::acos(surface_normal(pose).z())).epsilon(1e-14));
}

TEST_CASE("pose_from_polar inverts polar_azimuth") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> upsi(0.0, 0.45);
  std::uniform_real_distribution<double> udelta(-M_PI, M_PI);
  for (int i = 0; i < 500; ++i) {
    const double psi = upsi(rng), delta = udelta(rng);
    const SurfacePose pose = pose_from_polar(delta, psi, 0.1);
    const PolarAzimuth pa = polar_azimuth(pose);
    CHECK(pa.psi == doctest::Approx(psi).epsilon(1e-10));
    if (psi > 1e-6)
      CHECK(std::remainder(pa.delta - delta, 2.0 * M_PI) ==
            doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("oscillation height profile") {
  CHECK(oscillation_height(0.0, 0.02, 3.0, 0.10) == doctest::Approx(0.10));
  CHECK(oscillation_height(0.25, 0.01, 2.0 * M_PI, 0.10) ==
        doctest::Approx(0.11).epsilon(1e-12));
  CHECK(oscillation_height(0.5, 0.01, 2.0 * M_PI, 0.10) ==
        doctest::Approx(0.10).epsilon(1e-12));
  // Periodicity.
  for (double t : {0.05, 0.21, 0.73}) {
    CHECK(oscillation_height(t, 0.01, 5.0, 0.09) ==
          doctest::Approx(oscillation_height(t + 2.0 * M_PI / 5.0, 0.01, 5.0, 0.09))
              .epsilon(1e-12));
  }
}

TEST_CASE("tilt envelope boundaries and interior") {
  const ModuleGeometry geom;
  CHECK(tilt_envelope(geom.h_min, geom) == doctest::Approx(25.0 * kDeg));
  CHECK(tilt_envelope(geom.h_max, geom) == doctest::Approx(8.0 * kDeg));
  const double mid = tilt_envelope(0.105, geom);
  CHECK(mid < 25.0 * kDeg);
  CHECK(mid > 8.0 * kDeg);
  // Non-increasing across the range.
  double prev = tilt_envelope(geom.h_min, geom);
  for (double h = geom.h_min; h <= geom.h_max + 1e-9; h += 0.002) {
    const double v = tilt_envelope(std::min(h, geom.h_max), geom);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  // Feasibility headroom for the rotation strategy at its operating height.
  CHECK(tilt_envelope(0.09, geom) >= 12.0 * kDeg);
  CHECK_THROWS_AS(tilt_envelope(geom.h_max + 0.01, geom), WorkspaceError);
}

TEST_CASE("inverse kinematics symmetry at flat poses") {
  const ModuleGeometry geom;
  const JointAngles joints =
      inverse_kinematics({0.0, 0.0, 0.5 * (geom.h_min + geom.h_max)}, geom);
  CHECK(joints.q[0] == doctest::Approx(joints.q[1]).epsilon(1e-12));
  CHECK(joints.q[1] == doctest::Approx(joints.q[2]).epsilon(1e-12));
}

TEST_CASE("forward kinematics symmetry at equal joints") {
  const ModuleGeometry geom;
  const JointAngles joints =
      inverse_kinematics({0.0, 0.0, 0.11}, geom);
  const SurfacePose pose = forward_kinematics(joints, geom);
  CHECK(pose.roll == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pose.pitch == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pose.height == doctest::Approx(0.11).epsilon(1e-9));
}

TEST_CASE("IK/FK round trip over the workspace") {
  const ModuleGeometry geom;
  std::mt19937_64 rng(123);
  for (int i = 0; i < 1000; ++i) {
    const SurfacePose pose = random_pose(rng, geom);
    const JointAngles joints = inverse_kinematics(pose, geom);
    const SurfacePose back = forward_kinematics(joints, geom, pose);
    CHECK(std::abs(back.roll - pose.roll) < 1e-9);
    CHECK(std::abs(back.pitch - pose.pitch) < 1e-9);
    CHECK(std::abs(back.height - pose.height) < 1e-9);
  }
}

TEST_CASE("FK cold start converges without a guess") {
  const ModuleGeometry geom;
  std::mt19937_64 rng(321);
  for (int i = 0; i < 100; ++i) {
    const SurfacePose pose = random_pose(rng, geom, 0.9);
    const JointAngles joints = inverse_kinematics(pose, geom);
    const SurfacePose back = forward_kinematics(joints, geom);
    CHECK(std::abs(back.roll - pose.roll) < 1e-8);
    CHECK(std::abs(back.pitch - pose.pitch) < 1e-8);
    CHECK(std::abs(back.height - pose.height) < 1e-8);
  }
}

TEST_CASE("FK is locally smooth in the joints") {
  const ModuleGeometry geom;
  const SurfacePose pose{0.05, -0.08, 0.10};
  const JointAngles joints = inverse_kinematics(pose, geom);
  const double eps = 1e-6;
  for (int leg = 0; leg < 3; ++leg) {
    JointAngles plus = joints, minus = joints;
    plus.q[leg] += eps;
    minus.q[leg] -= eps;
    const SurfacePose a = forward_kinematics(plus, geom, pose);
    const SurfacePose b = forward_kinematics(minus, geom, pose);
    // Central difference stays bounded: the pose moves O(eps).
    CHECK(std::abs(a.roll - b.roll) < 100 * eps);
    CHECK(std::abs(a.pitch - b.pitch) < 100 * eps);
    CHECK(std::abs(a.height - b.height) < 100 * eps);

    // And the finite-difference Jacobian predicts a half-step pose.
    JointAngles half = joints;
    half.q[leg] += 0.5 * eps;
    const SurfacePose c = forward_kinematics(half, geom, pose);
    CHECK(c.roll == doctest::Approx(0.5 * (a.roll + b.roll)).epsilon(1e-6));
  }
}

TEST_CASE("workspace violations are rejected with named constraints") {
  const ModuleGeometry geom;
  CHECK_THROWS_WITH_AS(
      (void)inverse_kinematics({0.0, 0.0, geom.h_max + 0.02}, geom),
      doctest::Contains("height"), WorkspaceError);
  CHECK_THROWS_WITH_AS((void)inverse_kinematics({0.6, 0.0, 0.09}, geom),
                       doctest::Contains("envelope"), WorkspaceError);
}

TEST_CASE("clamp_to_workspace respects the envelope") {
  const ModuleGeometry geom;
  const SurfacePose clamped = clamp_to_workspace({0.5, 0.4, 0.2}, geom);
  CHECK(clamped.height == doctest::Approx(geom.h_max));
  const double psi = polar_azimuth(clamped).psi;
  CHECK(psi <= tilt_envelope(clamped.height, geom) + 1e-9);
  // In-workspace poses pass through unchanged.
  const SurfacePose inside{0.05, 0.05, 0.09};
  const SurfacePose same = clamp_to_workspace(inside, geom);
  CHECK(same.roll == inside.roll);
  CHECK(same.pitch == inside.pitch);
}

TEST_CASE("all envelope poses are reachable by the leg geometry") {
  const ModuleGeometry geom;
  for (double h = geom.h_min; h <= geom.h_max + 1e-9; h += 0.01) {
    const double height = std::min(h, geom.h_max);
    const double env = tilt_envelope(height, geom);
    for (double frac : {0.0, 0.5, 1.0}) {
      for (double delta = 0.0; delta < 2.0 * M_PI; delta += M_PI / 6.0) {
        const SurfacePose pose = pose_from_polar(delta, env * frac, height);
        CHECK_NOTHROW((void)inverse_kinematics(pose, geom));
      }
    }
  }
}
