#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>

#include "surfman/control.hpp"
#include "surfman/dynamics.hpp"

namespace surfman::perception {

struct ObservationModel {
  double rate_hz = 100.0;
  double pos_noise = 0.0;  // m, 1 sigma per axis
  double yaw_noise = 0.0;  // rad, 1 sigma
  double latency = 0.0;    // s
  std::uint64_t seed = 0;
  void validate() const;
};

// Standard-normal stream with a pinned Box-Muller recipe so identical seeds
// give identical observations regardless of the standard library.
class GaussianRng {
public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}
  double next();

private:
  double uniform();  // [0, 1)
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Ground-truth object state as the vision stand-in sees it: rigid pose, or
// the strip's projected centroid / principal-axis angle / extent.
control::Observation ground_truth(const dynamics::WorldState& world, double t);

// Single noisy sample (no latency): ground truth plus zero-mean Gaussian
// noise drawn from the provided stream.
control::Observation observe(const dynamics::WorldState& world,
                             const ObservationModel& model, GaussianRng& rng,
                             double t);

// Fixed-rate observation stream with latency: record() every dynamics tick,
// poll() returns a sample when one is due.
class ObservationSource {
public:
  explicit ObservationSource(const ObservationModel& model);

  void record(double t, const dynamics::WorldState& world);
  std::optional<control::Observation> poll(double t);
  int samples_emitted() const { return samples_; }

private:
  ObservationModel model_;
  GaussianRng rng_;
  std::deque<control::Observation> history_;  // ground truth, every record()
  double next_sample_ = 0.0;
  int samples_ = 0;
};

}  // namespace surfman::perception
