#include "surfman/perception.hpp"

#include <cmath>

namespace surfman::perception {

void ObservationModel::validate() const {
  if (rate_hz <= 0.0) throw ConfigError("observation: rate must be > 0");
  if (pos_noise < 0.0 || yaw_noise < 0.0)
    throw ConfigError("observation: noise sigma must be >= 0");
  if (latency < 0.0) throw ConfigError("observation: latency must be >= 0");
}

double GaussianRng::uniform() {
  return (engine_() >> 11) * 0x1.0p-53;
}

double GaussianRng::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

control::Observation ground_truth(const dynamics::WorldState& world, double t) {
  control::Observation obs;
  obs.timestamp = t;
  if (world.has_rigid()) {
    obs.position = world.rigid().position;
    obs.yaw = world.rigid().yaw;
  } else {
    const dynamics::StripMeasure measure = dynamics::measure_strip(world.strip());
    obs.position = measure.centroid;
    obs.yaw = measure.axis_angle;
    obs.strip_length = measure.length;
  }
  return obs;
}

control::Observation observe(const dynamics::WorldState& world,
                             const ObservationModel& model, GaussianRng& rng,
                             double t) {
  control::Observation obs = ground_truth(world, t);
  if (model.pos_noise > 0.0) {
    obs.position.x() += model.pos_noise * rng.next();
    obs.position.y() += model.pos_noise * rng.next();
  }
  if (model.yaw_noise > 0.0) obs.yaw += model.yaw_noise * rng.next();
  return obs;
}

ObservationSource::ObservationSource(const ObservationModel& model)
    : model_(model), rng_(model.seed) {
  model_.validate();
}

void ObservationSource::record(double t, const dynamics::WorldState& world) {
  history_.push_back(ground_truth(world, t));
  // Keep just enough history to serve the latency window.
  const double horizon = model_.latency + 0.5;
  while (history_.size() > 2 &&
         history_.front().timestamp < t - horizon)
    history_.pop_front();
}

std::optional<control::Observation> ObservationSource::poll(double t) {
  if (history_.empty()) return std::nullopt;
  if (t + 1e-12 < next_sample_) return std::nullopt;

  const double query = t - model_.latency;
  // Newest recorded state not newer than the delayed query time.
  const control::Observation* best = nullptr;
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (it->timestamp <= query + 1e-12) {
      best = &*it;
      break;
    }
  }
  if (best == nullptr) best = &history_.front();

  control::Observation obs = *best;
  obs.timestamp = t;
  if (model_.pos_noise > 0.0) {
    obs.position.x() += model_.pos_noise * rng_.next();
    obs.position.y() += model_.pos_noise * rng_.next();
  }
  if (model_.yaw_noise > 0.0) obs.yaw += model_.yaw_noise * rng_.next();

  samples_ += 1;
  next_sample_ += 1.0 / model_.rate_hz;
  return obs;
}

}  // namespace surfman::perception
