#pragma once

#include <optional>
#include <string>
#include <vector>

#include "surfman/scenario.hpp"

namespace surfman::harness {

struct StepMetrics {
  int index = 0;
  std::string kind;
  bool success = false;
  double start_s = 0.0;
  double end_s = 0.0;               // when the planner advanced past the step
  double convergence_time_s = 0.0;  // transit time to the convergence flag
  double mean_speed_x_cm_s = 0.0;
  double mean_speed_y_cm_s = 0.0;
  double mean_speed_cm_s = 0.0;
  double steady_error_x_cm = 0.0;  // mean over the final second
  double steady_error_y_cm = 0.0;
  double mean_rot_speed_deg_s = 0.0;
};

struct Metrics {
  std::string scenario;
  bool success = false;
  double duration_s = 0.0;
  std::vector<StepMetrics> steps;
  int fold_events = 0;
  double initial_strip_length_m = 0.0;
  double final_strip_length_m = 0.0;
  std::string error;  // diagnostic when a run aborts

  std::string report() const;  // key-value text
};

// One 100 Hz trajectory sample; written as a CSV row.
struct TrajectoryRow {
  double t = 0.0;
  double obj_x = 0.0, obj_y = 0.0, obj_yaw = 0.0;
  double strip_len = 0.0;
  double s1_roll = 0.0, s1_pitch = 0.0, s1_h = 0.0;
  double s2_roll = 0.0, s2_pitch = 0.0, s2_h = 0.0;
  std::string mode;
};

inline constexpr const char* kTrajectoryHeader =
    "t_s,obj_x_m,obj_y_m,obj_yaw_rad,strip_len_m,s1_roll_rad,s1_pitch_rad,"
    "s1_h_m,s2_roll_rad,s2_pitch_rad,s2_h_m,mode";

struct RunResult {
  Metrics metrics;
  std::vector<TrajectoryRow> trajectory;
  int exit_code = 0;  // 0 success, 1 task failure, 2 configuration error
};

struct RunOptions {
  std::string out_dir;  // empty: do not write files
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

// Deterministic closed-loop run: perception -> planner -> IK -> joint servo ->
// forward kinematics -> contact dynamics at the scenario timestep.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options);

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path);

// Parameter sweep: a grid file lists "section.key = v1, v2, ..." axes under
// [sweep]; every combination runs the base scenario with those overrides.
struct SweepAxis {
  std::string section;
  std::string key;
  std::vector<std::string> values;
};

struct SweepPoint {
  std::vector<std::pair<std::string, std::string>> overrides;  // key -> value
  Metrics metrics;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::string report() const;
};

std::vector<SweepAxis> parse_sweep_file(const std::string& path);
SweepResult sweep(const KvFile& base_scenario, const std::vector<SweepAxis>& grid,
                  const RunOptions& options);

}  // namespace surfman::harness
