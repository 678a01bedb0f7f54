#include "surfman/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace surfman::harness {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Per-step accumulation while the run progresses.
struct StepTracker {
  const control::ScriptStep* step = nullptr;
  int index = -1;
  double start_t = 0.0;
  Eigen::Vector2d start_pos{0.0, 0.0};
  double start_yaw = 0.0;
  double converged_t = -1.0;
  std::vector<std::pair<double, Eigen::Vector2d>> tail;  // (t, position)

  void begin(const control::ScriptStep& s, int idx, double t,
             const control::Observation& truth) {
    step = &s;
    index = idx;
    start_t = t;
    start_pos = truth.position;
    start_yaw = truth.yaw;
    converged_t = -1.0;
    tail.clear();
  }

  StepMetrics finish(double t, const control::Observation& truth) const {
    StepMetrics m;
    m.index = index;
    m.kind = step->str().substr(0, step->str().find(' '));
    m.success = true;
    m.start_s = start_t;
    m.end_s = t;
    const double transit =
        (converged_t > start_t ? converged_t : t) - start_t;
    m.convergence_time_s = transit;
    if (step->kind == control::ScriptStep::Kind::TranslateTo && transit > 0.0) {
      m.mean_speed_x_cm_s =
          std::abs(truth.position.x() - start_pos.x()) / transit * 100.0;
      m.mean_speed_y_cm_s =
          std::abs(truth.position.y() - start_pos.y()) / transit * 100.0;
      m.mean_speed_cm_s = (truth.position - start_pos).norm() / transit * 100.0;
      double ex = 0.0, ey = 0.0;
      int count = 0;
      for (const auto& [ts, pos] : tail) {
        if (ts < t - 1.0) continue;
        ex += std::abs(pos.x() - step->target.x());
        ey += std::abs(pos.y() - step->target.y());
        count += 1;
      }
      if (count > 0) {
        m.steady_error_x_cm = ex / count * 100.0;
        m.steady_error_y_cm = ey / count * 100.0;
      }
    }
    if (step->kind == control::ScriptStep::Kind::RotateTo && t > start_t) {
      m.mean_rot_speed_deg_s =
          std::abs(std::remainder(truth.yaw - start_yaw, 2.0 * M_PI)) /
          (t - start_t) * 180.0 / M_PI;
    }
    return m;
  }
};

}  // namespace

std::string Metrics::report() const {
  std::ostringstream out;
  out << "scenario = " << scenario << "\n";
  out << "success = " << (success ? 1 : 0) << "\n";
  out << "duration_s = " << fmt(duration_s) << "\n";
  if (!error.empty()) out << "error = " << error << "\n";
  out << "steps = " << steps.size() << "\n";
  for (const StepMetrics& s : steps) {
    const std::string p = "step" + std::to_string(s.index) + ".";
    out << p << "kind = " << s.kind << "\n";
    out << p << "success = " << (s.success ? 1 : 0) << "\n";
    out << p << "start_s = " << fmt(s.start_s) << "\n";
    out << p << "end_s = " << fmt(s.end_s) << "\n";
    out << p << "convergence_time_s = " << fmt(s.convergence_time_s) << "\n";
    if (s.kind == "translate_to_m") {
      out << p << "mean_speed_x_cm_s = " << fmt(s.mean_speed_x_cm_s) << "\n";
      out << p << "mean_speed_y_cm_s = " << fmt(s.mean_speed_y_cm_s) << "\n";
      out << p << "mean_speed_cm_s = " << fmt(s.mean_speed_cm_s) << "\n";
      out << p << "steady_error_x_cm = " << fmt(s.steady_error_x_cm) << "\n";
      out << p << "steady_error_y_cm = " << fmt(s.steady_error_y_cm) << "\n";
    }
    if (s.kind == "rotate_to_rad") {
      out << p << "mean_rot_speed_deg_s = " << fmt(s.mean_rot_speed_deg_s) << "\n";
    }
  }
  if (initial_strip_length_m > 0.0) {
    out << "fold_events = " << fold_events << "\n";
    out << "initial_strip_length_m = " << fmt(initial_strip_length_m) << "\n";
    out << "final_strip_length_m = " << fmt(final_strip_length_m) << "\n";
  }
  return out.str();
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  out << kTrajectoryHeader << "\n";
  for (const TrajectoryRow& r : rows) {
    out << fmt(r.t) << ',' << fmt(r.obj_x) << ',' << fmt(r.obj_y) << ','
        << fmt(r.obj_yaw) << ',' << fmt(r.strip_len) << ',' << fmt(r.s1_roll)
        << ',' << fmt(r.s1_pitch) << ',' << fmt(r.s1_h) << ',' << fmt(r.s2_roll)
        << ',' << fmt(r.s2_pitch) << ',' << fmt(r.s2_h) << ',' << r.mode
        << "\n";
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  if (line != kTrajectoryHeader)
    throw ConfigError(path + ": unexpected trajectory header");
  std::vector<TrajectoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TrajectoryRow r;
    std::istringstream ss(line);
    std::string field;
    double* numeric[11] = {&r.t,       &r.obj_x,   &r.obj_y, &r.obj_yaw,
                           &r.strip_len, &r.s1_roll, &r.s1_pitch, &r.s1_h,
                           &r.s2_roll, &r.s2_pitch, &r.s2_h};
    for (double* slot : numeric) {
      if (!std::getline(ss, field, ',')) throw ConfigError(path + ": short row");
      *slot = std::stod(field);
    }
    std::getline(ss, r.mode);
    rows.push_back(std::move(r));
  }
  return rows;
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  RunResult result;
  Metrics& metrics = result.metrics;
  metrics.scenario = scenario.name;

  dynamics::WorldState world = scenario.world;
  const auto& geom = scenario.geometry;
  const double dt = scenario.timestep;
  const double sample_period = scenario.params.sample_period;

  perception::ObservationModel obs_model = scenario.observation;
  if (options.seed_override) obs_model.seed = *options.seed_override;
  perception::ObservationSource source(obs_model);

  control::PlannerConfig planner_config;
  planner_config.params = scenario.params;
  planner_config.geometry = geom;
  planner_config.object_extent = scenario.object_extent();
  planner_config.step_timeout = scenario.step_timeout;
  control::TaskPlanner planner(scenario.script, planner_config);

  // Joint-space servo state, initialized consistent with the flat pose.
  kinematics::SurfacePose cmd1{0.0, 0.0, scenario.params.h_init};
  kinematics::SurfacePose cmd2 = cmd1;
  kinematics::JointAngles ref1 = kinematics::inverse_kinematics(cmd1, geom);
  kinematics::JointAngles ref2 = ref1;
  kinematics::JointAngles joints1 = ref1, joints2 = ref2;
  kinematics::SurfacePose actual1 = cmd1, actual2 = cmd2;
  bool s2_kinematic = false;

  control::TaskPlanner::Output planner_out;
  StepTracker tracker;
  int last_step_index = -1;
  bool done = false;
  double next_sample = 0.0;

  double prev_strip_len = 0.0;
  if (!world.has_rigid()) {
    metrics.initial_strip_length_m = dynamics::measure_strip(world.strip()).length;
    prev_strip_len = metrics.initial_strip_length_m;
  }

  try {
    while (world.time < scenario.duration_limit + 1e-9) {
      source.record(world.time, world);

      if (world.time + 1e-9 >= next_sample) {
        next_sample += sample_period;
        if (auto obs = source.poll(world.time)) {
          const control::Observation truth =
              perception::ground_truth(world, world.time);

          planner_out = planner.update(*obs, world.time);
          cmd1 = planner_out.refs.s1;
          cmd2 = planner_out.refs.s2;
          s2_kinematic = planner_out.refs.s2_kinematic;
          ref1 = kinematics::inverse_kinematics(cmd1, geom);
          ref2 = kinematics::inverse_kinematics(cmd2, geom);

          if (planner_out.step_index != last_step_index) {
            if (tracker.index >= 0)
              metrics.steps.push_back(tracker.finish(world.time, truth));
            last_step_index = planner_out.step_index;
            if (planner_out.step_index <
                static_cast<int>(planner.script().size()))
              tracker.begin(planner.script()[planner_out.step_index],
                            planner_out.step_index, world.time, truth);
            else
              tracker.index = -1;
          }
          if (tracker.index >= 0) {
            if (planner_out.refs.converged && tracker.converged_t < 0.0)
              tracker.converged_t = world.time;
            if (!planner_out.refs.converged) tracker.converged_t = -1.0;
            tracker.tail.emplace_back(world.time, truth.position);
            while (!tracker.tail.empty() &&
                   tracker.tail.front().first < world.time - 1.5)
              tracker.tail.erase(tracker.tail.begin());
          }

          TrajectoryRow row;
          row.t = world.time;
          row.obj_x = truth.position.x();
          row.obj_y = truth.position.y();
          row.obj_yaw = truth.yaw;
          row.strip_len = truth.strip_length.value_or(0.0);
          row.s1_roll = actual1.roll;
          row.s1_pitch = actual1.pitch;
          row.s1_h = actual1.height;
          row.s2_roll = actual2.roll;
          row.s2_pitch = actual2.pitch;
          row.s2_h = actual2.height;
          row.mode = control::mode_name(planner_out.mode);
          result.trajectory.push_back(std::move(row));

          if (truth.strip_length) {
            const double len = *truth.strip_length;
            if (prev_strip_len > 0.0 && len < 0.85 * prev_strip_len)
              metrics.fold_events += 1;
            // Track the plateau value rather than transient dips.
            prev_strip_len = len;
            metrics.final_strip_length_m = len;
          }

          if (planner_out.done) {
            done = true;
            break;
          }
        }
      }

      joints1 = control::joint_servo(ref1, joints1, dt, geom.max_joint_rate);
      actual1 = kinematics::forward_kinematics(joints1, geom, actual1);
      if (s2_kinematic) {
        actual2 = cmd2;
        joints2 = kinematics::inverse_kinematics(cmd2, geom);
      } else {
        joints2 = control::joint_servo(ref2, joints2, dt, geom.max_joint_rate);
        actual2 = kinematics::forward_kinematics(joints2, geom, actual2);
      }
      world.surface1.set_pose(actual1, dt);
      world.surface2.set_pose(actual2, dt);

      dynamics::step(world, dt);
      if (!world.object_supported)
        throw SimulationError("object left the supported workspace");
    }
  } catch (const SimulationError& err) {
    metrics.error = err.what();
    done = false;
  }

  if (tracker.index >= 0 && done) {
    // Final step finished exactly at the end; already captured via advance.
  }
  metrics.duration_s = world.time;
  metrics.success = done;
  result.exit_code = done ? 0 : 1;

  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    const fs::path base = fs::path(options.out_dir) /
                          fs::path(scenario.name).stem();
    write_trajectory_csv(base.string() + ".trajectory.csv", result.trajectory);
    std::ofstream report(base.string() + ".metrics.txt", std::ios::binary);
    report << metrics.report();
  }
  return result;
}

std::vector<SweepAxis> parse_sweep_file(const std::string& path) {
  const KvFile kv = parse_kv_file(path);
  std::vector<SweepAxis> axes;
  for (const KvEntry& e : kv.entries) {
    if (e.section != "sweep")
      throw ConfigError(kv.name + ":" + std::to_string(e.line) +
                        ": sweep files use only the [sweep] section");
    const auto dot = e.key.find('.');
    if (dot == std::string::npos)
      throw ConfigError(kv.name + ":" + std::to_string(e.line) +
                        ": sweep keys look like section.key");
    SweepAxis axis;
    axis.section = e.key.substr(0, dot);
    axis.key = e.key.substr(dot + 1);
    std::istringstream in(e.value);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto t = item.find_last_not_of(" \t");
      if (b == std::string::npos) continue;
      axis.values.push_back(item.substr(b, t - b + 1));
    }
    if (axis.values.empty())
      throw ConfigError(kv.name + ":" + std::to_string(e.line) +
                        ": sweep axis has no values");
    axes.push_back(std::move(axis));
  }
  return axes;
}

SweepResult sweep(const KvFile& base_scenario, const std::vector<SweepAxis>& grid,
                  const RunOptions& options) {
  SweepResult result;
  if (grid.empty()) return result;

  std::vector<size_t> idx(grid.size(), 0);
  int point_number = 0;
  while (true) {
    KvFile kv = base_scenario;
    SweepPoint point;
    for (size_t a = 0; a < grid.size(); ++a) {
      kv.set(grid[a].section, grid[a].key, grid[a].values[idx[a]]);
      point.overrides.emplace_back(grid[a].section + "." + grid[a].key,
                                   grid[a].values[idx[a]]);
    }
    kv.name = base_scenario.name + "#" + std::to_string(point_number);
    Scenario scenario = build_scenario(kv);
    scenario.name = kv.name;

    RunOptions point_options = options;
    if (!options.out_dir.empty())
      point_options.out_dir =
          (std::filesystem::path(options.out_dir) /
           ("point" + std::to_string(point_number)))
              .string();
    point.metrics = run_scenario(scenario, point_options).metrics;
    result.points.push_back(std::move(point));
    point_number += 1;

    size_t a = 0;
    for (; a < grid.size(); ++a) {
      idx[a] += 1;
      if (idx[a] < grid[a].values.size()) break;
      idx[a] = 0;
    }
    if (a == grid.size()) break;
  }
  return result;
}

std::string SweepResult::report() const {
  std::ostringstream out;
  out << "points = " << points.size() << "\n";
  int successes = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    const SweepPoint& p = points[i];
    out << "point" << i << ".overrides =";
    for (const auto& [k, v] : p.overrides) out << " " << k << "=" << v;
    out << "\n";
    out << "point" << i << ".success = " << (p.metrics.success ? 1 : 0) << "\n";
    out << "point" << i << ".duration_s = " << fmt(p.metrics.duration_s) << "\n";
    successes += p.metrics.success ? 1 : 0;
  }
  if (!points.empty()) {
    out << "success_rate = "
        << fmt(static_cast<double>(successes) / points.size()) << "\n";
  }
  return out.str();
}

}  // namespace surfman::harness
