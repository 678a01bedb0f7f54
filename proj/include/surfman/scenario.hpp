#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "surfman/control.hpp"
#include "surfman/dynamics.hpp"
#include "surfman/perception.hpp"

namespace surfman::harness {

// Flat section/key-value text format for scenarios and sweep grids. Keys
// carry explicit units in their names (target_x_m, rise_velocity_m_s, ...).
struct KvEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

struct KvFile {
  std::string name;
  std::vector<KvEntry> entries;

  const KvEntry* find(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);
};

KvFile parse_kv_text(const std::string& text, const std::string& name);
KvFile parse_kv_file(const std::string& path);

struct Scenario {
  std::string name;
  kinematics::ModuleGeometry geometry;
  control::StrategyParams params;
  perception::ObservationModel observation;
  std::vector<control::ScriptStep> script;
  dynamics::WorldState world;  // surfaces flat at h_init, object placed
  double timestep = 1e-3;
  double duration_limit = 60.0;
  double step_timeout = 120.0;
  std::uint64_t seed = 1;

  // Footprint extent along the inter-surface axis, for flip staging.
  double object_extent() const;
};

// Interpret a parsed key-value file; unknown keys and malformed values raise
// ConfigError naming the file, line, and field.
Scenario build_scenario(const KvFile& kv);
Scenario load_scenario(const std::string& path);

}  // namespace surfman::harness
