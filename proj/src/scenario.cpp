#include "surfman/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace surfman::harness {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const KvFile& kv, int line, const std::string& what) {
  std::ostringstream msg;
  msg << kv.name << ":" << line << ": " << what;
  throw ConfigError(msg.str());
}

[[noreturn]] void fail(const KvEntry& e, const std::string& kvname,
                       const std::string& what) {
  std::ostringstream msg;
  msg << kvname << ":" << e.line << ": [" << e.section << "] " << e.key << ": "
      << what;
  throw ConfigError(msg.str());
}

class Reader {
public:
  explicit Reader(const KvFile& kv) : kv_(kv) {}

  double number(const std::string& section, const std::string& key,
                double fallback) {
    const KvEntry* e = kv_.find(section, key);
    if (e == nullptr) return fallback;
    mark(e);
    return parse_number(*e);
  }

  std::uint64_t integer(const std::string& section, const std::string& key,
                        std::uint64_t fallback) {
    const KvEntry* e = kv_.find(section, key);
    if (e == nullptr) return fallback;
    mark(e);
    try {
      size_t used = 0;
      const std::uint64_t v = std::stoull(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      fail(*e, kv_.name, "expected an integer, got '" + e->value + "'");
    }
  }

  std::string text(const std::string& section, const std::string& key,
                   const std::string& fallback) {
    const KvEntry* e = kv_.find(section, key);
    if (e == nullptr) return fallback;
    mark(e);
    return e->value;
  }

  double parse_number(const KvEntry& e) {
    try {
      size_t used = 0;
      const double v = std::stod(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      fail(e, kv_.name, "expected a number, got '" + e.value + "'");
    }
  }

  void mark(const KvEntry* e) { used_.insert(e); }

  void reject_unknown() const {
    for (const KvEntry& e : kv_.entries) {
      if (e.section == "script" && e.key == "step") continue;
      if (e.section == "geometry" && e.key == "tilt_envelope") continue;
      if (used_.count(&e) == 0)
        fail(e, kv_.name, "unknown key");
    }
  }

private:
  const KvFile& kv_;
  std::set<const KvEntry*> used_;
};

std::vector<control::ScriptStep> parse_script(const KvFile& kv) {
  std::vector<control::ScriptStep> script;
  for (const KvEntry& e : kv.entries) {
    if (e.section != "script") continue;
    if (e.key != "step") fail(e, kv.name, "unknown key (expected 'step')");
    std::istringstream in(e.value);
    std::string verb;
    in >> verb;
    control::ScriptStep step;
    if (verb == "translate_to_m") {
      step.kind = control::ScriptStep::Kind::TranslateTo;
      double x = 0.0, y = 0.0;
      if (!(in >> x >> y)) fail(e, kv.name, "translate_to_m needs x y");
      step.target = {x, y};
    } else if (verb == "rotate_to_rad" || verb == "rotate_to_deg") {
      step.kind = control::ScriptStep::Kind::RotateTo;
      double v = 0.0;
      if (!(in >> v)) fail(e, kv.name, verb + " needs an angle");
      step.target_yaw = verb == "rotate_to_deg" ? v * M_PI / 180.0 : v;
    } else if (verb == "flip") {
      step.kind = control::ScriptStep::Kind::Flip;
    } else if (verb == "fold") {
      step.kind = control::ScriptStep::Kind::Fold;
    } else {
      fail(e, kv.name, "unknown script step '" + verb + "'");
    }
    std::string extra;
    if (in >> extra) fail(e, kv.name, "trailing text '" + extra + "'");
    script.push_back(step);
  }
  return script;
}

std::vector<std::pair<double, double>> parse_envelope(const KvFile& kv,
                                                      const KvEntry& e) {
  // "0.06:25, 0.09:20, 0.16:8" as height_m : max_tilt_deg pairs.
  std::vector<std::pair<double, double>> knots;
  std::istringstream in(e.value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto sep = item.find(':');
    if (sep == std::string::npos)
      fail(e, kv.name, "envelope knot '" + item + "' must be height_m:deg");
    try {
      const double h = std::stod(item.substr(0, sep));
      const double deg = std::stod(item.substr(sep + 1));
      knots.emplace_back(h, deg * M_PI / 180.0);
    } catch (const std::exception&) {
      fail(e, kv.name, "bad envelope knot '" + item + "'");
    }
  }
  if (knots.size() < 2) fail(e, kv.name, "need at least 2 envelope knots");
  return knots;
}

}  // namespace

const KvEntry* KvFile::find(const std::string& section,
                            const std::string& key) const {
  const KvEntry* found = nullptr;
  for (const KvEntry& e : entries)
    if (e.section == section && e.key == key) found = &e;  // last wins
  return found;
}

void KvFile::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  for (KvEntry& e : entries) {
    if (e.section == section && e.key == key) {
      e.value = value;
      return;
    }
  }
  entries.push_back(KvEntry{section, key, value, 0});
}

KvFile parse_kv_text(const std::string& text, const std::string& name) {
  KvFile kv;
  kv.name = name;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno += 1;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(kv, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(kv, lineno, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(kv, lineno, "expected 'key = value', got '" + line + "'");
    KvEntry entry;
    entry.section = section;
    entry.key = trim(line.substr(0, eq));
    entry.value = trim(line.substr(eq + 1));
    entry.line = lineno;
    if (entry.key.empty()) fail(kv, lineno, "empty key");
    if (section.empty()) fail(kv, lineno, "key outside any [section]");
    kv.entries.push_back(std::move(entry));
  }
  return kv;
}

KvFile parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_kv_text(buffer.str(), path);
}

double Scenario::object_extent() const {
  if (world.has_rigid()) {
    const auto& obj = world.rigid();
    const double c = std::abs(std::cos(obj.yaw)), s = std::abs(std::sin(obj.yaw));
    return obj.length * c + obj.width * s;
  }
  return world.strip().total_length();
}

Scenario build_scenario(const KvFile& kv) {
  Scenario sc;
  sc.name = kv.name;
  Reader read(kv);

  sc.timestep = read.number("run", "timestep_s", 1e-3);
  sc.duration_limit = read.number("run", "duration_limit_s", 60.0);
  sc.step_timeout = read.number("run", "step_timeout_s", 120.0);
  sc.seed = read.integer("run", "seed", 1);
  if (!(sc.timestep > 0.0) || sc.timestep > 2e-3)
    throw ConfigError(kv.name + ": [run] timestep_s must be in (0, 0.002]");

  auto& geom = sc.geometry;
  geom.surface_edge = read.number("geometry", "surface_edge_m", geom.surface_edge);
  geom.base_radius = read.number("geometry", "base_radius_m", geom.base_radius);
  geom.platform_radius =
      read.number("geometry", "platform_radius_m", geom.platform_radius);
  geom.upper_link = read.number("geometry", "upper_link_m", geom.upper_link);
  geom.lower_link = read.number("geometry", "lower_link_m", geom.lower_link);
  geom.h_min = read.number("geometry", "h_min_m", geom.h_min);
  geom.h_max = read.number("geometry", "h_max_m", geom.h_max);
  geom.joint_min = read.number("geometry", "joint_min_rad", geom.joint_min);
  geom.joint_max = read.number("geometry", "joint_max_rad", geom.joint_max);
  geom.max_joint_rate =
      read.number("geometry", "max_joint_rate_rad_s", geom.max_joint_rate);
  if (const KvEntry* e = kv.find("geometry", "tilt_envelope"))
    geom.tilt_knots = parse_envelope(kv, *e);
  geom.validate();

  auto& p = sc.params;
  p.eps_pos = read.number("controller", "eps_pos_m", p.eps_pos);
  p.eps_yaw = read.number("controller", "eps_yaw_rad", p.eps_yaw);
  p.theta_beta = read.number("controller", "theta_beta_rad", p.theta_beta);
  p.theta_gamma = read.number("controller", "theta_gamma_rad", p.theta_gamma);
  p.osc_amplitude = read.number("controller", "osc_amplitude_m", p.osc_amplitude);
  p.osc_omega = read.number("controller", "osc_omega_rad_s", p.osc_omega);
  p.h_init = read.number("controller", "h_init_m", p.h_init);
  p.h_low = read.number("controller", "h_low_m", p.h_low);
  p.h_high = read.number("controller", "h_high_m", p.h_high);
  p.settle_s = read.number("controller", "settle_s", p.settle_s);
  p.preflip_s = read.number("controller", "preflip_s", p.preflip_s);
  p.rise_s = read.number("controller", "rise_s", p.rise_s);
  p.postflip_s = read.number("controller", "postflip_s", p.postflip_s);
  p.travel_s = read.number("controller", "travel_s", p.travel_s);
  p.roll_ramp_s = read.number("controller", "roll_ramp_s", p.roll_ramp_s);
  p.rise_velocity = read.number("controller", "rise_velocity_m_s", p.rise_velocity);
  p.flip_overhang = read.number("controller", "flip_overhang_m", p.flip_overhang);
  const double rate = read.number("controller", "sample_rate_hz",
                                  1.0 / p.sample_period);
  if (rate <= 0.0) throw ConfigError(kv.name + ": [controller] sample_rate_hz must be > 0");
  p.sample_period = 1.0 / rate;
  p.roll_sign = read.number("controller", "roll_sign", p.roll_sign);
  p.pitch_sign = read.number("controller", "pitch_sign", p.pitch_sign);
  p.translation.kp = read.number("controller", "kp_tilt", p.translation.kp);
  p.translation.ki = read.number("controller", "ki_tilt", p.translation.ki);
  p.translation.kd = read.number("controller", "kd_tilt", p.translation.kd);
  p.translation.integrator_clamp = read.number(
      "controller", "tilt_integrator_clamp", p.translation.integrator_clamp);
  p.translation.output_clamp = read.number("controller", "tilt_output_clamp_rad",
                                           p.translation.output_clamp);
  p.rotation.kp = read.number("controller", "kp_yaw", p.rotation.kp);
  p.rotation.ki = read.number("controller", "ki_yaw", p.rotation.ki);
  p.rotation.kd = read.number("controller", "kd_yaw", p.rotation.kd);
  p.rotation.integrator_clamp = read.number(
      "controller", "yaw_integrator_clamp", p.rotation.integrator_clamp);
  p.rotation.output_clamp = read.number("controller", "yaw_output_clamp_rad",
                                        p.rotation.output_clamp);
  p.validate(geom);

  auto& model = sc.observation;
  model.rate_hz = read.number("observation", "rate_hz", model.rate_hz);
  model.pos_noise = read.number("observation", "pos_noise_m", model.pos_noise);
  model.yaw_noise = read.number("observation", "yaw_noise_rad", model.yaw_noise);
  model.latency = read.number("observation", "latency_s", model.latency);
  model.seed = sc.seed;
  model.validate();

  // World: surfaces flat at h_init, object placed on the support plane.
  sc.world = dynamics::WorldState::make_default();
  sc.world.dt = sc.timestep;
  const double half = 0.5 * geom.surface_edge;
  sc.world.surface1.center = {half, 0.0};
  sc.world.surface2.center = {-half, 0.0};
  sc.world.surface1.half_edge = sc.world.surface2.half_edge = half;
  sc.world.surface1.reset_motion({0.0, 0.0, p.h_init});
  sc.world.surface2.reset_motion({0.0, 0.0, p.h_init});

  const std::string type = read.text("object", "type", "rigid");
  const double start_x = read.number("object", "start_x_m", half);
  const double start_y = read.number("object", "start_y_m", 0.0);
  if (type == "rigid") {
    dynamics::RigidObject obj;
    obj.length = read.number("object", "length_m", obj.length);
    obj.width = read.number("object", "width_m", obj.width);
    obj.thickness = read.number("object", "thickness_m", obj.thickness);
    obj.mass = read.number("object", "mass_kg", obj.mass);
    obj.mu = read.number("object", "friction", obj.mu);
    obj.gravity = read.number("object", "gravity_m_s2", obj.gravity);
    const double j = read.number("object", "edge_inertia_kg_m2", -1.0);
    if (j > 0.0) {
      obj.edge_inertia = j;
      obj.homogeneous = false;
    } else {
      obj.edge_inertia =
          obj.mass * (obj.length * obj.length + obj.thickness * obj.thickness) / 3.0;
      obj.homogeneous = true;
    }
    obj.position = {start_x, start_y};
    obj.yaw = read.number("object", "start_yaw_rad", 0.0);
    obj.z = p.h_init + 0.5 * obj.thickness;
    obj.validate();
    sc.world.object = obj;
  } else if (type == "strip") {
    const double length = read.number("object", "strip_length_m", 0.15);
    const int segments =
        static_cast<int>(read.integer("object", "segments", 24));
    dynamics::DeformableStrip strip = dynamics::DeformableStrip::make_straight(
        length, segments, start_x - 0.5 * length, start_y, p.h_init);
    strip.width = read.number("object", "width_m", strip.width);
    strip.thickness = read.number("object", "thickness_m", strip.thickness);
    strip.linear_density =
        read.number("object", "linear_density_kg_m", strip.linear_density);
    strip.bending_stiffness = read.number("object", "bending_stiffness_nm_rad",
                                          strip.bending_stiffness);
    strip.joint_damping =
        read.number("object", "joint_damping_nms_rad", strip.joint_damping);
    strip.yield_angle = read.number("object", "yield_angle_rad", strip.yield_angle);
    strip.mu = read.number("object", "friction", strip.mu);
    strip.gravity = read.number("object", "gravity_m_s2", strip.gravity);
    for (auto& q : strip.pos) q.z() = p.h_init + 0.5 * strip.thickness;
    strip.validate();
    sc.world.object = strip;
  } else {
    throw ConfigError(kv.name + ": [object] type must be 'rigid' or 'strip'");
  }

  sc.script = parse_script(kv);
  read.reject_unknown();
  sc.world.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  return build_scenario(parse_kv_file(path));
}

}  // namespace surfman::harness
