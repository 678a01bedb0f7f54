#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surfman/errors.hpp"

namespace surfman::scaling {

// Exact rational, kept reduced. Mobility requirements divide evenly for every
// platform in the bundled table, but the arithmetic stays exact regardless.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  bool is_integer() const { return den == 1; }
  double value() const { return static_cast<double>(num) / den; }
  std::string str() const;
  friend bool operator==(const Rational&, const Rational&) = default;
};

enum class ObjectSizeRelation { Smaller, Larger };

// One platform row: single-unit DoF, surface size and minimum manipulation
// workspace in integer multiples of d^2, supported manipulation modes.
struct PlatformSpec {
  std::string name;
  int dof_su = 1;
  int ss_su = 1;           // units of d^2
  int mw_min = 1;          // units of d^2
  bool translation = false;
  bool rotation = false;
  bool flipping = false;
  ObjectSizeRelation object_size = ObjectSizeRelation::Smaller;
  std::string object_size_text;    // as printed, e.g. ">2dx2d"
  std::string workspace_text;      // as printed, e.g. "3dx3d"
  std::optional<std::int64_t> published_mr;  // printed final column
  std::string note;  // flags known internal inconsistencies in the source row

  void validate() const;  // throws ConfigError
};

// Minimum mobility requirement: DoF_SU * MW_min / SS_SU, exact.
Rational mobility_requirement(const PlatformSpec& spec);

struct ComparisonRow {
  PlatformSpec spec;
  Rational computed_mr;
  bool matches_published = false;  // false also when no published value
  bool flagged = false;            // row carries an inconsistency note
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  int matches = 0;
  int mismatches = 0;
  std::string str() const;  // printable table
};

// Recompute MR for every row and compare against the published column.
ComparisonReport reproduce_table(const std::vector<PlatformSpec>& database);

// The bundled platform database (14 rows). Parse errors in a user-supplied
// file surface as ConfigError.
std::vector<PlatformSpec> builtin_platforms();
std::vector<PlatformSpec> load_platforms_json(const std::string& json_text);

}  // namespace surfman::scaling
