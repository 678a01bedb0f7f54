#include <doctest.h>

#include "surfman/scaling.hpp"

using namespace surfman;
using namespace surfman::scaling;

namespace {

PlatformSpec make(const std::string& name, int dof, int mw, int ss) {
  PlatformSpec spec;
  spec.name = name;
  spec.dof_su = dof;
  spec.mw_min = mw;
  spec.ss_su = ss;
  return spec;
}

}  // namespace

TEST_CASE("mobility requirement of the published rows") {
  CHECK(mobility_requirement(make("This Work", 3, 2, 1)) == Rational::make(6, 1));
  CHECK(mobility_requirement(make("WaveHandling", 1, 4, 1)) == Rational::make(4, 1));
  CHECK(mobility_requirement(make("Delta Arrays", 3, 9, 1)) == Rational::make(27, 1));
}

TEST_CASE("mobility requirement reports exact rationals") {
  const Rational r = mobility_requirement(make("q", 3, 2, 4));
  CHECK(r.num == 3);
  CHECK(r.den == 2);
  CHECK_FALSE(r.is_integer());
  CHECK(r.str() == "3/2");
  CHECK(mobility_requirement(make("q", 2, 2, 4)).is_integer());
}

TEST_CASE("homogeneity and monotonicity of the scaling law") {
  const Rational base = mobility_requirement(make("p", 3, 4, 2));
  CHECK(mobility_requirement(make("p", 3, 8, 4)) == base);
  CHECK(mobility_requirement(make("p", 3, 12, 6)) == base);
  for (int dof = 1; dof < 6; ++dof) {
    CHECK(mobility_requirement(make("p", dof + 1, 4, 2)).value() >
          mobility_requirement(make("p", dof, 4, 2)).value());
  }
  for (int mw = 1; mw < 6; ++mw) {
    CHECK(mobility_requirement(make("p", 3, mw + 1, 2)).value() >
          mobility_requirement(make("p", 3, mw, 2)).value());
  }
}

TEST_CASE("bundled database reproduces the published table") {
  const auto db = builtin_platforms();
  REQUIRE(db.size() == 14);
  const ComparisonReport report = reproduce_table(db);
  CHECK(report.matches == 14);
  CHECK(report.mismatches == 0);
  for (const auto& row : report.rows) CHECK(row.matches_published);

  // The internally inconsistent row is reproduced as printed but flagged.
  bool saw_flag = false;
  for (const auto& row : report.rows) {
    if (row.spec.name == "Omnia Wheel") {
      saw_flag = row.flagged;
      CHECK(row.computed_mr == Rational::make(9, 1));
    } else {
      CHECK_FALSE(row.flagged);
    }
  }
  CHECK(saw_flag);
  CHECK(report.str().find("[flagged]") != std::string::npos);
}

TEST_CASE("empty database yields an empty report") {
  const ComparisonReport report = reproduce_table({});
  CHECK(report.rows.empty());
  CHECK(report.matches == 0);
}

TEST_CASE("perturbed entries are flagged as mismatches") {
  auto db = builtin_platforms();
  db[3].dof_su += 1;  // corrupt one row
  const ComparisonReport report = reproduce_table(db);
  CHECK(report.mismatches == 1);
  CHECK(report.matches == 13);
}

TEST_CASE("database json validation") {
  CHECK_THROWS_AS(load_platforms_json("not json"), ConfigError);
  CHECK_THROWS_AS(load_platforms_json("{}"), ConfigError);
  CHECK_THROWS_AS(
      load_platforms_json(R"({"platforms": [{"name": "x"}]})"), ConfigError);
  CHECK_THROWS_AS(load_platforms_json(R"({"platforms": [
    {"name": "x", "dof_su": 0, "ss_su": 1, "mw_min": 1, "modes": []}]})"),
                  ConfigError);
}
