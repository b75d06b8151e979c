#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace ccm {

enum class Arm : int { control = 0, arm1 = 1, arm2 = 2 };

const char* to_string(Arm arm);

// One experimental unit: two mutually exclusive treatment indicators, a
// mediator measurement, and an outcome measurement.
struct ObservationRow {
  int t1 = 0;
  int t2 = 0;
  double m = 0.0;
  double y = 0.0;

  Arm arm() const { return t1 ? Arm::arm1 : (t2 ? Arm::arm2 : Arm::control); }
};

// Maps the four variable roles onto column labels in the source file.
struct ColumnMap {
  std::string t1 = "t1";
  std::string t2 = "t2";
  std::string m = "m";
  std::string y = "y";
};

struct Dataset {
  std::vector<ObservationRow> rows;
  ColumnMap column_names;

  int n() const { return static_cast<int>(rows.size()); }
};

// Per-arm moments. Variances are sample variances (divisor n_arm - 1), zero
// for arms with fewer than two rows.
struct ArmSummary {
  Arm arm = Arm::control;
  int n_arm = 0;
  double mean_m = 0.0;
  double mean_y = 0.0;
  double var_m = 0.0;
  double var_y = 0.0;
};

struct ValidationReport {
  std::array<int, 3> arm_sizes{0, 0, 0};
  std::vector<std::string> flags;
};

// Parses delimited text with a header row. Indicator cells must be literal
// 0/1; mediator and outcome cells must parse as finite numbers. Rows with
// missing fields are rejected, never silently dropped, and t1 = t2 = 1 is an
// exclusivity violation. Throws SchemaError / ParseError.
Dataset load_dataset(std::istream& source, const ColumnMap& schema, char delimiter = ',');
Dataset load_dataset_file(const std::string& path, const ColumnMap& schema,
                          char delimiter = ',');

// Inverse of load_dataset: full-precision round-trip serialization.
void save_dataset(std::ostream& out, const Dataset& d, char delimiter = ',');

// Report-only structural checks: arm sizes, underpopulated arms, degenerate
// mediator/outcome variation. Hard violations were already caught at load.
ValidationReport validate(const Dataset& d);

// Per-arm summaries in order {control, arm1, arm2}.
std::array<ArmSummary, 3> arm_partition(const Dataset& d);

// Row indices of each arm, same order as arm_partition.
std::array<std::vector<int>, 3> arm_indices(const Dataset& d);

}  // namespace ccm
