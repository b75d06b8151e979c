#include "ccm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ccm/errors.hpp"

namespace ccm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delimiter)) cells.push_back(cell);
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

double parse_real(const std::string& raw, int row, const std::string& column) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || cell.empty())
    throw ParseError("row " + std::to_string(row) + ", column '" + column +
                     "': cannot parse '" + cell + "' as a number");
  if (!std::isfinite(value))
    throw ParseError("row " + std::to_string(row) + ", column '" + column +
                     "': value must be finite");
  return value;
}

int parse_indicator(const std::string& raw, int row, const std::string& column) {
  const std::string cell = trim(raw);
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  throw ParseError("row " + std::to_string(row) + ", column '" + column +
                   "': treatment indicators must be literal 0 or 1, got '" + cell + "'");
}

int find_column(const std::vector<std::string>& header, const std::string& label,
                const std::string& role) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == label) return static_cast<int>(i);
  throw SchemaError("missing column '" + label + "' for role " + role);
}

}  // namespace

const char* to_string(Arm arm) {
  switch (arm) {
    case Arm::control: return "control";
    case Arm::arm1: return "arm1";
    case Arm::arm2: return "arm2";
  }
  return "?";
}

Dataset load_dataset(std::istream& source, const ColumnMap& schema, char delimiter) {
  std::string line;
  if (!std::getline(source, line)) throw SchemaError("input is empty: no header row");
  const auto header = split(line, delimiter);

  const int it1 = find_column(header, schema.t1, "t1");
  const int it2 = find_column(header, schema.t2, "t2");
  const int im = find_column(header, schema.m, "m");
  const int iy = find_column(header, schema.y, "y");
  const int want = 1 + std::max({it1, it2, im, iy});

  Dataset d;
  d.column_names = schema;
  int row = 1;  // 1-based data row numbering in messages
  while (std::getline(source, line)) {
    if (trim(line).empty()) {
      ++row;
      continue;
    }
    const auto cells = split(line, delimiter);
    if (static_cast<int>(cells.size()) < want)
      throw ParseError("row " + std::to_string(row) + ": expected at least " +
                       std::to_string(want) + " fields, got " +
                       std::to_string(cells.size()));
    ObservationRow r;
    r.t1 = parse_indicator(cells[it1], row, schema.t1);
    r.t2 = parse_indicator(cells[it2], row, schema.t2);
    if (r.t1 == 1 && r.t2 == 1)
      throw ParseError("row " + std::to_string(row) +
                       ": treatments are mutually exclusive but t1 = t2 = 1");
    r.m = parse_real(cells[im], row, schema.m);
    r.y = parse_real(cells[iy], row, schema.y);
    d.rows.push_back(r);
    ++row;
  }
  return d;
}

Dataset load_dataset_file(const std::string& path, const ColumnMap& schema,
                          char delimiter) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open input file: " + path);
  return load_dataset(in, schema, delimiter);
}

void save_dataset(std::ostream& out, const Dataset& d, char delimiter) {
  const auto& c = d.column_names;
  out << c.t1 << delimiter << c.t2 << delimiter << c.m << delimiter << c.y << '\n';
  char buf[64];
  const auto write_real = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
  };
  for (const auto& r : d.rows) {
    out << r.t1 << delimiter << r.t2 << delimiter;
    write_real(r.m);
    out << delimiter;
    write_real(r.y);
    out << '\n';
  }
}

std::array<std::vector<int>, 3> arm_indices(const Dataset& d) {
  std::array<std::vector<int>, 3> idx;
  for (int i = 0; i < d.n(); ++i)
    idx[static_cast<int>(d.rows[i].arm())].push_back(i);
  return idx;
}

std::array<ArmSummary, 3> arm_partition(const Dataset& d) {
  std::array<ArmSummary, 3> out;
  const auto idx = arm_indices(d);
  for (int a = 0; a < 3; ++a) {
    ArmSummary& s = out[a];
    s.arm = static_cast<Arm>(a);
    s.n_arm = static_cast<int>(idx[a].size());
    if (s.n_arm == 0) continue;
    double sm = 0, sy = 0;
    for (int i : idx[a]) {
      sm += d.rows[i].m;
      sy += d.rows[i].y;
    }
    s.mean_m = sm / s.n_arm;
    s.mean_y = sy / s.n_arm;
    if (s.n_arm < 2) continue;
    double ssm = 0, ssy = 0;
    for (int i : idx[a]) {
      const double dm = d.rows[i].m - s.mean_m;
      const double dy = d.rows[i].y - s.mean_y;
      ssm += dm * dm;
      ssy += dy * dy;
    }
    s.var_m = ssm / (s.n_arm - 1);
    s.var_y = ssy / (s.n_arm - 1);
  }
  return out;
}

ValidationReport validate(const Dataset& d) {
  ValidationReport report;
  const auto arms = arm_partition(d);
  for (int a = 0; a < 3; ++a) {
    report.arm_sizes[a] = arms[a].n_arm;
    const std::string name = to_string(static_cast<Arm>(a));
    if (arms[a].n_arm < 2)
      report.flags.push_back("arm " + name + " underpopulated (" +
                             std::to_string(arms[a].n_arm) + " rows; need at least 2)");
    else if (arms[a].var_m == 0.0)
      report.flags.push_back("arm " + name +
                             " has var_m = 0 (constant mediator degrades the "
                             "within-arm slope diagnostics)");
  }
  if (d.n() >= 2) {
    const auto minmax_m = std::minmax_element(
        d.rows.begin(), d.rows.end(),
        [](const ObservationRow& a, const ObservationRow& b) { return a.m < b.m; });
    if (minmax_m.first->m == minmax_m.second->m)
      report.flags.push_back("mediator is constant across the whole sample");
    const auto minmax_y = std::minmax_element(
        d.rows.begin(), d.rows.end(),
        [](const ObservationRow& a, const ObservationRow& b) { return a.y < b.y; });
    if (minmax_y.first->y == minmax_y.second->y)
      report.flags.push_back("outcome is constant across the whole sample");
  }
  return report;
}

}  // namespace ccm
