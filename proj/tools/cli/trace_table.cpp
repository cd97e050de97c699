#include "trace_table.hpp"

#include "config.hpp"

#include "cbfsafe/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace cbfsafe::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kCellsPerVehicle = 9;

bool same(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || std::memcmp(&a, &b, sizeof a) == 0;
}

bool same(const VehicleCells& a, const VehicleCells& b) {
  return same(a.x, b.x) && same(a.v, b.v) && same(a.u, b.u) && same(a.delta, b.delta) &&
         same(a.a, b.a) && same(a.b, b.b) && same(a.b_f, b.b_f) && same(a.psi1, b.psi1) &&
         a.status == b.status;
}

std::string cell(double v) { return std::isnan(v) ? "nan" : format_double(v); }

double parse_cell(const std::string& text, std::size_t line) {
  if (text == "nan") return kNaN;
  return parse_double(text, "csv line " + std::to_string(line));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void add_flag(std::string& flags, const std::string& label, const char* what) {
  if (!flags.empty()) flags += '|';
  flags += label + ":" + what;
}

}  // namespace

bool TraceTable::operator==(const TraceTable& o) const {
  if (rows.size() != o.rows.size() || columns.size() != o.columns.size()) return false;
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j].label != o.columns[j].label ||
        columns[j].position_name != o.columns[j].position_name)
      return false;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const TraceRow& a = rows[k];
    const TraceRow& b = o.rows[k];
    if (!same(a.t, b.t) || a.flags != b.flags || a.vehicles.size() != b.vehicles.size())
      return false;
    for (std::size_t j = 0; j < a.vehicles.size(); ++j)
      if (!same(a.vehicles[j], b.vehicles[j])) return false;
  }
  return true;
}

TraceTable tabulate(const scenarios::Scenario& scenario, const sim::SimTrace& trace) {
  TraceTable table;
  for (const auto& view : scenario.vehicles) table.columns.push_back({view.label, view.position_name});

  for (const sim::Sample& s : trace.samples) {
    TraceRow row;
    row.t = s.t;
    for (const auto& view : scenario.vehicles) {
      VehicleCells c;
      c.x = s.state(view.position_index);
      c.v = s.state(view.velocity_index);
      c.delta = c.a = c.b = c.b_f = c.psi1 = kNaN;
      if (view.agent < 0) {
        c.u = view.open_loop_input ? view.open_loop_input(s.t, s.state) : kNaN;
        c.status = kOpenLoop;
      } else {
        const sim::AgentSample& as = s.agents[view.agent];
        if (!as.evaluated) {
          c.u = kNaN;
          c.status = kNotEvaluated;
        } else {
          c.u = as.u.size() > 0 ? as.u(0) : kNaN;
          c.delta = as.delta;
          c.a = as.a;
          c.b = as.psi.empty() ? kNaN : as.psi[0];
          c.psi1 = as.psi.size() > 1 ? as.psi[1] : kNaN;
          c.b_f = as.b_f;
          c.status = std::string(qp::to_string(as.status));
          if (as.bounds_dropped) add_flag(row.flags, view.label, "bounds-dropped");
          if (as.clamped) add_flag(row.flags, view.label, "clamped");
          if (!as.assumption1_ok) add_flag(row.flags, view.label, "sign-change");
          else if (as.assumption1_zero) add_flag(row.flags, view.label, "sign-zero");
        }
      }
      row.vehicles.push_back(std::move(c));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<std::string> csv_header(const std::vector<VehicleColumn>& columns) {
  std::vector<std::string> h{"t"};
  for (const auto& c : columns) {
    const std::string& j = c.label;
    for (const std::string& name : {c.position_name, std::string("v"), std::string("u"),
                                    std::string("delta"), std::string("a"), std::string("b"),
                                    std::string("bF"), std::string("psi1"),
                                    std::string("qp_status")})
      h.push_back(name + "_" + j);
  }
  h.push_back("flags");
  return h;
}

void write_csv(std::ostream& out, const TraceTable& table) {
  const auto header = csv_header(table.columns);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const TraceRow& r : table.rows) {
    out << cell(r.t);
    for (const VehicleCells& c : r.vehicles) {
      out << ',' << cell(c.x) << ',' << cell(c.v) << ',' << cell(c.u) << ',' << cell(c.delta)
          << ',' << cell(c.a) << ',' << cell(c.b) << ',' << cell(c.b_f) << ',' << cell(c.psi1)
          << ',' << c.status;
    }
    out << ',' << r.flags << "\n";
  }
}

TraceTable read_csv(std::istream& in) {
  TraceTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty input");
  const auto header = split(line);
  if (header.size() < 2 || header.front() != "t" || header.back() != "flags" ||
      (header.size() - 2) % kCellsPerVehicle != 0)
    throw ConfigError("csv: unexpected header");
  const std::size_t nv = (header.size() - 2) / kCellsPerVehicle;
  for (std::size_t j = 0; j < nv; ++j) {
    const std::string& first = header[1 + j * kCellsPerVehicle];
    const auto us = first.find('_');
    if (us == std::string::npos) throw ConfigError("csv: bad column '" + first + "'");
    table.columns.push_back({first.substr(us + 1), first.substr(0, us)});
  }
  if (csv_header(table.columns) != header) throw ConfigError("csv: unexpected header");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size())
      throw ConfigError("csv line " + std::to_string(line_no) + ": wrong field count");
    TraceRow r;
    r.t = parse_cell(f[0], line_no);
    for (std::size_t j = 0; j < nv; ++j) {
      const std::size_t o = 1 + j * kCellsPerVehicle;
      VehicleCells c;
      c.x = parse_cell(f[o], line_no);
      c.v = parse_cell(f[o + 1], line_no);
      c.u = parse_cell(f[o + 2], line_no);
      c.delta = parse_cell(f[o + 3], line_no);
      c.a = parse_cell(f[o + 4], line_no);
      c.b = parse_cell(f[o + 5], line_no);
      c.b_f = parse_cell(f[o + 6], line_no);
      c.psi1 = parse_cell(f[o + 7], line_no);
      c.status = f[o + 8];
      r.vehicles.push_back(std::move(c));
    }
    r.flags = f.back();
    table.rows.push_back(std::move(r));
  }
  return table;
}

bool write_csv_file(const std::string& path, const TraceTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  write_csv(out, table);
  out.flush();
  return static_cast<bool>(out);
}

TraceTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace cbfsafe::cli
