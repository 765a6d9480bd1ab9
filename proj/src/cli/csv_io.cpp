#include "ensx/cli/csv_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "ensx/cli/number_format.hpp"

namespace ensx::cli {

CsvError::CsvError(const std::string& file, std::size_t line, const std::string& message)
    : InputError(file + ": row " + std::to_string(line) + ": " + message), file_(file), line_(line) {}

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += fields[i];
  }
  return s;
}

void check_id(const CsvTable& t, std::size_t row, std::size_t col) {
  if (t.rows[row][col].empty()) throw CsvError(t.source, t.lines[row], "empty " + t.header[col]);
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw CsvError(source, 1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  double v = 0.0;
  if (!parse_number(rows[row][col], v))
    throw CsvError(source, lines[row], "bad number '" + rows[row][col] + "' in column " + header[col]);
  return v;
}

long long CsvTable::integer(std::size_t row, std::size_t col) const {
  long long v = 0;
  if (!parse_integer(rows[row][col], v))
    throw CsvError(source, lines[row], "bad integer '" + rows[row][col] + "' in column " + header[col]);
  return v;
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (n == 1) {
      if (line.empty()) throw CsvError(source, 1, "empty header");
      t.header = split(line);
      continue;
    }
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != t.header.size()) {
      throw CsvError(source, n, "expected " + std::to_string(t.header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(n);
  }
  if (n == 0) throw CsvError(source, 1, "empty file (no header)");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError(path.string(), 0, "cannot open file");
  CsvTable t = parse_csv(in, path.string());
  if (!expected.empty() && t.header != expected)
    throw CsvError(t.source, 1, "header '" + join(t.header) + "', expected '" + join(expected) + "'");
  if (t.rows.empty()) throw CsvError(t.source, 2, "no data rows");
  return t;
}

void write_row(std::ostream& out, std::initializer_list<std::string> fields) {
  write_row(out, std::vector<std::string>(fields));
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) { out << join(fields) << '\n'; }

std::vector<DailySeries> read_daily_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"cell_id", "member_id", "date", "value"});
  struct Row {
    Date date;
    double value;
    std::size_t line;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Row>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_id(t, r, 0);
    check_id(t, r, 1);
    Date d;
    try {
      d = parse_date(t.rows[r][2]);
    } catch (const InputError& e) {
      throw CsvError(t.source, t.lines[r], e.what());
    }
    const double v = t.number(r, 3);
    if (v < 0.0) throw CsvError(t.source, t.lines[r], "negative precipitation " + t.rows[r][3]);
    groups[{t.rows[r][0], t.rows[r][1]}].push_back({d, v, t.lines[r]});
  }
  std::vector<DailySeries> out;
  for (auto& [key, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
    DailySeries s{key.first, key.second, {}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].date == rows[i - 1].date)
        throw CsvError(t.source, rows[i].line, "duplicate date " + format_date(rows[i].date) + " for " + key.first +
                                                   "/" + key.second);
      s.dates.push_back(rows[i].date);
      s.values.push_back(rows[i].value);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_daily_csv(std::ostream& out, std::span<const DailySeries> series) {
  std::vector<const DailySeries*> order;
  for (const auto& s : series) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const DailySeries* a, const DailySeries* b) {
    return std::tie(a->cell_id, a->member_id) < std::tie(b->cell_id, b->member_id);
  });
  out << "cell_id,member_id,date,value\n";
  for (const DailySeries* s : order)
    for (std::size_t i = 0; i < s->size(); ++i)
      out << s->cell_id << ',' << s->member_id << ',' << format_date(s->dates[i]) << ','
          << format_number(s->values[i]) << '\n';
}

std::vector<GridCell> read_grid_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"cell_id", "lat", "lon"});
  std::vector<GridCell> cells;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_id(t, r, 0);
    if (!seen.insert(t.rows[r][0]).second) throw CsvError(t.source, t.lines[r], "duplicate cell " + t.rows[r][0]);
    const double lat = t.number(r, 1);
    const double lon = t.number(r, 2);
    if (lat < -90.0 || lat > 90.0) throw CsvError(t.source, t.lines[r], "latitude outside [-90, 90]");
    cells.push_back({t.rows[r][0], lat, lon});
  }
  std::sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) { return a.cell_id < b.cell_id; });
  return cells;
}

void write_grid_csv(std::ostream& out, std::span<const GridCell> cells) {
  std::vector<GridCell> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end(), [](const GridCell& a, const GridCell& b) { return a.cell_id < b.cell_id; });
  out << "cell_id,lat,lon\n";
  for (const auto& c : sorted) write_row(out, {c.cell_id, format_number(c.lat), format_number(c.lon)});
}

RegionMask read_mask_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"cell_id", "region"});
  RegionMask mask;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_id(t, r, 0);
    check_id(t, r, 1);
    if (t.rows[r][1] == kConusRegion)
      throw CsvError(t.source, t.lines[r], std::string(kConusRegion) + " is the implicit union, not a region label");
    if (!mask.emplace(t.rows[r][0], t.rows[r][1]).second)
      throw CsvError(t.source, t.lines[r], "cell " + t.rows[r][0] + " mapped twice");
  }
  return mask;
}

void write_mask_csv(std::ostream& out, const RegionMask& mask) {
  out << "cell_id,region\n";
  for (const auto& [cell, region] : mask) write_row(out, {cell, region});
}

std::vector<BlockMaximaSeries> read_maxima_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"cell_id", "member_id", "duration_days", "year", "maximum"});
  std::map<std::tuple<std::string, long long, std::string>, std::map<int, std::pair<double, std::size_t>>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_id(t, r, 0);
    check_id(t, r, 1);
    const long long d = t.integer(r, 2);
    if (d < 1) throw CsvError(t.source, t.lines[r], "duration_days must be >= 1");
    const long long y = t.integer(r, 3);
    const double m = t.number(r, 4);
    if (m < 0.0) throw CsvError(t.source, t.lines[r], "negative maximum");
    auto& years = groups[{t.rows[r][0], d, t.rows[r][1]}];
    if (!years.emplace(static_cast<int>(y), std::pair{m, t.lines[r]}).second)
      throw CsvError(t.source, t.lines[r], "duplicate year " + std::to_string(y) + " for " + t.rows[r][0] + "/" +
                                               t.rows[r][1]);
  }
  std::vector<BlockMaximaSeries> out;
  for (const auto& [key, years] : groups) {
    BlockMaximaSeries s{std::get<0>(key), static_cast<int>(std::get<1>(key)), {}};
    for (const auto& [y, v] : years) s.entries.push_back({std::get<2>(key), y, v.first});
    out.push_back(std::move(s));
  }
  return out;
}

void write_maxima_csv(std::ostream& out, std::span<const BlockMaximaSeries> series) {
  std::vector<std::tuple<std::string, int, std::string, int, double>> rows;
  for (const auto& s : series)
    for (const auto& e : s.entries) rows.emplace_back(s.cell_id, s.duration_days, e.member_id, e.year, e.maximum);
  std::sort(rows.begin(), rows.end());
  out << "cell_id,member_id,duration_days,year,maximum\n";
  for (const auto& [cell, d, member, year, v] : rows)
    write_row(out, {cell, member, std::to_string(d), std::to_string(year), format_number(v)});
}

TemperatureTable read_temperature_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"cell_id", "member_id", "year", "temperature"});
  std::map<std::pair<std::string, std::string>, std::map<int, double>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_id(t, r, 0);
    check_id(t, r, 1);
    const long long y = t.integer(r, 2);
    const double k = t.number(r, 3);
    if (!groups[{t.rows[r][0], t.rows[r][1]}].emplace(static_cast<int>(y), k).second)
      throw CsvError(t.source, t.lines[r], "duplicate year " + std::to_string(y));
  }
  TemperatureTable out;
  for (const auto& [key, years] : groups) out[key].assign(years.begin(), years.end());
  return out;
}

void write_temperature_csv(std::ostream& out, const TemperatureTable& table) {
  out << "cell_id,member_id,year,temperature\n";
  for (const auto& [key, years] : table)
    for (const auto& [y, k] : years) write_row(out, {key.first, key.second, std::to_string(y), format_number(k)});
}

}  // namespace ensx::cli
