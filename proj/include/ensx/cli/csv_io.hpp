#pragma once

// CSV contracts of the command line tool. Every file starts with a fixed
// header; fields are comma separated without quoting; lines end in LF.
// Readers accept any row order and return canonical order; writers emit
// canonical order, so write(read(x)) == x for canonical files.
//
//   daily        cell_id,member_id,date,value
//   grid         cell_id,lat,lon
//   mask         cell_id,region
//   maxima       cell_id,member_id,duration_days,year,maximum
//   temperature  cell_id,member_id,year,temperature

#include <filesystem>
#include <iosfwd>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ensx/analysis.hpp"
#include "ensx/block_maxima.hpp"
#include "ensx/daily_series.hpp"
#include "ensx/error.hpp"
#include "ensx/synth.hpp"

namespace ensx::cli {

// Malformed file content; what() names the file and 1-based row (the
// header is row 1).
class CsvError : public InputError {
 public:
  CsvError(const std::string& file, std::size_t line, const std::string& message);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Header plus rows of raw fields.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // line number of each row

  // Throws CsvError when the column is absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::istream& in, const std::string& source);
// Throws CsvError when the file is unreadable, has no header, a header other
// than `expected` (when given), a short or long row, or no data rows.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected = {});

// Series sorted by (cell_id, member_id), dates ascending.
std::vector<DailySeries> read_daily_csv(const std::filesystem::path& path);
void write_daily_csv(std::ostream& out, std::span<const DailySeries> series);

std::vector<GridCell> read_grid_csv(const std::filesystem::path& path);
void write_grid_csv(std::ostream& out, std::span<const GridCell> cells);

RegionMask read_mask_csv(const std::filesystem::path& path);
void write_mask_csv(std::ostream& out, const RegionMask& mask);

// One series per (cell_id, duration_days, member_id), in that order, entries
// by year.
std::vector<BlockMaximaSeries> read_maxima_csv(const std::filesystem::path& path);
void write_maxima_csv(std::ostream& out, std::span<const BlockMaximaSeries> series);

// (cell_id, member_id) -> (year, K) ascending by year.
using TemperatureTable = std::map<std::pair<std::string, std::string>, std::vector<std::pair<int, double>>>;
TemperatureTable read_temperature_csv(const std::filesystem::path& path);
void write_temperature_csv(std::ostream& out, const TemperatureTable& table);

// Joins fields with commas and appends LF.
void write_row(std::ostream& out, std::initializer_list<std::string> fields);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace ensx::cli
