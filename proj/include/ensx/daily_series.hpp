#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace ensx {

using Date = std::chrono::sys_days;

// Strict ISO-8601 calendar date "YYYY-MM-DD"; throws InputError otherwise.
Date parse_date(std::string_view text);
std::string format_date(Date d);
Date make_date(int year, unsigned month, unsigned day);
int year_of(Date d);
unsigned month_of(Date d);

// First day of the block year. Blocks run from this day up to the day
// before it in the next calendar year. A block is labelled by the calendar
// year in which it ends, so the default 01-01 gives plain calendar years.
struct YearStart {
  unsigned month = 1;
  unsigned day = 1;
  bool operator==(const YearStart&) const = default;
};

YearStart parse_year_start(std::string_view mm_dd);
int block_year(Date d, YearStart start);
// First and one-past-last day of block `label`.
std::pair<Date, Date> block_bounds(int label, YearStart start);

// Dated daily depths (mm/day) for one cell and one ensemble member.
struct DailySeries {
  std::string cell_id;
  std::string member_id;
  std::vector<Date> dates;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  // Dates strictly increasing, values finite and >= 0, equal lengths.
  // Throws InputError naming the first offending position.
  void validate() const;
  // Number of missing days between consecutive dates.
  std::size_t missing_days() const;
  bool operator==(const DailySeries&) const = default;
};

}  // namespace ensx
