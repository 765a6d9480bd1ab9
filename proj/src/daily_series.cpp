#include "ensx/daily_series.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "ensx/error.hpp"

namespace ensx {

namespace {

bool parse_uint(std::string_view s, unsigned& out) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

Date make_date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw InputError("invalid calendar date");
  return std::chrono::sys_days{ymd};
}

Date parse_date(std::string_view text) {
  unsigned y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_uint(text.substr(0, 4), y) ||
      !parse_uint(text.substr(5, 2), m) || !parse_uint(text.substr(8, 2), d)) {
    throw InputError("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw InputError("invalid calendar date '" + std::string(text) + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(Date d) { return static_cast<int>(std::chrono::year_month_day{d}.year()); }

unsigned month_of(Date d) { return static_cast<unsigned>(std::chrono::year_month_day{d}.month()); }

YearStart parse_year_start(std::string_view mm_dd) {
  unsigned m = 0;
  unsigned d = 0;
  if (mm_dd.size() != 5 || mm_dd[2] != '-' || !parse_uint(mm_dd.substr(0, 2), m) ||
      !parse_uint(mm_dd.substr(3, 2), d)) {
    throw ConfigError("malformed year start '" + std::string(mm_dd) + "' (expected MM-DD)");
  }
  // Feb 29 cannot start a block every year.
  const std::chrono::month_day md{std::chrono::month{m}, std::chrono::day{d}};
  if (!md.ok() || (m == 2 && d == 29)) throw ConfigError("invalid year start '" + std::string(mm_dd) + "'");
  return {m, d};
}

int block_year(Date d, YearStart start) {
  const int y = year_of(d);
  if (start == YearStart{}) return y;
  return d >= make_date(y, start.month, start.day) ? y + 1 : y;
}

std::pair<Date, Date> block_bounds(int label, YearStart start) {
  if (start == YearStart{}) return {make_date(label, 1, 1), make_date(label + 1, 1, 1)};
  return {make_date(label - 1, start.month, start.day), make_date(label, start.month, start.day)};
}

void DailySeries::validate() const {
  if (dates.size() != values.size()) throw InputError("series " + cell_id + "/" + member_id + ": length mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw InputError("series " + cell_id + "/" + member_id + ": value at " + format_date(dates[i]) +
                       " must be finite and >= 0");
    }
    if (i > 0 && !(dates[i] > dates[i - 1])) {
      throw InputError("series " + cell_id + "/" + member_id + ": dates not strictly increasing at " +
                       format_date(dates[i]));
    }
  }
}

std::size_t DailySeries::missing_days() const {
  std::size_t missing = 0;
  for (std::size_t i = 1; i < dates.size(); ++i)
    missing += static_cast<std::size_t>((dates[i] - dates[i - 1]).count() - 1);
  return missing;
}

}  // namespace ensx
