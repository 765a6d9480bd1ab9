#pragma once

#include <string>
#include <vector>

#include "ensx/daily_series.hpp"

namespace ensx::test {

// Consecutive days starting at `start`.
inline DailySeries consecutive(std::vector<double> values, Date start = make_date(2000, 1, 1),
                               std::string cell = "c0", std::string member = "m001") {
  DailySeries s{std::move(cell), std::move(member), {}, std::move(values)};
  for (std::size_t i = 0; i < s.values.size(); ++i) s.dates.push_back(start + std::chrono::days(i));
  return s;
}

inline DailySeries dated(std::vector<Date> dates, std::vector<double> values, std::string cell = "c0",
                         std::string member = "m001") {
  return {std::move(cell), std::move(member), std::move(dates), std::move(values)};
}

}  // namespace ensx::test
