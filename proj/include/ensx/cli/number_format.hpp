#pragma once

#include <string>
#include <string_view>

namespace ensx::cli {

// Shortest decimal that parses back to the same double ("nan", "inf" and
// "-inf" for non-finite values).
std::string format_number(double value);

// Whole-field decimal parse; returns false on trailing garbage or overflow.
bool parse_number(std::string_view text, double& out);
bool parse_integer(std::string_view text, long long& out);

}  // namespace ensx::cli
