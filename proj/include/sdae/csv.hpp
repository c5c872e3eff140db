#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sdae {

/// Shortest round-trippable form limited to 17 significant digits ("%.17g").
std::string format_double(double v);

std::vector<std::string> split_csv_line(std::string_view line);

/// Strict double parse of a whole field; throws std::invalid_argument.
double parse_double(std::string_view field);

}  // namespace sdae
