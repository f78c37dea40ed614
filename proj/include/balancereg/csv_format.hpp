#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace balancereg {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
// Strict: the whole field must be a number. Throws FormatError.
double parse_double(std::string_view field);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

}  // namespace balancereg
