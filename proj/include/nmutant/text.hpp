#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nmutant {

// Shortest decimal form that parses back to the same double.
std::string format_real(double value);

double parse_real(std::string_view text);
std::size_t parse_count(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char delimiter);
std::string_view trim(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace nmutant
