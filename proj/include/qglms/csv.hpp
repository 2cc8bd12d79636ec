#pragma once

// Small CSV helpers shared by the file formats.

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace qglms::csv {

/// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

std::vector<std::string> split_row(std::string_view line, char sep = ',');

double parse_double(std::string_view field);
long long parse_int(std::string_view field);

/// Opens for writing; throws std::runtime_error naming the path on failure.
std::ofstream open_out(const std::string& path);
std::ifstream open_in(const std::string& path);

}  // namespace qglms::csv
