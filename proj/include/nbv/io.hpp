#pragma once

#include <string>
#include <string_view>

namespace nbv {

// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

// Shortest round-trip decimal form, identical on every run.
std::string format_double(double v);

}  // namespace nbv
