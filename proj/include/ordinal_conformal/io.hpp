#pragma once

// Small text and file helpers shared by the readers and writers.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ocp {

/// Whole-field decimal parse; throws DataError on trailing junk or overflow.
[[nodiscard]] double parse_double(std::string_view text);
[[nodiscard]] std::int64_t parse_int(std::string_view text);

/// Comma-separated fields, no quoting. A trailing '\r' is dropped.
[[nodiscard]] std::vector<std::string> split_csv_line(std::string_view line);

[[nodiscard]] std::string read_file(const std::string& path);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
void write_file_atomically(const std::string& path, std::string_view contents);

/// `%.17g`: enough digits for an exact double round-trip.
[[nodiscard]] std::string format_double(double value);

}  // namespace ocp
