#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ei::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file with a header row. Double-quoted fields
/// (with "" escapes) are supported; CRLF line endings are accepted.
Table read(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict parse of a whole field as a double; throws DataError naming `where`.
double parse_double(std::string_view field, std::string_view where);
long long parse_int(std::string_view field, std::string_view where);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Writes `content` to `path` in binary mode (LF line endings kept as is).
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace ei::csv
