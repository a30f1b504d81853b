#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace streamlearn {

/// Shortest round-trip-safe decimal form ("%.17g"); "nan"/"inf" for
/// non-finite values.
std::string format_double(double value);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Whole file as a string; throws IoError.
std::string read_text_file(const std::filesystem::path& path);

/// Splits one CSV line on commas, trimming surrounding whitespace. Fields in
/// double quotes may contain commas; "" inside them is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);

/// Parses a full-token floating-point number; throws InvalidArgument otherwise.
double parse_double(std::string_view token);

}  // namespace streamlearn
