#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace emergent::csv {

/// Quotes a field when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Splits one record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Reads a CSV file and checks that the header equals `expected_header` and
/// that every row has the same number of fields. Throws IntegrityError.
Table read(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace emergent::csv
