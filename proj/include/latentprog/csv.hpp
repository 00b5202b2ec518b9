#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lp::csv {

// Plain comma-separated rows: no quoting, surrounding whitespace trimmed,
// blank lines skipped. First row is the header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; throws FormatError if absent.
    std::size_t column(std::string_view name) const;
};

Table parse(const std::string& text);
Table read(const std::filesystem::path& path);
std::vector<std::string> split_line(std::string_view line);

double to_double(const std::string& field, std::string_view what);
long to_long(const std::string& field, std::string_view what);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace lp::csv
