#include "latentprog/csv.hpp"

#include "latentprog/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace lp::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

} // namespace

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::size_t Table::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::FormatError, "CSV: missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

Table parse(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
            continue;
        }
        require(fields.size() == table.header.size(), ErrorKind::FormatError,
                "CSV: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    require(!first, ErrorKind::FormatError, "CSV: missing header");
    return table;
}

Table read(const std::filesystem::path& path) { return parse(read_text(path)); }

double to_double(const std::string& field, std::string_view what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used == field.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::FormatError, "CSV: bad " + std::string(what) + " '" + field + "'");
}

long to_long(const std::string& field, std::string_view what) {
    long v = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    require(ec == std::errc{} && ptr == end, ErrorKind::FormatError,
            "CSV: bad " + std::string(what) + " '" + field + "'");
    return v;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    require(static_cast<bool>(out), ErrorKind::IoError, "failed writing " + path.string());
}

} // namespace lp::csv
