#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fhm::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;            // -1 if absent
    int require_column(const std::string& name) const;    // throws with column name
    const std::string& cell(std::size_t row, int col) const;
};

Table read_file(const std::string& path);
Table parse(const std::string& text);

void write_file(const std::string& path, const Table& table);

// Shortest round-trip decimal rendering; identical output for identical doubles.
std::string format_double(double v);

// Empty cells and the usual missing markers ("n/a", "na", "-", ".") parse as nullopt;
// anything else non-numeric also counts as missing rather than an error.
std::optional<double> parse_double(const std::string& cell);

}  // namespace fhm::csv
