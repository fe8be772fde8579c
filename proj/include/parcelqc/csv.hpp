#pragma once

#include <string>
#include <vector>

namespace parcelqc::csv {

// Minimal delimited-text support for the file formats the toolkit owns:
// comma-separated with a mandatory header row, '.' decimal, UTF-8, LF line
// endings, no quoting (fields must not contain the delimiter). TSV variants
// additionally allow '#' comment lines.

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index for `name`; throws when missing.
    std::size_t column(const std::string& name) const;
    /// Column index or npos when absent.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t find_column(const std::string& name) const;
};

Table read_table(const std::string& path, char delimiter = ',', bool allow_comments = false);

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, char delimiter = ',');

/// Shortest representation that round-trips through double.
std::string format_double(double value);

double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);

} // namespace parcelqc::csv
