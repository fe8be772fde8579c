#include "parcelqc/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "parcelqc/error.hpp"

namespace parcelqc::csv {

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    for (;;) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

std::size_t Table::find_column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return npos;
}

std::size_t Table::column(const std::string& name) const {
    const std::size_t i = find_column(name);
    if (i == npos) throw Error("missing column '" + name + "'");
    return i;
}

Table read_table(const std::string& path, char delimiter, bool allow_comments) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);

    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        if (allow_comments && line[0] == '#') continue;
        auto fields = split(line, delimiter);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
        } else {
            if (fields.size() != table.header.size())
                throw Error("malformed row in " + path + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
        }
    }
    if (!have_header) throw Error("empty file (no header row): " + path);
    return table;
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, char delimiter) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out.put(delimiter);
            out << fields[i];
        }
        out.put('\n');
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    out.flush();
    if (!out) throw Error("write failed: " + path);
}

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw Error("invalid number '" + text + "' in " + context);
    return value;
}

long long parse_int(const std::string& text, const std::string& context) {
    long long value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw Error("invalid integer '" + text + "' in " + context);
    return value;
}

} // namespace parcelqc::csv
