#include "ei/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ei/error.hpp"

namespace ei::csv {
namespace {

std::vector<std::string> split_record(std::istream& in, const std::string& first_line, bool& ok) {
    std::vector<std::string> fields;
    std::string field;
    std::string line = first_line;
    bool quoted = false;
    std::size_t i = 0;
    ok = true;
    while (true) {
        if (i >= line.size()) {
            if (quoted) {
                // Quoted field spans a newline.
                std::string more;
                if (!std::getline(in, more)) {
                    ok = false;
                    break;
                }
                field.push_back('\n');
                line = std::move(more);
                i = 0;
                continue;
            }
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    Table table;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.empty()) continue;
        bool ok = true;
        auto fields = split_record(in, line, ok);
        if (!ok) throw DataError(path.string() + ": unterminated quoted field near line " + std::to_string(line_no));
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) throw DataError(path.string() + ": empty file");
    return table;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {
std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}
}  // namespace

double parse_double(std::string_view field, std::string_view where) {
    auto s = trim(field);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("non-numeric feature cell '" + std::string(field) + "' at " + std::string(where));
    return v;
}

long long parse_int(std::string_view field, std::string_view where) {
    auto s = trim(field);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("non-integer value '" + std::string(field) + "' at " + std::string(where));
    return v;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace ei::csv
