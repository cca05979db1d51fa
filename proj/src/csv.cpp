#include "planesel/csv.hpp"

#include "planesel/core.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace planesel {

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void CsvWriter::header(const std::vector<std::string>& names)
{
    row(names);
}

void CsvWriter::row(std::initializer_list<double> values)
{
    bool first = true;
    for (double v : values) {
        if (!first)
            os_ << ',';
        os_ << format_number(v);
        first = false;
    }
    os_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            os_ << ',';
        os_ << cells[i];
    }
    os_ << '\n';
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw ConfigError("csv: missing column '" + name + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const
{
    const std::string& cell = rows.at(row).at(col);
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ConfigError("csv: row " + std::to_string(row + 1) + ": '" + cell +
                          "' is not a number");
    return v;
}

CsvTable read_csv(std::istream& is)
{
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#')
            continue;
        auto cells = split(s);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ConfigError("csv: row " + std::to_string(t.rows.size() + 1) +
                              " has the wrong number of fields");
        t.rows.push_back(std::move(cells));
    }
    if (!have_header)
        throw ConfigError("csv: empty input");
    return t;
}

}  // namespace planesel
