#pragma once

// Minimal CSV reading and writing: comma separated, header row, '.' decimal
// separator, no quoting.

#include <initializer_list>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace planesel {

/// Round-trippable-enough fixed formatting used by every CSV writer.
std::string format_number(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}
    void header(const std::vector<std::string>& names);
    void row(std::initializer_list<double> values);
    void row(const std::vector<std::string>& cells);

private:
    std::ostream& os_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws ConfigError if absent.
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
};

/// Blank lines and lines starting with '#' are skipped.
CsvTable read_csv(std::istream& is);

}  // namespace planesel
