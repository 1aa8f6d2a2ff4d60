#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace epsim {

/// Numeric table written as CSV: '#' comment lines (free text, then one "column <name>: <definition>"
/// line per column), a header row, one row per record, values in %.17g.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::string> definitions;
    std::vector<std::vector<double>> rows;

    void add_column(const std::string& name, const std::string& definition);
    std::size_t column(const std::string& name) const;
    std::vector<double> series(const std::string& name) const;
};

/// Writes `bytes` to `path` through a temporary file and rename; the temporary is removed on failure.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

std::string format_csv(const CsvTable& t);
CsvTable parse_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, const CsvTable& t);
CsvTable read_csv(const std::filesystem::path& path);

/// Row-major float64 array with a text header:
///   EPFIELD 1 / name / dtype float64 / endian little / shape r c / columns ... / attr key value ... / end
/// followed by r * c little-endian doubles.
struct FieldArray {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::string> columns;
    std::map<std::string, std::string> attrs;
    std::vector<double> data;

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

std::string encode_field(const FieldArray& f);
FieldArray decode_field(const std::string& bytes);
void write_field(const std::filesystem::path& path, const FieldArray& f);
FieldArray read_field(const std::filesystem::path& path);

}  // namespace epsim
