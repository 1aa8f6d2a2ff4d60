#include "epsim/persist.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "epsim/errors.hpp"

namespace epsim {

namespace {

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

}  // namespace

void CsvTable::add_column(const std::string& name, const std::string& definition) {
    columns.push_back(name);
    definitions.push_back(definition);
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw DomainError("missing column '" + name + "'");
}

std::vector<double> CsvTable::series(const std::string& name) const {
    std::size_t c = column(name);
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for '" + path.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_csv(const CsvTable& t) {
    std::string s;
    for (const auto& c : t.comments) s += "# " + c + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        s += "# column " + t.columns[i] + ": " + (i < t.definitions.size() ? t.definitions[i] : "") + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
    s += "\n";
    for (const auto& r : t.rows) {
        if (r.size() != t.columns.size()) throw DomainError("csv row width does not match the header");
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + num17(r[i]);
        s += "\n";
    }
    return s;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    std::map<std::string, std::string> defs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string c = line.size() > 2 ? line.substr(2) : "";
            if (c.rfind("column ", 0) == 0) {
                std::size_t colon = c.find(':');
                std::string name = c.substr(7, colon == std::string::npos ? std::string::npos : colon - 7);
                defs[name] = colon == std::string::npos || colon + 2 > c.size() ? "" : c.substr(colon + 2);
            } else {
                t.comments.push_back(c);
            }
            continue;
        }
        auto cells = split(line, ',');
        if (!header) {
            t.columns = cells;
            for (const auto& c : t.columns) t.definitions.push_back(defs.count(c) ? defs[c] : "");
            header = true;
            continue;
        }
        if (cells.size() != t.columns.size()) throw DomainError("csv row width does not match the header");
        std::vector<double> r;
        for (const auto& c : cells) {
            char* end = nullptr;
            double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str() || *end != '\0') throw DomainError("invalid csv value '" + c + "'");
            r.push_back(v);
        }
        t.rows.push_back(std::move(r));
    }
    if (!header) throw DomainError("csv has no header row");
    return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_atomic(path, format_csv(t)); }

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string encode_field(const FieldArray& f) {
    if (f.data.size() != f.rows * f.cols) throw DomainError("field data does not match its shape");
    std::string s = "EPFIELD 1\nname " + f.name + "\ndtype float64\nendian little\nshape " + std::to_string(f.rows) + " " +
                    std::to_string(f.cols) + "\ncolumns";
    for (const auto& c : f.columns) s += " " + c;
    s += "\n";
    for (const auto& [k, v] : f.attrs) s += "attr " + k + " " + v + "\n";
    s += "end\n";
    std::size_t off = s.size();
    s.resize(off + 8 * f.data.size());
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(f.data[i]);
        for (int b = 0; b < 8; ++b) s[off + 8 * i + b] = char((bits >> (8 * b)) & 0xff);
    }
    return s;
}

FieldArray decode_field(const std::string& bytes) {
    FieldArray f;
    std::size_t pos = 0;
    auto next_line = [&]() {
        std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos) throw DomainError("truncated field header");
        std::string l = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return l;
    };
    if (next_line() != "EPFIELD 1") throw DomainError("not an EPFIELD 1 file");
    bool shape = false;
    for (;;) {
        std::string l = next_line();
        if (l == "end") break;
        std::size_t sp = l.find(' ');
        std::string key = l.substr(0, sp), rest = sp == std::string::npos ? "" : l.substr(sp + 1);
        if (key == "name") {
            f.name = rest;
        } else if (key == "dtype") {
            if (rest != "float64") throw DomainError("unsupported dtype '" + rest + "'");
        } else if (key == "endian") {
            if (rest != "little") throw DomainError("unsupported byte order '" + rest + "'");
        } else if (key == "shape") {
            std::istringstream ss(rest);
            if (!(ss >> f.rows >> f.cols)) throw DomainError("invalid shape line");
            shape = true;
        } else if (key == "columns") {
            std::istringstream ss(rest);
            std::string c;
            while (ss >> c) f.columns.push_back(c);
        } else if (key == "attr") {
            std::size_t sp2 = rest.find(' ');
            f.attrs[rest.substr(0, sp2)] = sp2 == std::string::npos ? "" : rest.substr(sp2 + 1);
        } else {
            throw DomainError("unknown field header line '" + l + "'");
        }
    }
    if (!shape) throw DomainError("field header has no shape");
    std::size_t n = f.rows * f.cols;
    if (bytes.size() - pos != 8 * n) throw DomainError("field payload size does not match its shape");
    f.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(bytes[pos + 8 * i + b])) << (8 * b);
        f.data[i] = std::bit_cast<double>(bits);
    }
    return f;
}

void write_field(const std::filesystem::path& path, const FieldArray& f) { write_atomic(path, encode_field(f)); }

FieldArray read_field(const std::filesystem::path& path) { return decode_field(read_file(path)); }

}  // namespace epsim
