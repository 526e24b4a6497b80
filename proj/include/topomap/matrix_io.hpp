#pragma once

// ============================================================================
// FILE: matrix_io.hpp
//
// BRIEF: On-disk formats shared by every module: the TMX matrix format,
// label/split CSV files, canonical float formatting, and atomic file writes.
//
// TMX: first line `tmx 1 <rows> <cols>`, then <rows> lines of <cols>
// space-separated decimal floats. UTF-8, LF line endings. Numbers are written
// in the shortest representation that parses back bit-identically, so
// save(load(f)) == f for canonical files and reruns are byte-stable.
// ============================================================================

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace topomap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::vector<std::string_view> split_char(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace detail

// Shortest decimal representation that round-trips through parse_double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view tok, const std::string& where) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw std::runtime_error(where + ": non-numeric token '" + std::string(tok) + "'");
    return v;
}

inline long parse_long(std::string_view tok, const std::string& where) {
    long v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw std::runtime_error(where + ": non-integer token '" + std::string(tok) + "'");
    return v;
}

// Writes content to path via a temp file in the same directory plus rename, so
// readers never observe a partially written file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ----------------------------------------------------------------------------
// TMX matrices
// ----------------------------------------------------------------------------

inline Matrix load_tmx(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("malformed header in " + path.string() + ": empty file");
    auto head = detail::split_ws(detail::strip_cr(line));
    if (head.size() != 4 || head[0] != "tmx" || head[1] != "1")
        throw std::runtime_error("malformed header in " + path.string() + ": '" + line + "'");
    long rows = parse_long(head[2], path.string() + " header");
    long cols = parse_long(head[3], path.string() + " header");
    if (rows < 0 || cols < 0)
        throw std::runtime_error("malformed header in " + path.string() + ": negative shape");
    Matrix m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        if (!std::getline(in, line))
            throw std::runtime_error("row-count mismatch in " + path.string() + ": expected " +
                                     std::to_string(rows) + " rows, file ends at row " + std::to_string(r));
        auto toks = detail::split_ws(detail::strip_cr(line));
        if (static_cast<long>(toks.size()) != cols)
            throw std::runtime_error("non-rectangular row " + std::to_string(r) + " in " + path.string() +
                                     ": expected " + std::to_string(cols) + " values, got " +
                                     std::to_string(toks.size()));
        for (long c = 0; c < cols; ++c) {
            double v = parse_double(toks[static_cast<std::size_t>(c)],
                                    path.string() + " row " + std::to_string(r));
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite value at row " + std::to_string(r) + " col " +
                                         std::to_string(c) + " in " + path.string());
            m(r, c) = v;
        }
    }
    while (std::getline(in, line)) {
        if (!detail::strip_cr(line).empty())
            throw std::runtime_error("row-count mismatch in " + path.string() + ": trailing data after row " +
                                     std::to_string(rows));
    }
    return m;
}

inline std::string tmx_to_string(const Matrix& m) {
    std::string out = "tmx 1 " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (long r = 0; r < m.rows(); ++r) {
        for (long c = 0; c < m.cols(); ++c) {
            double v = m(r, c);
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite value at row " + std::to_string(r) + " col " +
                                         std::to_string(c) + ": refusing to write");
            if (c) out += ' ';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline void save_tmx(const std::filesystem::path& path, const Matrix& m) {
    atomic_write_file(path, tmx_to_string(m));
}

// ----------------------------------------------------------------------------
// Label and split CSV files
//
// Classification labels: header `row,label`, one integer id per row.
// Regression labels:     header `row,y0` or `row,y0,y1`.
// Splits:                header `row,split`, values train|valid|test.
// The row column is the 0-based positional row id and must match the line
// position; all modules reference inputs by row index.
// ----------------------------------------------------------------------------

struct LabelFile {
    bool categorical = false;
    std::vector<long> ids;  // categorical
    Matrix values;          // regression, n x d with d in {1,2}
    long rows() const { return categorical ? static_cast<long>(ids.size()) : values.rows(); }
};

inline LabelFile load_label_csv(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("malformed header in " + path.string() + ": empty file");
    std::string header(detail::strip_cr(line));
    LabelFile lf;
    long dim = 0;
    if (header == "row,label") {
        lf.categorical = true;
    } else if (header == "row,y0") {
        dim = 1;
    } else if (header == "row,y0,y1") {
        dim = 2;
    } else {
        throw std::runtime_error("malformed header in " + path.string() + ": '" + header + "'");
    }
    std::vector<std::array<double, 2>> vals;
    long expect = 0;
    while (std::getline(in, line)) {
        auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto toks = detail::split_char(sv, ',');
        if (static_cast<long>(toks.size()) != (lf.categorical ? 2 : dim + 1))
            throw std::runtime_error("malformed row " + std::to_string(expect) + " in " + path.string());
        long row = parse_long(toks[0], path.string());
        if (row != expect)
            throw std::runtime_error("row index mismatch in " + path.string() + ": expected " +
                                     std::to_string(expect) + ", got " + std::to_string(row));
        if (lf.categorical) {
            lf.ids.push_back(parse_long(toks[1], path.string()));
        } else {
            std::array<double, 2> v{0.0, 0.0};
            for (long d = 0; d < dim; ++d)
                v[static_cast<std::size_t>(d)] =
                    parse_double(toks[static_cast<std::size_t>(d + 1)], path.string());
            vals.push_back(v);
        }
        ++expect;
    }
    if (!lf.categorical) {
        lf.values.resize(static_cast<long>(vals.size()), dim);
        for (long r = 0; r < lf.values.rows(); ++r)
            for (long d = 0; d < dim; ++d)
                lf.values(r, d) = vals[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)];
    }
    return lf;
}

inline std::string label_csv_to_string(const LabelFile& lf) {
    std::string out;
    if (lf.categorical) {
        out = "row,label\n";
        for (std::size_t r = 0; r < lf.ids.size(); ++r)
            out += std::to_string(r) + "," + std::to_string(lf.ids[r]) + "\n";
    } else {
        out = lf.values.cols() == 2 ? "row,y0,y1\n" : "row,y0\n";
        for (long r = 0; r < lf.values.rows(); ++r) {
            out += std::to_string(r);
            for (long d = 0; d < lf.values.cols(); ++d)
                out += "," + format_double(lf.values(r, d));
            out += "\n";
        }
    }
    return out;
}

inline void save_label_csv(const std::filesystem::path& path, const LabelFile& lf) {
    atomic_write_file(path, label_csv_to_string(lf));
}

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        default: return "test";
    }
}

inline std::vector<Split> load_split_csv(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != "row,split")
        throw std::runtime_error("malformed header in " + path.string());
    std::vector<Split> out;
    long expect = 0;
    while (std::getline(in, line)) {
        auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto toks = detail::split_char(sv, ',');
        if (toks.size() != 2)
            throw std::runtime_error("malformed row " + std::to_string(expect) + " in " + path.string());
        long row = parse_long(toks[0], path.string());
        if (row != expect)
            throw std::runtime_error("row index mismatch in " + path.string() + ": expected " +
                                     std::to_string(expect) + ", got " + std::to_string(row));
        if (toks[1] == "train") out.push_back(Split::train);
        else if (toks[1] == "valid") out.push_back(Split::valid);
        else if (toks[1] == "test") out.push_back(Split::test);
        else throw std::runtime_error("unknown split tag '" + std::string(toks[1]) + "' at row " +
                                      std::to_string(expect) + " in " + path.string());
        ++expect;
    }
    return out;
}

inline std::string split_csv_to_string(const std::vector<Split>& splits) {
    std::string out = "row,split\n";
    for (std::size_t r = 0; r < splits.size(); ++r)
        out += std::to_string(r) + "," + split_name(splits[r]) + "\n";
    return out;
}

inline void save_split_csv(const std::filesystem::path& path, const std::vector<Split>& splits) {
    atomic_write_file(path, split_csv_to_string(splits));
}

}  // namespace topomap
