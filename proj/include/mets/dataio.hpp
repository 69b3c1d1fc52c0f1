#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mets/core.hpp"

namespace mets {

// Binary matrix file: "MET1", u32 rows, u32 cols, then rows*cols f64 values,
// row-major, all little-endian.
inline constexpr std::array<char, 4> kMatrixMagic = {'M', 'E', 'T', '1'};
inline constexpr std::size_t kMatrixHeaderBytes = 12;

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_le(const std::string& buf, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[offset + static_cast<std::size_t>(i)])) << (8 * i);
    return v;
}

inline bool has_csv_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext == ".csv";
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace detail

inline std::string encode_matrix(const Matrix& m) {
    require(m.rows() <= std::numeric_limits<std::uint32_t>::max() && m.cols() <= std::numeric_limits<std::uint32_t>::max(),
            "encode_matrix: dimensions exceed 32 bits");
    if (!all_finite(m)) throw IoError("encode_matrix: matrix contains non-finite values");
    std::string buf(kMatrixMagic.begin(), kMatrixMagic.end());
    buf.reserve(kMatrixHeaderBytes + static_cast<std::size_t>(m.size()) * 8);
    detail::put_u32(buf, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(buf, static_cast<std::uint32_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) detail::put_u64(buf, std::bit_cast<std::uint64_t>(m(r, c)));
    return buf;
}

inline Matrix decode_matrix(const std::string& buf, const std::string& origin = "<buffer>") {
    if (buf.size() < kMatrixHeaderBytes)
        throw IoError(origin + ": file too short for a matrix header (" + std::to_string(buf.size()) + " bytes)");
    if (!std::equal(kMatrixMagic.begin(), kMatrixMagic.end(), buf.begin()))
        throw IoError(origin + ": bad magic tag (expected MET1)");
    const std::uint64_t rows = detail::get_le(buf, 4, 4);
    const std::uint64_t cols = detail::get_le(buf, 8, 4);
    const std::uint64_t cells = rows * cols;  // < 2^64, both factors < 2^32
    if (cells > (std::numeric_limits<std::uint64_t>::max() - kMatrixHeaderBytes) / 8 ||
        cells > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
        throw IoError(origin + ": dimensions " + std::to_string(rows) + " x " + std::to_string(cols) + " overflow");
    const std::uint64_t expected = cells * 8;
    const std::uint64_t actual = buf.size() - kMatrixHeaderBytes;
    if (actual != expected)
        throw IoError(origin + ": payload size mismatch: expected " + std::to_string(expected) + " bytes for " +
                      std::to_string(rows) + " x " + std::to_string(cols) + ", got " + std::to_string(actual));
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    std::size_t offset = kMatrixHeaderBytes;
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c, offset += 8) {
            const double v = std::bit_cast<double>(detail::get_le(buf, offset, 8));
            if (!std::isfinite(v))
                throw IoError(origin + ": non-finite value at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
            m(r, c) = v;
        }
    return m;
}

/// Comma-separated rows, no header.
inline Matrix parse_csv(std::string_view text, const std::string& origin = "<csv>") {
    std::vector<double> values;
    Index cols = -1;
    Index rows = 0;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        Index count = 0;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            std::string_view field = line.substr(pos, comma == std::string_view::npos ? line.size() - pos : comma - pos);
            while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
            while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
            if (!field.empty() && field.front() == '+') field.remove_prefix(1);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
                throw IoError(origin + ": line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
            if (!std::isfinite(v)) throw IoError(origin + ": line " + std::to_string(line_no) + ": non-finite value");
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (cols < 0) cols = count;
        if (count != cols)
            throw IoError(origin + ": line " + std::to_string(line_no) + " has " + std::to_string(count) +
                          " fields, expected " + std::to_string(cols));
        ++rows;
    }
    if (rows == 0) return Matrix(0, 0);
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, cols);
}

inline std::string format_csv(const Matrix& m) {
    if (!all_finite(m)) throw IoError("format_csv: matrix contains non-finite values");
    std::string out;
    char buf[32];
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c) out.push_back(',');
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            out += buf;
        }
        out.push_back('\n');
    }
    return out;
}

/// Reads a binary matrix file, or CSV when the extension is .csv.
inline Matrix read_matrix(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    return detail::has_csv_extension(path) ? parse_csv(bytes, path.string()) : decode_matrix(bytes, path.string());
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    detail::write_file(path, detail::has_csv_extension(path) ? format_csv(m) : encode_matrix(m));
}

}  // namespace mets
