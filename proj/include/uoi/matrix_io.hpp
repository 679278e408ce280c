#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "uoi/error.hpp"
#include "uoi/problem.hpp"

namespace uoi {

/// Matrix file layouts.
///
/// binary: 24-byte little-endian header, then rows*cols float64 values in
///   row-major order, little-endian.
///     offset 0  char[4] magic "UOIM"
///     offset 4  u32     version (1)
///     offset 8  u64     rows
///     offset 16 u64     cols
/// text: one row per line, values separated by commas and/or whitespace,
///   written with 17 significant digits. Blank lines and lines starting with
///   '#' are ignored.
enum class MatrixFormat { text, binary };

inline constexpr std::array<char, 4> kMatrixMagic{'U', 'O', 'I', 'M'};
inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 24;

/// ".bin" selects the binary layout; anything else is text.
inline MatrixFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? MatrixFormat::binary : MatrixFormat::text;
}

struct MatrixHeader {
  std::uint32_t version = kMatrixVersion;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

namespace detail {

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(const unsigned char* bytes) {
  std::array<unsigned char, sizeof(T)> tmp;
  std::memcpy(tmp.data(), bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(tmp.begin(), tmp.end());
  T value;
  std::memcpy(&value, tmp.data(), sizeof(T));
  return value;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  return in;
}

inline MatrixHeader read_header(std::istream& in, const std::filesystem::path& path,
                                std::uint64_t file_size) {
  std::array<unsigned char, kMatrixHeaderBytes> raw{};
  in.read(reinterpret_cast<char*>(raw.data()), raw.size());
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw HeaderError(path.string() + ": file shorter than the 24-byte header");
  }
  if (std::memcmp(raw.data(), kMatrixMagic.data(), 4) != 0) {
    throw HeaderError(path.string() + ": bad magic, not a UOIM matrix file");
  }
  MatrixHeader h;
  h.version = get_le<std::uint32_t>(raw.data() + 4);
  h.rows = get_le<std::uint64_t>(raw.data() + 8);
  h.cols = get_le<std::uint64_t>(raw.data() + 16);
  if (h.version != kMatrixVersion) {
    throw VersionError(path.string() + ": unsupported matrix format version " +
                       std::to_string(h.version));
  }
  if (h.cols != 0 && h.rows > (UINT64_MAX - kMatrixHeaderBytes) / 8 / h.cols) {
    throw HeaderError(path.string() + ": dimensions overflow");
  }
  const std::uint64_t expected = kMatrixHeaderBytes + h.rows * h.cols * 8;
  if (file_size != expected) {
    throw PayloadSizeError(path.string() + ": header declares " + std::to_string(h.rows) + " x " +
                           std::to_string(h.cols) + " (" + std::to_string(expected) +
                           " bytes) but file has " + std::to_string(file_size) + " bytes");
  }
  return h;
}

inline std::uint64_t file_size_of(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError(path.string(), ec.message());
  return size;
}

inline void decode_rows(const std::vector<unsigned char>& raw, MatrixXd& out) {
  std::size_t at = 0;
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c, at += 8) out(r, c) = get_le<double>(raw.data() + at);
  }
}

inline MatrixXd read_text(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    std::size_t first = rest.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || rest[first] == '#') continue;
    Index count = 0;
    std::size_t pos = 0;
    while (true) {
      pos = rest.find_first_not_of(" \t\r,", pos);
      if (pos == std::string_view::npos) break;
      double v = 0.0;
      const char* begin = rest.data() + pos;
      const auto [ptr, ec] = std::from_chars(begin, rest.data() + rest.size(), v);
      if (ec != std::errc() ||
          (ptr != rest.data() + rest.size() && std::string_view(" \t\r,").find(*ptr) == std::string_view::npos)) {
        throw ParseError(line_no, path.string() + ": cannot parse number near '" +
                                      std::string(rest.substr(pos, 16)) + "'");
      }
      values.push_back(v);
      ++count;
      pos = static_cast<std::size_t>(ptr - rest.data());
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError(line_no, path.string() + ": expected " + std::to_string(cols) +
                                    " values, found " + std::to_string(count));
    }
    ++rows;
  }
  if (in.bad()) throw IoError(path.string(), "read failed");
  MatrixXd out(rows, std::max<Index>(cols, 0));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < out.cols(); ++c) out(r, c) = values[static_cast<std::size_t>(r * out.cols() + c)];
  return out;
}

}  // namespace detail

inline void write_matrix(const Eigen::Ref<const MatrixXd>& m, const std::filesystem::path& path,
                         MatrixFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  if (format == MatrixFormat::binary) {
    out.write(kMatrixMagic.data(), 4);
    detail::put_le<std::uint32_t>(out, kMatrixVersion);
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) detail::put_le<double>(out, m(r, c));
  } else {
    std::array<char, 40> buf{};
    std::string line;
    for (Index r = 0; r < m.rows(); ++r) {
      line.clear();
      for (Index c = 0; c < m.cols(); ++c) {
        if (c > 0) line += ',';
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(r, c),
                                       std::chars_format::general, 17);
        line.append(buf.data(), res.ptr);
      }
      line += '\n';
      out << line;
    }
  }
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

inline void write_matrix(const Eigen::Ref<const MatrixXd>& m, const std::filesystem::path& path) {
  write_matrix(m, path, format_for_path(path));
}

inline MatrixHeader read_matrix_header(const std::filesystem::path& path) {
  std::ifstream in = detail::open_for_read(path);
  return detail::read_header(in, path, detail::file_size_of(path));
}

inline MatrixXd read_matrix(const std::filesystem::path& path, MatrixFormat format) {
  if (format == MatrixFormat::text) return detail::read_text(path);
  std::ifstream in = detail::open_for_read(path);
  const MatrixHeader h = detail::read_header(in, path, detail::file_size_of(path));
  std::vector<unsigned char> raw(static_cast<std::size_t>(h.rows * h.cols * 8));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw PayloadSizeError(path.string() + ": payload shorter than declared");
  }
  MatrixXd out(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  detail::decode_rows(raw, out);
  return out;
}

inline MatrixXd read_matrix(const std::filesystem::path& path) {
  return read_matrix(path, format_for_path(path));
}

/// Rows [row_start, row_start + row_count) of a binary matrix file, read by
/// seeking past the rows before them.
inline MatrixXd read_chunk(const std::filesystem::path& path, std::uint64_t row_start,
                           std::uint64_t row_count) {
  std::ifstream in = detail::open_for_read(path);
  const MatrixHeader h = detail::read_header(in, path, detail::file_size_of(path));
  if (row_start > h.rows || row_count > h.rows - row_start) {
    throw InputError(path.string() + ": rows [" + std::to_string(row_start) + ", " +
                     std::to_string(row_start + row_count) + ") outside 0.." +
                     std::to_string(h.rows));
  }
  const std::uint64_t row_bytes = h.cols * 8;
  in.seekg(static_cast<std::streamoff>(kMatrixHeaderBytes + row_start * row_bytes));
  std::vector<unsigned char> raw(static_cast<std::size_t>(row_count * row_bytes));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw PayloadSizeError(path.string() + ": short read");
  }
  MatrixXd out(static_cast<Index>(row_count), static_cast<Index>(h.cols));
  detail::decode_rows(raw, out);
  return out;
}

}  // namespace uoi
