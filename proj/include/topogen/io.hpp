#pragma once

#include "topogen/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace topogen::io {

// Little-endian primitive codecs shared by the binary formats.
void write_u8(std::ostream& os, std::uint8_t v);
void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint8_t read_u8(std::istream& is);
std::uint16_t read_u16(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
void expect_magic(std::istream& is, std::string_view magic, std::string_view what);

/// Text: one "x y z" line per point, '#' starts a comment.
PointCloud read_xyz(std::istream& is);
void write_xyz(std::ostream& os, const PointCloud& cloud);

/// Binary: "TPC1", u32 N, N*3 little-endian f64.
PointCloud read_tpc(std::istream& is);
void write_tpc(std::ostream& os, const PointCloud& cloud);

/// Dispatches on extension: ".tpc" binary, anything else text.
PointCloud load_cloud(const std::filesystem::path& path);
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// FNV-1a 64 as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);

} // namespace topogen::io
