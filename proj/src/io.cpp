#include "topogen/io.hpp"

#include "topogen/error.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace topogen::io {

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
    std::array<char, sizeof(T)> buf{};
    std::memcpy(buf.data(), &v, sizeof(T));
    os.write(buf.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    std::array<char, sizeof(T)> buf{};
    if (!is.read(buf.data(), sizeof(T))) throw InputError("unexpected end of binary stream");
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

} // namespace

void write_u8(std::ostream& os, std::uint8_t v) { write_le(os, v); }
void write_u16(std::ostream& os, std::uint16_t v) { write_le(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le(os, v); }
void write_f64(std::ostream& os, double v) { write_le(os, v); }
std::uint8_t read_u8(std::istream& is) { return read_le<std::uint8_t>(is); }
std::uint16_t read_u16(std::istream& is) { return read_le<std::uint16_t>(is); }
std::uint32_t read_u32(std::istream& is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return read_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return read_le<double>(is); }

void expect_magic(std::istream& is, std::string_view magic, std::string_view what) {
    std::string got(magic.size(), '\0');
    if (!is.read(got.data(), static_cast<std::streamsize>(magic.size())) || got != magic)
        throw InputError(std::string(what) + ": bad magic, expected '" + std::string(magic) + "'");
}

PointCloud read_xyz(std::istream& is) {
    PointCloud c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        Vec3 p{};
        if (!(ls >> p[0])) continue;
        if (!(ls >> p[1] >> p[2]))
            throw InputError("xyz line " + std::to_string(lineno) + ": expected three coordinates");
        std::string extra;
        if (ls >> extra) throw InputError("xyz line " + std::to_string(lineno) + ": trailing data");
        for (double v : p)
            if (!std::isfinite(v))
                throw InputError("xyz line " + std::to_string(lineno) + ": non-finite coordinate");
        c.points.push_back(p);
    }
    return c;
}

void write_xyz(std::ostream& os, const PointCloud& cloud) {
    std::ostringstream ss;
    ss.precision(17);
    for (const auto& p : cloud.points) ss << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    os << ss.str();
}

PointCloud read_tpc(std::istream& is) {
    expect_magic(is, "TPC1", "point cloud");
    const std::uint32_t n = read_u32(is);
    PointCloud c;
    c.points.resize(n);
    for (auto& p : c.points)
        for (auto& v : p) v = read_f64(is);
    return c;
}

void write_tpc(std::ostream& os, const PointCloud& cloud) {
    os.write("TPC1", 4);
    write_u32(os, static_cast<std::uint32_t>(cloud.points.size()));
    for (const auto& p : cloud.points)
        for (double v : p) write_f64(os, v);
}

PointCloud load_cloud(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open point cloud " + path.string());
    PointCloud c = path.extension() == ".tpc" ? read_tpc(in) : read_xyz(in);
    c.id = path.stem().string();
    return c;
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    if (path.extension() == ".tpc")
        write_tpc(out, cloud);
    else
        write_xyz(out, cloud);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string content_hash(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return out;
}

} // namespace topogen::io
