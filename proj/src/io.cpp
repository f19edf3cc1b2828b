#include "mfa/io.hpp"

#include "mfa/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace mfa::io {

namespace {

constexpr std::array<char, 6> kMagic = {'M', 'T', 'E', 'N', '1', '\0'};

static_assert(std::endian::native == std::endian::little,
              ".mten I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw IoError("truncated tensor file " + path.string());
    return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

double parse_double(const std::string& text, const std::filesystem::path& path) {
    std::size_t begin = text.find_first_not_of(" \t\r");
    std::size_t end = text.find_last_not_of(" \t\r");
    if (begin == std::string::npos) throw IoError("empty CSV cell in " + path.string());
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data() + begin, text.data() + end + 1, value);
    if (ec != std::errc() || ptr != text.data() + end + 1)
        throw IoError("bad number '" + text + "' in " + path.string());
    return value;
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.order()));
    for (auto d : t.dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::array<char, 6> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw IoError(path.string() + " is not an .mten file");
    auto order = get<std::uint32_t>(in, path);
    if (order == 0) throw IoError(path.string() + " declares zero modes");
    Dims dims(order);
    for (auto& d : dims) d = get<std::uint32_t>(in, path);
    std::size_t count = product(dims);
    std::vector<double> values(count);
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
        throw IoError("truncated tensor file " + path.string());
    try {
        return Tensor(std::move(dims), std::move(values));
    } catch (const DimensionError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ostringstream out;
    out << m.rows() << ',' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    write_text(path, out.str());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
    auto header = split(line, ',');
    if (header.size() != 2) throw IoError(path.string() + ": header must be 'rows,cols'");
    auto rows = static_cast<Eigen::Index>(parse_double(header[0], path));
    auto cols = static_cast<Eigen::Index>(parse_double(header[1], path));
    if (rows < 0 || cols < 0) throw IoError(path.string() + ": negative matrix shape");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line))
            throw IoError(path.string() + ": expected " + std::to_string(rows) + " rows");
        auto cells = split(line, ',');
        if (static_cast<Eigen::Index>(cells.size()) != cols)
            throw IoError(path.string() + ": row " + std::to_string(i) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(cols));
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = parse_double(cells[static_cast<std::size_t>(j)], path);
    }
    return m;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mfa::io
