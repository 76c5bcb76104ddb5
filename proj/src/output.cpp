#include "etop/output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "etop/errors.hpp"

namespace etop {

std::string format_double(double value) {
    std::array<char, 64> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

std::string hash_hex(std::uint64_t hash) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[hash & 0xf];
        hash >>= 4;
    }
    return s;
}

CsvWriter::CsvWriter(const std::string& path, std::uint64_t config_hash,
                     const std::vector<std::string>& columns)
    : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open output file " + path);
    out_ << "# config_hash=" << hash_hex(config_hash) << "\n";
    for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
}

void CsvWriter::write_row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i)
        out_ << (i ? "," : "") << format_double(values[i]);
    out_ << "\n";
}

void CsvWriter::write_row_mixed(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
}

void write_density_pgm(const std::string& path, std::uint64_t config_hash,
                       const Eigen::VectorXd& field, const std::array<int, 3>& cells,
                       int dimension, bool binarize, double threshold) {
    const int nx = cells[0], ny = cells[1];
    const int nz = (dimension == 3) ? cells[2] : 1;
    if (field.size() != static_cast<Eigen::Index>(nx) * ny * nz)
        throw DomainError("density field does not match the grid");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file " + path);
    out << "P5\n# config_hash=" << hash_hex(config_hash) << "\n"
        << nx << " " << ny * nz << "\n255\n";
    // Rows top-down per slice so y points up in the image.
    for (int k = 0; k < nz; ++k)
        for (int j = ny - 1; j >= 0; --j)
            for (int i = 0; i < nx; ++i) {
                double v = field[i + nx * (j + static_cast<std::ptrdiff_t>(ny) * k)];
                if (binarize) v = (v >= threshold) ? 1.0 : 0.0;
                v = std::clamp(v, 0.0, 1.0);
                out.put(static_cast<char>(std::lround(v * 255.0)));
            }
}

}  // namespace etop
