#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace etop {

/// Shortest round-trip decimal form of a double ('.' decimal separator).
std::string format_double(double value);

std::string hash_hex(std::uint64_t hash);

/// CSV with a config-hash comment line followed by the column header. Values
/// are written with shortest round-trip formatting so identical runs produce
/// identical bytes.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::uint64_t config_hash,
              const std::vector<std::string>& columns);

    void write_row(const std::vector<double>& values);
    void write_row_mixed(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
};

/// 8-bit PGM image of a density field on the structured grid; 0 = void,
/// 255 = solid. 3D grids are written as z-slices stacked vertically.
void write_density_pgm(const std::string& path, std::uint64_t config_hash,
                       const Eigen::VectorXd& field, const std::array<int, 3>& cells,
                       int dimension, bool binarize, double threshold = 0.5);

}  // namespace etop
