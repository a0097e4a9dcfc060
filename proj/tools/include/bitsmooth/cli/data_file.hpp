// Whitespace-separated data files with a '#' header:
//   # config-hash: <hex>
//   # columns: <names>
//   # units: <units>            (optional)
// Files are written to a temporary sibling and renamed into place, so an
// interrupted run never leaves a partial file behind.
#pragma once

#include <string>
#include <vector>

namespace bitsmooth::cli {

/// 9 significant digits; lowercase scientific notation when the decimal
/// exponent is >= 6 in magnitude, fixed notation otherwise. Trailing zeros
/// are dropped.
std::string format_value(double value);

struct DataTable {
    std::vector<std::string> columns;
    std::vector<std::string> units;  // empty, or one per column
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& values);
};

void write_data_file(const std::string& path, const std::string& config_hash,
                     const DataTable& table);

struct DataFile {
    std::string config_hash;
    DataTable table;

    /// Numeric value of a cell; throws std::runtime_error if not a number.
    double number(std::size_t row, std::size_t column) const;
    std::size_t column(const std::string& name) const;
};

/// Throws std::runtime_error on a missing header or ragged rows.
DataFile read_data_file(const std::string& path);

}  // namespace bitsmooth::cli
