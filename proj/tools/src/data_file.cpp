#include "bitsmooth/cli/data_file.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bitsmooth::cli {
namespace {

void strip_zeros(std::string& s) {
    if (s.find('.') == std::string::npos) return;
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? " " : "") + items[i];
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

std::string format_value(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.8e", value);
    const int exponent = std::atoi(std::strchr(buf, 'e') + 1);
    if (exponent >= 6 || exponent <= -6) {
        std::string s(buf);
        const auto e = s.find('e');
        std::string mantissa = s.substr(0, e);
        strip_zeros(mantissa);
        return mantissa + s.substr(e);
    }
    std::snprintf(buf, sizeof buf, "%.*f", 8 - exponent, value);
    std::string s(buf);
    strip_zeros(s);
    if (s == "-0") s = "0";
    return s;
}

void DataTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_value(v));
    rows.push_back(std::move(row));
}

void write_data_file(const std::string& path, const std::string& config_hash,
                     const DataTable& table) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << "# config-hash: " << config_hash << "\n";
        out << "# columns: " << join(table.columns) << "\n";
        if (!table.units.empty()) out << "# units: " << join(table.units) << "\n";
        for (const auto& row : table.rows) out << join(row) << "\n";
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot move output into place at '" + path + "'");
    }
}

double DataFile::number(std::size_t row, std::size_t column) const {
    const std::string& cell = table.rows.at(row).at(column);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || *end != '\0') throw std::runtime_error("not a number: '" + cell + "'");
    return v;
}

std::size_t DataFile::column(const std::string& name) const {
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        if (table.columns[i] == name) return i;
    throw std::runtime_error("no column '" + name + "'");
}

DataFile read_data_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    DataFile file;
    std::string line;
    const std::string hash_tag = "# config-hash: ";
    const std::string columns_tag = "# columns: ";
    const std::string units_tag = "# units: ";
    if (!std::getline(in, line) || line.rfind(hash_tag, 0) != 0)
        throw std::runtime_error(path + ": line 1 must be '# config-hash: <hex>'");
    file.config_hash = line.substr(hash_tag.size());
    if (!std::getline(in, line) || line.rfind(columns_tag, 0) != 0)
        throw std::runtime_error(path + ": line 2 must be '# columns: <names>'");
    file.table.columns = split(line.substr(columns_tag.size()));
    while (std::getline(in, line)) {
        if (line.rfind(units_tag, 0) == 0) {
            file.table.units = split(line.substr(units_tag.size()));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        auto row = split(line);
        if (row.size() != file.table.columns.size())
            throw std::runtime_error(path + ": row with " + std::to_string(row.size()) +
                                     " cells, expected " +
                                     std::to_string(file.table.columns.size()));
        file.table.rows.push_back(std::move(row));
    }
    return file;
}

}  // namespace bitsmooth::cli
