#pragma once

#include <string>
#include <variant>
#include <vector>

namespace paramres::cli {

/// Blank cell for not-applicable columns.
struct Blank {};
using Cell = std::variant<Blank, double, long, std::string>;

struct Column {
    std::string name;
    std::string unit;  ///< empty for dimensionless
};

struct Table {
    std::string name;  ///< file stem
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;

    std::size_t column(const std::string& n) const;
    double number(std::size_t row, const std::string& col) const;
};

enum class Format { csv, json };
Format parse_format(const std::string& s);

/// 17 significant digits, '.' decimal.
std::string format_double(double v);

std::string to_csv(const Table& t);
std::string to_json(const Table& t);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& data);

}  // namespace paramres::cli
