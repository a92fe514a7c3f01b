#include "paramres/cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <openssl/evp.h>

#include "json.hpp"
#include "paramres/cli/config.hpp"

namespace paramres::cli {

std::size_t Table::column(const std::string& n) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == n) return i;
    throw std::out_of_range("table " + name + ": no column " + n);
}

double Table::number(std::size_t row, const std::string& col) const
{
    const Cell& c = rows.at(row).at(column(col));
    if (auto* d = std::get_if<double>(&c)) return *d;
    if (auto* l = std::get_if<long>(&c)) return static_cast<double>(*l);
    throw std::invalid_argument("table " + name + ": column " + col + " is not numeric");
}

Format parse_format(const std::string& s)
{
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ConfigError("--format: expected csv or json");
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string cell_text(const Cell& c)
{
    if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
    if (std::holds_alternative<long>(c)) return std::to_string(std::get<long>(c));
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    return "";
}

}  // namespace

std::string to_csv(const Table& t)
{
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ',';
        out += t.columns[i].name;
        if (!t.columns[i].unit.empty()) out += " [" + t.columns[i].unit + "]";
    }
    out += '\n';
    for (auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += cell_text(row[i]);
        }
        out += '\n';
    }
    return out;
}

std::string to_json(const Table& t)
{
    nlohmann::ordered_json j;
    j["table"] = t.name;
    auto& cols = j["columns"] = nlohmann::ordered_json::array();
    for (auto& c : t.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
    auto& rows = j["rows"] = nlohmann::ordered_json::array();
    for (auto& row : t.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (auto& c : row) {
            if (std::holds_alternative<Blank>(c)) r.push_back(nullptr);
            else if (auto* d = std::get_if<double>(&c)) {
                // JSON has no inf/nan; keep the 17-digit text for those
                if (std::isfinite(*d)) r.push_back(*d);
                else r.push_back(format_double(*d));
            } else if (auto* l = std::get_if<long>(&c)) r.push_back(*l);
            else r.push_back(std::get<std::string>(c));
        }
        rows.push_back(std::move(r));
    }
    return j.dump(1) + "\n";
}

std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

}  // namespace paramres::cli
