/*
   Copyright 2026 The amswave Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "amswave/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace amswave {

std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void indent(std::string& out, int level)
{
    out.append(static_cast<std::size_t>(level) * 2, ' ');
}

void emit(const nlohmann::ordered_json& j, std::string& out, int level)
{
    using value_t = nlohmann::ordered_json::value_t;
    switch (j.type()) {
    case value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        std::size_t i = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++i) {
            indent(out, level + 1);
            out += nlohmann::ordered_json(it.key()).dump();
            out += ": ";
            emit(it.value(), out, level + 1);
            out += i + 1 < j.size() ? ",\n" : "\n";
        }
        indent(out, level);
        out += "}";
        return;
    }
    case value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // Arrays of scalars stay on one line.
        bool flat = true;
        for (const auto& v : j) flat = flat && !v.is_structured();
        if (flat) {
            out += "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ", ";
                emit(j[i], out, level);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            indent(out, level + 1);
            emit(j[i], out, level + 1);
            out += i + 1 < j.size() ? ",\n" : "\n";
        }
        indent(out, level);
        out += "]";
        return;
    }
    case value_t::number_float: {
        const double x = j.get<double>();
        if (!std::isfinite(x)) {
            out += "null";
            return;
        }
        std::string s = format_double(x);
        // Keep floats recognisable as floats when read back.
        if (s.find_first_of(".eE") == std::string::npos) s += ".0";
        out += s;
        return;
    }
    default:
        out += j.dump();
        return;
    }
}

} // namespace

std::string dump_json(const nlohmann::ordered_json& j)
{
    std::string out;
    emit(j, out, 0);
    out += "\n";
    return out;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<Cell> row)
{
    if (row.size() != columns_.size()) throw std::invalid_argument("CsvTable: row width does not match header");
    rows_.push_back(std::move(row));
}

namespace {

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

void CsvTable::write(std::ostream& out) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << quote(columns_[i]);
    out << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out << format_double(v);
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        out << quote(v);
                    } else {
                        out << v;
                    }
                },
                row[i]);
        }
        out << '\n';
    }
}

std::string CsvTable::str() const
{
    std::ostringstream ss;
    write(ss);
    return ss.str();
}

} // namespace amswave
