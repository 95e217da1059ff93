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

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace amswave {

/// 17 significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double x);

/// Pretty JSON with two-space indent, doubles at 17 significant digits and
/// non-finite doubles as null.
std::string dump_json(const nlohmann::ordered_json& j);

/// Comma-separated table with a header row and LF line endings.
class CsvTable {
  public:
    using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

    explicit CsvTable(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_.size(); }
    /// Throws std::invalid_argument on a width mismatch.
    void add_row(std::vector<Cell> row);
    void write(std::ostream& out) const;
    std::string str() const;

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace amswave
