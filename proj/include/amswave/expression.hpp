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

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace amswave {

/// Parse error with a 1-based line and column into the source text.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& message, std::size_t line, std::size_t column);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& detail() const { return detail_; }

  private:
    std::size_t line_;
    std::size_t column_;
    std::string detail_;
};

/**
 * Closed-form expression over y1..yd.
 *
 * Grammar (lowest to highest precedence):
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := ('-' | '+') unary | power
 *   power   := primary ('^' unary)?          right associative
 *   primary := number | 'y' digits | func '(' expr ')' | '(' expr ')'
 *   func    := exp | tanh | sin | cos
 *
 * so -y1^2 is -(y1^2) and 2^3^2 is 2^9.
 */
class Expression {
  public:
    struct Node;

    /// Throws ParseError. Variables past y<dim> are rejected when dim > 0.
    static Expression parse(const std::string& source, std::size_t dim = 0);

    double operator()(std::span<const double> y) const;
    const std::string& source() const { return source_; }
    /// Largest variable index used (0 when constant).
    std::size_t max_variable() const { return max_var_; }

  private:
    std::string source_;
    std::shared_ptr<const Node> root_;
    std::size_t max_var_ = 0;
};

} // namespace amswave
