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

#include "amswave/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

namespace amswave {

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line), column_(column), detail_(message)
{}

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Tanh, Sin, Cos };

struct Expression::Node {
    Op op = Op::Const;
    double value = 0.0;
    std::size_t var = 0;  // 0-based
    std::shared_ptr<const Node> a, b;

    double eval(std::span<const double> y) const
    {
        switch (op) {
        case Op::Const: return value;
        case Op::Var: return y[var];
        case Op::Neg: return -a->eval(y);
        case Op::Add: return a->eval(y) + b->eval(y);
        case Op::Sub: return a->eval(y) - b->eval(y);
        case Op::Mul: return a->eval(y) * b->eval(y);
        case Op::Div: return a->eval(y) / b->eval(y);
        case Op::Pow: return std::pow(a->eval(y), b->eval(y));
        case Op::Exp: return std::exp(a->eval(y));
        case Op::Tanh: return std::tanh(a->eval(y));
        case Op::Sin: return std::sin(a->eval(y));
        case Op::Cos: return std::cos(a->eval(y));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr)
{
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
  public:
    Parser(const std::string& src, std::size_t dim) : src_(src), dim_(dim) {}

    NodePtr parse()
    {
        skip();
        if (pos_ == src_.size()) fail("empty expression", pos_);
        NodePtr e = expr();
        skip();
        if (pos_ != src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return e;
    }

    std::size_t max_var() const { return max_var_; }

  private:
    [[noreturn]] void fail(const std::string& msg, std::size_t at) const
    {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < at && i < src_.size(); ++i) {
            if (src_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(msg, line, col);
    }

    void skip()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make(Op::Add, lhs, term());
            } else if (accept('-')) {
                lhs = make(Op::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make(Op::Mul, lhs, unary());
            } else if (accept('/')) {
                lhs = make(Op::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary()
    {
        if (accept('-')) return make(Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (accept('^')) return make(Op::Pow, base, unary());
        return base;
    }

    NodePtr primary()
    {
        skip();
        if (pos_ == src_.size()) fail("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            const std::size_t open = pos_++;
            NodePtr e = expr();
            if (!accept(')')) fail("expected ')' to close '(' opened here", open);
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            const std::string name = src_.substr(start, pos_ - start);
            if (name.size() > 1 && name[0] == 'y' &&
                name.find_first_not_of("0123456789", 1) == std::string::npos) {
                std::size_t index = 0;
                std::from_chars(name.data() + 1, name.data() + name.size(), index);
                if (index == 0) fail("variables are numbered from y1", start);
                if (dim_ && index > dim_) {
                    fail("variable '" + name + "' exceeds the model dimension " + std::to_string(dim_), start);
                }
                max_var_ = std::max(max_var_, index);
                auto n = std::make_shared<Expression::Node>();
                n->op = Op::Var;
                n->var = index - 1;
                return n;
            }
            Op op;
            if (name == "exp") {
                op = Op::Exp;
            } else if (name == "tanh") {
                op = Op::Tanh;
            } else if (name == "sin") {
                op = Op::Sin;
            } else if (name == "cos") {
                op = Op::Cos;
            } else {
                fail("unknown identifier '" + name + "'", start);
            }
            if (!accept('(')) fail("expected '(' after '" + name + "'", pos_);
            skip();
            if (pos_ == src_.size()) fail("unclosed call to '" + name + "'", start);
            NodePtr arg = expr();
            if (!accept(')')) fail("unclosed call to '" + name + "'", start);
            return make(op, arg);
        }
        fail(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr number()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
                pos_ = p;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != src_.data() + pos_) fail("malformed number", start);
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Const;
        n->value = v;
        return n;
    }

    const std::string& src_;
    std::size_t dim_;
    std::size_t pos_ = 0;
    std::size_t max_var_ = 0;
};

} // namespace

Expression Expression::parse(const std::string& source, std::size_t dim)
{
    Parser p(source, dim);
    Expression e;
    e.root_ = p.parse();
    e.source_ = source;
    e.max_var_ = p.max_var();
    return e;
}

double Expression::operator()(std::span<const double> y) const
{
    if (y.size() < max_var_) throw std::invalid_argument("expression evaluated with too few coordinates");
    return root_->eval(y);
}

} // namespace amswave
