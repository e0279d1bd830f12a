#pragma once

#include "finsler_flow/dense.hpp"

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace finsler_flow {

/// Raised for malformed expressions and configuration documents. Line and
/// column are 1-based; zero means "not applicable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, int line, int column);

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

namespace expr {

enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Tanh };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Constant;
    double value = 0.0; // Constant
    int index = -1;     // Variable, 0-based
    NodePtr lhs;
    NodePtr rhs;
};

} // namespace expr

/// Immutable scalar expression over variables x1..xn built from arithmetic,
/// powers, exp, log and tanh. Evaluation is reentrant.
class Expression {
public:
    Expression();
    explicit Expression(expr::NodePtr root);

    template <typename Scalar>
    Scalar evaluate(const VectorX<Scalar>& x) const
    {
        return eval_node<Scalar>(*root_, x);
    }

    /// Symbolic partial derivative with respect to variable `index` (0-based).
    Expression derivative(int index) const;

    /// Largest 0-based variable index referenced, or -1 for a constant.
    int max_variable() const;

    bool is_constant() const { return root_->op == expr::Op::Constant; }
    double constant_value() const { return root_->value; }

    std::string to_string() const;

    const expr::NodePtr& root() const { return root_; }

private:
    template <typename Scalar>
    static Scalar eval_node(const expr::Node& node, const VectorX<Scalar>& x)
    {
        using std::exp;
        using std::log;
        using std::pow;
        using std::tanh;
        switch (node.op) {
        case expr::Op::Constant:
            return Scalar(node.value);
        case expr::Op::Variable:
            return x[node.index];
        case expr::Op::Add:
            return eval_node(*node.lhs, x) + eval_node(*node.rhs, x);
        case expr::Op::Sub:
            return eval_node(*node.lhs, x) - eval_node(*node.rhs, x);
        case expr::Op::Mul:
            return eval_node(*node.lhs, x) * eval_node(*node.rhs, x);
        case expr::Op::Div:
            return eval_node(*node.lhs, x) / eval_node(*node.rhs, x);
        case expr::Op::Pow: {
            const Scalar base = eval_node(*node.lhs, x);
            if (node.rhs->op == expr::Op::Constant) {
                const double e = node.rhs->value;
                if (e == 2.0)
                    return base * base;
                if (e == 3.0)
                    return base * base * base;
                return pow(base, Scalar(e));
            }
            return pow(base, eval_node(*node.rhs, x));
        }
        case expr::Op::Neg:
            return -eval_node(*node.lhs, x);
        case expr::Op::Exp:
            return exp(eval_node(*node.lhs, x));
        case expr::Op::Log:
            return log(eval_node(*node.lhs, x));
        case expr::Op::Tanh:
            return tanh(eval_node(*node.lhs, x));
        }
        return Scalar(0);
    }

    expr::NodePtr root_;
};

/// Parses `text`. Identifiers x1, x2, ... are state variables; any other
/// identifier must be a key of `constants`. Errors report the 1-based column.
Expression parse_expression(std::string_view text, const std::map<std::string, double>& constants = {});

} // namespace finsler_flow
