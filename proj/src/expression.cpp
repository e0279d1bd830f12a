#include "finsler_flow/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace finsler_flow {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(message)
    , line_(line)
    , column_(column)
{
}

namespace expr {
namespace {

NodePtr constant(double v)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Constant;
    n->value = v;
    return n;
}

NodePtr variable(int index)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Variable;
    n->index = index;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Constant && n->value == v; }

// The builders below fold constants and drop neutral elements so that the
// derivative trees stay small.
NodePtr unary(Op op, NodePtr a)
{
    if (a->op == Op::Constant) {
        switch (op) {
        case Op::Neg:
            return constant(-a->value);
        case Op::Exp:
            return constant(std::exp(a->value));
        case Op::Log:
            return constant(std::log(a->value));
        case Op::Tanh:
            return constant(std::tanh(a->value));
        default:
            break;
        }
    }
    if (op == Op::Neg && a->op == Op::Neg)
        return a->lhs;
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(a);
    return n;
}

NodePtr binary(Op op, NodePtr a, NodePtr b)
{
    if (a->op == Op::Constant && b->op == Op::Constant) {
        switch (op) {
        case Op::Add:
            return constant(a->value + b->value);
        case Op::Sub:
            return constant(a->value - b->value);
        case Op::Mul:
            return constant(a->value * b->value);
        case Op::Div:
            return constant(a->value / b->value);
        case Op::Pow:
            return constant(std::pow(a->value, b->value));
        default:
            break;
        }
    }
    switch (op) {
    case Op::Add:
        if (is_const(a, 0.0))
            return b;
        if (is_const(b, 0.0))
            return a;
        break;
    case Op::Sub:
        if (is_const(b, 0.0))
            return a;
        if (is_const(a, 0.0))
            return unary(Op::Neg, b);
        break;
    case Op::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0))
            return constant(0.0);
        if (is_const(a, 1.0))
            return b;
        if (is_const(b, 1.0))
            return a;
        if (is_const(a, -1.0))
            return unary(Op::Neg, b);
        if (is_const(b, -1.0))
            return unary(Op::Neg, a);
        break;
    case Op::Div:
        if (is_const(a, 0.0))
            return constant(0.0);
        if (is_const(b, 1.0))
            return a;
        break;
    case Op::Pow:
        if (is_const(b, 0.0))
            return constant(1.0);
        if (is_const(b, 1.0))
            return a;
        break;
    default:
        break;
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

NodePtr differentiate(const NodePtr& n, int var)
{
    switch (n->op) {
    case Op::Constant:
        return constant(0.0);
    case Op::Variable:
        return constant(n->index == var ? 1.0 : 0.0);
    case Op::Add:
        return binary(Op::Add, differentiate(n->lhs, var), differentiate(n->rhs, var));
    case Op::Sub:
        return binary(Op::Sub, differentiate(n->lhs, var), differentiate(n->rhs, var));
    case Op::Mul:
        return binary(Op::Add, binary(Op::Mul, differentiate(n->lhs, var), n->rhs),
                      binary(Op::Mul, n->lhs, differentiate(n->rhs, var)));
    case Op::Div: {
        // (u/v)' = u'/v - u v' / v^2
        auto du = differentiate(n->lhs, var);
        auto dv = differentiate(n->rhs, var);
        return binary(Op::Sub, binary(Op::Div, du, n->rhs),
                      binary(Op::Div, binary(Op::Mul, n->lhs, dv), binary(Op::Pow, n->rhs, constant(2.0))));
    }
    case Op::Pow: {
        auto du = differentiate(n->lhs, var);
        if (n->rhs->op == Op::Constant) {
            const double e = n->rhs->value;
            return binary(Op::Mul, binary(Op::Mul, constant(e), binary(Op::Pow, n->lhs, constant(e - 1.0))), du);
        }
        // (u^v)' = u^v (v' log u + v u'/u)
        auto dv = differentiate(n->rhs, var);
        auto inner = binary(Op::Add, binary(Op::Mul, dv, unary(Op::Log, n->lhs)),
                            binary(Op::Div, binary(Op::Mul, n->rhs, du), n->lhs));
        return binary(Op::Mul, n, inner);
    }
    case Op::Neg:
        return unary(Op::Neg, differentiate(n->lhs, var));
    case Op::Exp:
        return binary(Op::Mul, n, differentiate(n->lhs, var));
    case Op::Log:
        return binary(Op::Div, differentiate(n->lhs, var), n->lhs);
    case Op::Tanh: {
        // tanh' = 1 - tanh^2
        auto sech2 = binary(Op::Sub, constant(1.0), binary(Op::Pow, n, constant(2.0)));
        return binary(Op::Mul, sech2, differentiate(n->lhs, var));
    }
    }
    return constant(0.0);
}

int max_var(const Node& n)
{
    int m = n.op == Op::Variable ? n.index : -1;
    if (n.lhs)
        m = std::max(m, max_var(*n.lhs));
    if (n.rhs)
        m = std::max(m, max_var(*n.rhs));
    return m;
}

void print(const Node& n, std::ostream& os)
{
    switch (n.op) {
    case Op::Constant: {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << n.value;
        os << tmp.str();
        return;
    }
    case Op::Variable:
        os << 'x' << (n.index + 1);
        return;
    case Op::Neg:
        os << "(-";
        print(*n.lhs, os);
        os << ')';
        return;
    case Op::Exp:
    case Op::Log:
    case Op::Tanh:
        os << (n.op == Op::Exp ? "exp(" : n.op == Op::Log ? "log(" : "tanh(");
        print(*n.lhs, os);
        os << ')';
        return;
    default:
        break;
    }
    const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : n.op == Op::Div ? "/" : "^";
    os << '(';
    print(*n.lhs, os);
    os << sym;
    print(*n.rhs, os);
    os << ')';
}

// Recursive-descent parser. Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary (('^' | '**') unary)?
//   primary := number | name | name '(' expr ')' | '(' expr ')'
class Parser {
public:
    Parser(std::string_view text, const std::map<std::string, double>& constants)
        : text_(text)
        , constants_(constants)
    {
    }

    NodePtr parse()
    {
        auto n = parse_expr();
        skip_space();
        if (pos_ < text_.size())
            fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ParseError("expression: " + msg + " at column " + std::to_string(pos_ + 1), 1,
                         static_cast<int>(pos_) + 1);
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr()
    {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = binary(Op::Add, lhs, parse_term());
            else if (accept('-'))
                lhs = binary(Op::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term()
    {
        auto lhs = parse_unary();
        for (;;) {
            skip_space();
            if (pos_ + 1 < text_.size() && text_[pos_] == '*' && text_[pos_ + 1] == '*')
                return lhs; // handled by parse_power
            if (accept('*'))
                lhs = binary(Op::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = binary(Op::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-'))
            return unary(Op::Neg, parse_unary());
        if (accept('+'))
            return parse_unary();
        return parse_power();
    }

    NodePtr parse_power()
    {
        auto base = parse_primary();
        skip_space();
        if (accept('^'))
            return binary(Op::Pow, base, parse_unary());
        if (pos_ + 1 < text_.size() && text_[pos_] == '*' && text_[pos_ + 1] == '*') {
            pos_ += 2;
            return binary(Op::Pow, base, parse_unary());
        }
        return base;
    }

    NodePtr parse_primary()
    {
        skip_space();
        if (pos_ >= text_.size())
            fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto n = parse_expr();
            if (!accept(')'))
                fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return parse_name();
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    NodePtr parse_number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-'))
                ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        const std::string token(text_.substr(start, pos_ - start));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            pos_ = start;
            fail("malformed number '" + token + "'");
        }
        if (used != token.size()) {
            pos_ = start;
            fail("malformed number '" + token + "'");
        }
        return constant(v);
    }

    NodePtr parse_name()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            Op op;
            if (name == "exp")
                op = Op::Exp;
            else if (name == "log")
                op = Op::Log;
            else if (name == "tanh")
                op = Op::Tanh;
            else {
                pos_ = start;
                fail("unknown function '" + name + "'");
            }
            ++pos_;
            auto arg = parse_expr();
            if (!accept(')'))
                fail("expected ')'");
            return unary(op, arg);
        }
        if (auto it = constants_.find(name); it != constants_.end())
            return constant(it->second);
        if (name.size() > 1 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
            if (digits) {
                const int k = std::stoi(name.substr(1));
                if (k >= 1)
                    return variable(k - 1);
            }
        }
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    std::string_view text_;
    const std::map<std::string, double>& constants_;
    std::size_t pos_ = 0;
};

} // namespace
} // namespace expr

Expression::Expression()
    : root_(expr::constant(0.0))
{
}

Expression::Expression(expr::NodePtr root)
    : root_(std::move(root))
{
}

Expression Expression::derivative(int index) const { return Expression(expr::differentiate(root_, index)); }

int Expression::max_variable() const { return expr::max_var(*root_); }

std::string Expression::to_string() const
{
    std::ostringstream os;
    expr::print(*root_, os);
    return os.str();
}

Expression parse_expression(std::string_view text, const std::map<std::string, double>& constants)
{
    return Expression(expr::Parser(text, constants).parse());
}

} // namespace finsler_flow
