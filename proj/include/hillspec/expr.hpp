#pragma once

#include <complex>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "hillspec/errors.hpp"

namespace hillspec::expr {

using cplx = std::complex<double>;

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Fn { Sin, Cos, Tan, Exp, Sinh, Cosh, Abs, Re, Im };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  cplx value;
};
struct VariableX {};
struct Negate {
  NodePtr arg;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};
struct Call {
  Fn fn;
  NodePtr arg;
};

struct Node {
  std::variant<Number, VariableX, Negate, Binary, Call> v;
};

inline constexpr std::size_t kMaxSourceLength = 4096;
inline constexpr int kMaxDepth = 64;

/// Grammar, loosest to tightest binding: add/sub (left), mul/div (left),
/// unary minus, pow (right-assoc). Literals: decimal reals, "i", "pi", "e".
/// Function application requires parentheses; implicit multiplication is
/// rejected.
NodePtr parse(std::string_view source);

cplx eval(const Node& ast, double x);
inline cplx eval(const NodePtr& ast, double x) { return eval(*ast, x); }

/// Canonical fully parenthesized text; reparsing yields a structurally
/// identical tree for any tree produced by parse().
std::string to_string(const Node& ast);
inline std::string to_string(const NodePtr& ast) { return to_string(*ast); }

bool structurally_equal(const Node& a, const Node& b);
int depth(const Node& ast);
const char* fn_name(Fn fn);

}  // namespace hillspec::expr
