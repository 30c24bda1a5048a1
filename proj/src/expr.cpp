#include "hillspec/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

namespace hillspec::expr {

namespace {

struct FnEntry {
  std::string_view name;
  Fn fn;
};

constexpr std::array<FnEntry, 9> kFunctions{{
    {"sin", Fn::Sin},
    {"cos", Fn::Cos},
    {"tan", Fn::Tan},
    {"exp", Fn::Exp},
    {"sinh", Fn::Sinh},
    {"cosh", Fn::Cosh},
    {"abs", Fn::Abs},
    {"re", Fn::Re},
    {"im", Fn::Im},
}};

NodePtr make(decltype(Node::v) v) {
  return std::make_shared<Node>(Node{std::move(v)});
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr run() {
    NodePtr e = parse_sum(0);
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError(pos_, "operator or end of input",
                       "unexpected input at offset " + std::to_string(pos_) +
                           " (implicit multiplication is not supported)");
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != c)
      throw ParseError(pos_, std::string(1, c),
                       std::string("expected '") + c + "' " + what +
                           " at offset " + std::to_string(pos_));
    ++pos_;
  }

  // Recursion guard only; the tree-depth cap is enforced exactly after the
  // parse (parentheses nest the recursion without deepening the tree).
  static constexpr int kMaxRecursion = 400;

  void check_depth(int depth) {
    if (depth > kMaxRecursion)
      throw ParseError(pos_, "shallower expression",
                       "expression nesting exceeds the parser recursion "
                       "limit");
  }

  NodePtr parse_sum(int depth) {
    check_depth(depth);
    NodePtr lhs = parse_product(depth + 1);
    for (;;) {
      if (accept('+'))
        lhs = make(Binary{BinaryOp::Add, lhs, parse_product(depth + 1)});
      else if (accept('-'))
        lhs = make(Binary{BinaryOp::Sub, lhs, parse_product(depth + 1)});
      else
        return lhs;
    }
  }

  NodePtr parse_product(int depth) {
    check_depth(depth);
    NodePtr lhs = parse_unary(depth + 1);
    for (;;) {
      if (accept('*'))
        lhs = make(Binary{BinaryOp::Mul, lhs, parse_unary(depth + 1)});
      else if (accept('/'))
        lhs = make(Binary{BinaryOp::Div, lhs, parse_unary(depth + 1)});
      else
        return lhs;
    }
  }

  // Unary minus binds looser than '^', so -x^2 parses as -(x^2).
  NodePtr parse_unary(int depth) {
    check_depth(depth);
    if (accept('-')) return make(Negate{parse_unary(depth + 1)});
    return parse_power(depth + 1);
  }

  NodePtr parse_power(int depth) {
    check_depth(depth);
    NodePtr base = parse_atom(depth + 1);
    if (accept('^'))
      return make(Binary{BinaryOp::Pow, base, parse_unary(depth + 1)});
    return base;
  }

  NodePtr parse_atom(int depth) {
    check_depth(depth);
    char c = peek();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum(depth + 1);
      expect(')', "to close group");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_identifier(depth);
    throw ParseError(pos_, "number, '(', or identifier",
                     "expected a number, '(' or identifier at offset " +
                         std::to_string(pos_));
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
    }
    // Scientific suffix only when digits actually follow; otherwise the 'e'
    // stays separate (and then trips the no-implicit-multiplication rule).
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;
      }
    }
    double value = 0.0;
    auto [p, ec] =
        std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec == std::errc::result_out_of_range || !std::isfinite(value))
      throw ParseError(start, "finite numeric literal",
                       "numeric literal out of range at offset " +
                           std::to_string(start));
    if (ec != std::errc() || p != src_.data() + pos_)
      throw ParseError(start, "numeric literal",
                       "malformed numeric literal at offset " +
                           std::to_string(start));
    return make(Number{cplx(value, 0.0)});
  }

  NodePtr parse_identifier(int depth) {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return make(VariableX{});
    if (name == "i") return make(Number{cplx(0.0, 1.0)});
    if (name == "pi") return make(Number{cplx(std::numbers::pi, 0.0)});
    if (name == "e") return make(Number{cplx(std::numbers::e, 0.0)});
    for (const auto& entry : kFunctions) {
      if (entry.name == name) {
        expect('(', "for function application");
        NodePtr arg = parse_sum(depth + 1);
        expect(')', "to close function call");
        return make(Call{entry.fn, arg});
      }
    }
    throw UnknownIdentifier(start, std::string(name),
                            "unknown identifier '" + std::string(name) +
                                "' at offset " + std::to_string(start));
  }
};

cplx eval_pow(cplx base, cplx exponent) {
  double n = exponent.real();
  if (exponent.imag() == 0.0 && n == std::nearbyint(n) && std::abs(n) <= 16.0) {
    int k = static_cast<int>(n);
    cplx acc(1.0, 0.0);
    for (int j = 0; j < std::abs(k); ++j) acc *= base;
    if (k >= 0) return acc;
    if (std::abs(acc) < 1e-300)
      throw EvalError("negative power of a (near-)zero base");
    return cplx(1.0, 0.0) / acc;
  }
  return std::pow(base, exponent);
}

}  // namespace

NodePtr parse(std::string_view source) {
  if (source.empty())
    throw ParseError(0, "nonempty expression", "empty expression");
  if (source.size() > kMaxSourceLength)
    throw ParseError(0, "shorter expression",
                     "expression longer than " +
                         std::to_string(kMaxSourceLength) + " bytes");
  NodePtr root = Parser(source).run();
  if (depth(*root) > kMaxDepth)
    throw ParseError(0, "expression of depth <= 64",
                     "expression tree deeper than " +
                         std::to_string(kMaxDepth));
  return root;
}

cplx eval(const Node& ast, double x) {
  struct V {
    double x;
    cplx operator()(const Number& n) const { return n.value; }
    cplx operator()(const VariableX&) const { return cplx(x, 0.0); }
    cplx operator()(const Negate& n) const {
      // 0 - z rather than -z: keeps the imaginary part of a negated real at
      // +0, so principal-branch powers land on the upper side of the cut.
      return cplx(0.0, 0.0) - eval(*n.arg, x);
    }
    cplx operator()(const Binary& b) const {
      cplx l = eval(*b.lhs, x);
      cplx r = eval(*b.rhs, x);
      switch (b.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div:
          if (std::abs(r) < 1e-300) throw EvalError("division by (near-)zero");
          return l / r;
        case BinaryOp::Pow: return eval_pow(l, r);
      }
      return {};
    }
    cplx operator()(const Call& c) const {
      cplx a = eval(*c.arg, x);
      switch (c.fn) {
        case Fn::Sin: return std::sin(a);
        case Fn::Cos: return std::cos(a);
        case Fn::Tan: return std::tan(a);
        case Fn::Exp: return std::exp(a);
        case Fn::Sinh: return std::sinh(a);
        case Fn::Cosh: return std::cosh(a);
        case Fn::Abs: return cplx(std::abs(a), 0.0);
        case Fn::Re: return cplx(a.real(), 0.0);
        case Fn::Im: return cplx(a.imag(), 0.0);
      }
      return {};
    }
  };
  return std::visit(V{x}, ast.v);
}

const char* fn_name(Fn fn) {
  switch (fn) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Tan: return "tan";
    case Fn::Exp: return "exp";
    case Fn::Sinh: return "sinh";
    case Fn::Cosh: return "cosh";
    case Fn::Abs: return "abs";
    case Fn::Re: return "re";
    case Fn::Im: return "im";
  }
  return "?";
}

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Node& n, std::string& out) {
  struct V {
    std::string& out;
    void operator()(const Number& num) const {
      if (num.value == cplx(0.0, 1.0)) {
        out += "i";
      } else if (num.value.imag() == 0.0 && num.value.real() >= 0.0) {
        out += format_real(num.value.real());
      } else {
        // General complex constants are not producible by the grammar; emit
        // an equivalent expression instead.
        out += "(";
        out += format_real(num.value.real());
        out += "+";
        out += format_real(num.value.imag());
        out += "*i)";
      }
    }
    void operator()(const VariableX&) const { out += "x"; }
    void operator()(const Negate& n) const {
      out += "(-";
      print(*n.arg, out);
      out += ")";
    }
    void operator()(const Binary& b) const {
      out += "(";
      print(*b.lhs, out);
      switch (b.op) {
        case BinaryOp::Add: out += "+"; break;
        case BinaryOp::Sub: out += "-"; break;
        case BinaryOp::Mul: out += "*"; break;
        case BinaryOp::Div: out += "/"; break;
        case BinaryOp::Pow: out += "^"; break;
      }
      print(*b.rhs, out);
      out += ")";
    }
    void operator()(const Call& c) const {
      out += fn_name(c.fn);
      out += "(";
      print(*c.arg, out);
      out += ")";
    }
  };
  std::visit(V{out}, n.v);
}

}  // namespace

std::string to_string(const Node& ast) {
  std::string out;
  print(ast, out);
  return out;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.v.index() != b.v.index()) return false;
  struct V {
    const Node& other;
    bool operator()(const Number& n) const {
      return n.value == std::get<Number>(other.v).value;
    }
    bool operator()(const VariableX&) const { return true; }
    bool operator()(const Negate& n) const {
      return structurally_equal(*n.arg, *std::get<Negate>(other.v).arg);
    }
    bool operator()(const Binary& b) const {
      const auto& o = std::get<Binary>(other.v);
      return b.op == o.op && structurally_equal(*b.lhs, *o.lhs) &&
             structurally_equal(*b.rhs, *o.rhs);
    }
    bool operator()(const Call& c) const {
      const auto& o = std::get<Call>(other.v);
      return c.fn == o.fn && structurally_equal(*c.arg, *o.arg);
    }
  };
  return std::visit(V{b}, a.v);
}

int depth(const Node& ast) {
  struct V {
    int operator()(const Number&) const { return 1; }
    int operator()(const VariableX&) const { return 1; }
    int operator()(const Negate& n) const { return 1 + depth(*n.arg); }
    int operator()(const Binary& b) const {
      return 1 + std::max(depth(*b.lhs), depth(*b.rhs));
    }
    int operator()(const Call& c) const { return 1 + depth(*c.arg); }
  };
  return std::visit(V{}, ast.v);
}

}  // namespace hillspec::expr
