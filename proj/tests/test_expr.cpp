#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hillspec/expr.hpp"

using namespace hillspec;
namespace ex = hillspec::expr;
using ex::cplx;

namespace {

const ex::Binary& as_binary(const ex::NodePtr& n) {
  return std::get<ex::Binary>(n->v);
}

}  // namespace

TEST_CASE("parse structure of i*sin(x)^3") {
  ex::NodePtr ast = ex::parse("i*sin(x)^3");
  const auto& mul = as_binary(ast);
  CHECK(mul.op == ex::BinaryOp::Mul);
  CHECK(std::get<ex::Number>(mul.lhs->v).value == cplx(0, 1));
  const auto& pow = std::get<ex::Binary>(mul.rhs->v);
  CHECK(pow.op == ex::BinaryOp::Pow);
  const auto& call = std::get<ex::Call>(pow.lhs->v);
  CHECK(call.fn == ex::Fn::Sin);
  CHECK(std::holds_alternative<ex::VariableX>(call.arg->v));
  CHECK(std::get<ex::Number>(pow.rhs->v).value == cplx(3, 0));
}

TEST_CASE("precedence: 2+3*x") {
  ex::NodePtr ast = ex::parse("2+3*x");
  const auto& add = as_binary(ast);
  CHECK(add.op == ex::BinaryOp::Add);
  CHECK(std::get<ex::Number>(add.lhs->v).value == cplx(2, 0));
  const auto& mul = std::get<ex::Binary>(add.rhs->v);
  CHECK(mul.op == ex::BinaryOp::Mul);
}

TEST_CASE("function application requires parentheses") {
  try {
    ex::parse("sin x");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 4);
    CHECK(e.expected == "(");
  }
}

TEST_CASE("unary minus binds looser than pow") {
  CHECK(ex::eval(ex::parse("-x^2"), 2.0) == cplx(-4, 0));
  CHECK(ex::eval(ex::parse("-2^2"), 0.0) == cplx(-4, 0));
  CHECK(ex::eval(ex::parse("2^-1"), 0.0) == cplx(0.5, 0));
  CHECK(ex::eval(ex::parse("2^3^2"), 0.0) == cplx(512, 0));  // right-assoc
}

TEST_CASE("eval examples") {
  double half_pi = std::numbers::pi / 2;
  CHECK(std::abs(ex::eval(ex::parse("i*sin(x)^3"), half_pi) - cplx(0, 1)) <
        1e-15);
  CHECK(std::abs(ex::eval(ex::parse("exp(i*pi)"), 0.7) - cplx(-1, 0)) < 1e-15);
  CHECK_THROWS_AS(ex::eval(ex::parse("x/x"), 0.0), EvalError);
  CHECK(ex::eval(ex::parse("(1+i)^16"), 0.0) == cplx(256, 0));
  CHECK(std::abs(ex::eval(ex::parse("re(x+2*i)"), 1.5) - cplx(1.5, 0)) == 0);
  CHECK(std::abs(ex::eval(ex::parse("im(x+2*i)"), 1.5) - cplx(2.0, 0)) == 0);
  CHECK(std::abs(ex::eval(ex::parse("abs(3+4*i)"), 0.0) - cplx(5, 0)) < 1e-15);
  CHECK(std::abs(ex::eval(ex::parse("1.5e2"), 0.0) - cplx(150, 0)) == 0);
}

TEST_CASE("unknown identifiers and malformed input") {
  CHECK_THROWS_AS(ex::parse("y+1"), UnknownIdentifier);
  CHECK_THROWS_AS(ex::parse("foo(x)"), UnknownIdentifier);
  CHECK_THROWS_AS(ex::parse(""), ParseError);
  CHECK_THROWS_AS(ex::parse("2+"), ParseError);
  CHECK_THROWS_AS(ex::parse("(2"), ParseError);
  CHECK_THROWS_AS(ex::parse("2 3"), ParseError);  // implicit multiplication
  CHECK_THROWS_AS(ex::parse("1e999"), ParseError);
  try {
    ex::parse("1+z");
  } catch (const UnknownIdentifier& e) {
    CHECK(e.name == "z");
    CHECK(e.offset == 2);
  }
}

TEST_CASE("nesting depth is capped") {
  // parenthesization alone does not deepen the tree
  std::string grouped = std::string(60, '(') + "x" + std::string(60, ')');
  CHECK(ex::depth(*ex::parse(grouped)) == 1);
  // runaway parenthesization still trips the recursion guard
  std::string runaway = std::string(900, '(') + "x" + std::string(900, ')');
  CHECK_THROWS_AS(ex::parse(runaway), ParseError);

  auto chain = [](int n) {
    std::string s = "x";
    for (int i = 0; i < n; ++i) s = "sin(" + s + ")";
    return s;
  };
  CHECK(ex::depth(*ex::parse(chain(63))) == 64);
  CHECK_THROWS_AS(ex::parse(chain(64)), ParseError);

  CHECK_THROWS_AS(ex::parse(std::string(5000, '1')), ParseError);
}

namespace {

ex::NodePtr random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 1 ? 1 : 6);
  auto node = [](auto v) {
    return std::make_shared<ex::Node>(ex::Node{std::move(v)});
  };
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> u(0.0, 4.0);
      return node(ex::Number{cplx(u(rng), 0.0)});
    }
    case 1:
      return rng() % 3 == 0 ? node(ex::Number{cplx(0.0, 1.0)})
                            : node(ex::VariableX{});
    case 2:
      return node(ex::Negate{random_tree(rng, depth - 1)});
    case 3: {
      std::uniform_int_distribution<int> fn(0, 8);
      return node(ex::Call{static_cast<ex::Fn>(fn(rng)),
                           random_tree(rng, depth - 1)});
    }
    default: {
      std::uniform_int_distribution<int> op(0, 4);
      return node(ex::Binary{static_cast<ex::BinaryOp>(op(rng)),
                             random_tree(rng, depth - 1),
                             random_tree(rng, depth - 1)});
    }
  }
}

}  // namespace

TEST_CASE("round trip: print then reparse is structurally identical") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 300; ++t) {
    ex::NodePtr tree = random_tree(rng, 6);
    ex::NodePtr back = ex::parse(ex::to_string(tree));
    CHECK(ex::structurally_equal(*tree, *back));
  }
}

TEST_CASE("differential fuzz: eval returns a value or a typed error") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  int evals = 0, errors = 0;
  for (int t = 0; t < 500; ++t) {
    ex::NodePtr tree = random_tree(rng, 6);
    try {
      (void)ex::eval(tree, ux(rng));
      ++evals;
    } catch (const EvalError&) {
      ++errors;
    }
  }
  CHECK(evals + errors == 500);
  CHECK(evals > 0);
}

TEST_CASE("principal branch for non-integer pow") {
  cplx got = ex::eval(ex::parse("(-1)^0.5"), 0.0);
  CHECK(std::abs(got - cplx(0, 1)) < 1e-15);
}
