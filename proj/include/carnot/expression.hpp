#pragma once

#include <carnot/algebra.hpp>

#include <memory>
#include <string>

namespace carnot
{

// Scalar field given as text over group coordinates.
//   operators  + - * / ^ (right associative), unary minus, parentheses
//   functions  abs exp sin cos sqrt log
//   variables  x1..xm, t (last coordinate), rho (Heisenberg only), qnorm (power-sum quasi-norm),
//              hnorm (|x~|), numeric literals, pi
// ParseError carries the 1-based column.
class Expression
{
public:
  Expression(const StratifiedAlgebra &alg, const std::string &text);

  double operator()(const Vec &x) const;
  const std::string &text() const { return text_; }

  struct Node;

private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  std::shared_ptr<const StratifiedAlgebra> alg_;
  std::shared_ptr<const QuasiNorm> qnorm_;
};

}  // namespace carnot
