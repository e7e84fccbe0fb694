#include <carnot/expression.hpp>

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace carnot
{

struct Expression::Node
{
  enum Kind
  {
    Const,
    Coord,
    Rho,
    QNorm,
    HNorm,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Call
  } kind;
  double value = 0.0;
  int index = 0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> a, b;
};

namespace
{

using NodeP = std::shared_ptr<const Expression::Node>;
using N = Expression::Node;

NodeP make(N::Kind k, NodeP a = nullptr, NodeP b = nullptr)
{
  auto n = std::make_shared<N>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double f_abs(double x) { return std::abs(x); }
double f_exp(double x) { return std::exp(x); }
double f_sin(double x) { return std::sin(x); }
double f_cos(double x) { return std::cos(x); }
double f_sqrt(double x) { return std::sqrt(x); }
double f_log(double x) { return std::log(x); }

class Parser
{
public:
  Parser(const StratifiedAlgebra &alg, const std::string &s) : alg_(alg), s_(s) {}

  NodeP parse()
  {
    NodeP n = sum();
    skip();
    if (pos_ < s_.size())
      error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

private:
  [[noreturn]] void error(const std::string &what) const
  {
    fail(ErrorCode::ParseError, "expression column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip()
  {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool eat(char c)
  {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c)
    {
      ++pos_;
      return true;
    }
    return false;
  }

  NodeP sum()
  {
    NodeP n = product();
    for (;;)
    {
      if (eat('+'))
        n = make(N::Add, n, product());
      else if (eat('-'))
        n = make(N::Sub, n, product());
      else
        return n;
    }
  }

  NodeP product()
  {
    NodeP n = unary();
    for (;;)
    {
      if (eat('*'))
        n = make(N::Mul, n, unary());
      else if (eat('/'))
        n = make(N::Div, n, unary());
      else
        return n;
    }
  }

  // -a^b = -(a^b)
  NodeP unary()
  {
    if (eat('-'))
      return make(N::Neg, unary());
    if (eat('+'))
      return unary();
    return power();
  }

  NodeP power()
  {
    NodeP base = atom();
    if (eat('^'))
      return make(N::Pow, base, unary());
    return base;
  }

  NodeP atom()
  {
    skip();
    if (pos_ >= s_.size())
      error("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(')
    {
      ++pos_;
      NodeP n = sum();
      if (!eat(')'))
        error("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
    {
      const char *begin = s_.c_str() + pos_;
      char *end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin)
        error("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<N>();
      n->kind = N::Const;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)))
    {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      return identifier(id, start);
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  NodeP identifier(const std::string &id, std::size_t start)
  {
    static const std::vector<std::pair<std::string, double (*)(double)>> fns{
      {"abs", f_abs}, {"exp", f_exp}, {"sin", f_sin}, {"cos", f_cos}, {"sqrt", f_sqrt}, {"log", f_log}};
    for (const auto &[name, f] : fns)
      if (id == name)
      {
        if (!eat('('))
          error("expected '(' after " + id);
        auto n = std::make_shared<N>();
        n->kind = N::Call;
        n->fn = f;
        n->a = sum();
        if (!eat(')'))
          error("expected ')'");
        return n;
      }
    auto n = std::make_shared<N>();
    if (id == "pi")
    {
      n->kind = N::Const;
      n->value = std::numbers::pi;
    }
    else if (id == "t")
    {
      n->kind = N::Coord;
      n->index = alg_.dim() - 1;
    }
    else if (id == "rho")
    {
      if (!alg_.is_heisenberg())
        fail(ErrorCode::ParseError, "expression column " + std::to_string(start + 1) + ": rho needs a Heisenberg algebra");
      n->kind = N::Rho;
    }
    else if (id == "qnorm")
      n->kind = N::QNorm;
    else if (id == "hnorm")
      n->kind = N::HNorm;
    else if (id.size() > 1 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos)
    {
      const int j = std::stoi(id.substr(1));
      if (j < 1 || j > alg_.dim())
        fail(ErrorCode::ParseError, "expression column " + std::to_string(start + 1) + ": " + id +
                                      " outside x1..x" + std::to_string(alg_.dim()));
      n->kind = N::Coord;
      n->index = j - 1;
    }
    else
      fail(ErrorCode::ParseError, "expression column " + std::to_string(start + 1) + ": unknown name '" + id + "'");
    return n;
  }

  const StratifiedAlgebra &alg_;
  const std::string &s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const StratifiedAlgebra &alg, const std::string &text)
  : text_(text), alg_(std::make_shared<StratifiedAlgebra>(alg)),
    qnorm_(std::make_shared<QuasiNorm>(alg, QuasiNormKind::PowerSum))
{
  root_ = Parser(alg, text_).parse();
}

namespace
{

double eval(const N &n, const Vec &x, const StratifiedAlgebra &alg, const QuasiNorm &qn)
{
  switch (n.kind)
  {
    case N::Const: return n.value;
    case N::Coord: return x[n.index];
    case N::Rho: return heisenberg_rho(alg, x);
    case N::QNorm: return qn(x);
    case N::HNorm: return x.head(alg.horizontal_dim()).norm();
    case N::Neg: return -eval(*n.a, x, alg, qn);
    case N::Add: return eval(*n.a, x, alg, qn) + eval(*n.b, x, alg, qn);
    case N::Sub: return eval(*n.a, x, alg, qn) - eval(*n.b, x, alg, qn);
    case N::Mul: return eval(*n.a, x, alg, qn) * eval(*n.b, x, alg, qn);
    case N::Div: return eval(*n.a, x, alg, qn) / eval(*n.b, x, alg, qn);
    case N::Pow: return std::pow(eval(*n.a, x, alg, qn), eval(*n.b, x, alg, qn));
    case N::Call: return n.fn(eval(*n.a, x, alg, qn));
  }
  return 0.0;
}

}  // namespace

double Expression::operator()(const Vec &x) const
{
  if (x.size() != alg_->dim())
    fail(ErrorCode::DimensionMismatch, "expression evaluated at a point of the wrong dimension");
  return eval(*root_, x, *alg_, *qnorm_);
}

}  // namespace carnot
