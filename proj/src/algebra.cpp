#include <carnot/algebra.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace carnot
{

std::string_view to_string(ErrorCode code)
{
  switch (code)
  {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::JacobiViolation: return "JacobiViolation";
    case ErrorCode::GradingViolation: return "GradingViolation";
    case ErrorCode::OriginSingular: return "OriginSingular";
    case ErrorCode::InvalidQuasiNorm: return "InvalidQuasiNorm";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::UnsupportedStep: return "UnsupportedStep";
    case ErrorCode::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::MissingConstant: return "MissingConstant";
    case ErrorCode::RateViolation: return "RateViolation";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::PencilSingular: return "PencilSingular";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::MatchingAmbiguous: return "MatchingAmbiguous";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Interrupted: return "Interrupted";
  }
  return "Unknown";
}

namespace
{

constexpr int kMaxStep = 6;

double factorial(int n)
{
  double f = 1.0;
  for (int i = 2; i <= n; ++i)
    f *= i;
  return f;
}

// Sum over ways of cutting `w` into blocks X^a Y^b (a + b > 0) of
// (-1)^(n-1)/n * 1/(|w| * prod a! b!), n = number of blocks.
void dynkin_splittings(const std::vector<unsigned char> &w, std::size_t pos, int blocks,
                       double denom, double &acc)
{
  if (pos == w.size())
  {
    const double sign = (blocks % 2 == 1) ? 1.0 : -1.0;
    acc += sign / (blocks * static_cast<double>(w.size()) * denom);
    return;
  }
  std::size_t runx = 0;
  while (pos + runx < w.size() && w[pos + runx] == 0)
    ++runx;
  for (std::size_t a = 0; a <= runx; ++a)
  {
    if (a < runx)
    {
      if (a > 0)
        dynkin_splittings(w, pos + a, blocks + 1, denom * factorial(static_cast<int>(a)), acc);
      continue;
    }
    std::size_t runy = 0;
    while (pos + a + runy < w.size() && w[pos + a + runy] == 1)
      ++runy;
    for (std::size_t b = 0; b <= runy; ++b)
    {
      if (a + b == 0)
        continue;
      dynkin_splittings(w, pos + a + b, blocks + 1,
                        denom * factorial(static_cast<int>(a)) * factorial(static_cast<int>(b)), acc);
    }
  }
}

}  // namespace

StratifiedAlgebra::StratifiedAlgebra(std::vector<int> layer_dims, const std::vector<Bracket> &brackets,
                                     std::string name)
  : name_(std::move(name)), layers_(std::move(layer_dims))
{
  if (layers_.empty())
    fail(ErrorCode::DimensionMismatch, "layer_dims must be nonempty");
  for (int d : layers_)
    if (d <= 0)
      fail(ErrorCode::DimensionMismatch, "layer dimensions must be positive");
  if (step() > kMaxStep)
    fail(ErrorCode::UnsupportedStep, "step " + std::to_string(step()) + " exceeds the supported maximum of 6");

  for (int k = 0; k < step(); ++k)
    for (int i = 0; i < layers_[k]; ++i)
      weights_.push_back(k + 1);
  m_ = static_cast<int>(weights_.size());
  M_ = std::accumulate(weights_.begin(), weights_.end(), 0);
  heis_ = step() == 2 && layers_[1] == 1 && layers_[0] % 2 == 0;

  c_.assign(static_cast<std::size_t>(m_) * m_ * m_, 0.0);
  for (const auto &b : brackets)
  {
    if (b.i < 0 || b.j < 0 || b.k < 0 || b.i >= m_ || b.j >= m_ || b.k >= m_)
    {
      std::ostringstream os;
      os << "bracket index (" << b.i << "," << b.j << "," << b.k << ") outside dimension " << m_;
      fail(ErrorCode::DimensionMismatch, os.str());
    }
    if (b.i >= b.j)
      fail(ErrorCode::InvalidArgument, "brackets must be given with i < j");
    if (!std::isfinite(b.value))
      fail(ErrorCode::InvalidArgument, "non-finite structure constant");
    c_[(b.i * m_ + b.j) * m_ + b.k] += b.value;
    c_[(b.j * m_ + b.i) * m_ + b.k] -= b.value;
  }
  validate();
  build_bch_table();
}

void StratifiedAlgebra::validate() const
{
  const int r = step();
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      for (int k = 0; k < m_; ++k)
      {
        const double v = c(i, j, k);
        if (v == 0.0)
          continue;
        if (weights_[i] + weights_[j] > r || weights_[k] != weights_[i] + weights_[j])
        {
          std::ostringstream os;
          os << "[X" << i + 1 << ",X" << j + 1 << "] has a component on X" << k + 1 << " (weights "
             << weights_[i] << "+" << weights_[j] << " -> " << weights_[k] << ")";
          fail(ErrorCode::GradingViolation, os.str());
        }
      }
  const double res = jacobi_residual();
  double scale = 0.0;
  for (double v : c_)
    scale = std::max(scale, std::abs(v));
  if (res > 1e-12 * std::max(1.0, scale * scale))
    fail(ErrorCode::JacobiViolation, "Jacobi residual " + std::to_string(res));
}

double StratifiedAlgebra::jacobi_residual() const
{
  double worst = 0.0;
  // [X_a,[X_b,X_c]] + cyclic, expanded in structure constants.
  for (int a = 0; a < m_; ++a)
    for (int b = 0; b < m_; ++b)
      for (int cc = 0; cc < m_; ++cc)
        for (int k = 0; k < m_; ++k)
        {
          double s = 0.0;
          for (int l = 0; l < m_; ++l)
            s += c(b, cc, l) * c(a, l, k) + c(cc, a, l) * c(b, l, k) + c(a, b, l) * c(cc, l, k);
          worst = std::max(worst, std::abs(s));
        }
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      for (int k = 0; k < m_; ++k)
        worst = std::max(worst, std::abs(c(i, j, k) + c(j, i, k)));
  return worst;
}

void StratifiedAlgebra::build_bch_table()
{
  const int r = step();
  for (int len = 1; len <= r; ++len)
  {
    for (int mask = 0; mask < (1 << len); ++mask)
    {
      Word w;
      w.letters.resize(len);
      w.y_count = 0;
      for (int p = 0; p < len; ++p)
      {
        w.letters[p] = static_cast<unsigned char>((mask >> (len - 1 - p)) & 1);
        w.y_count += w.letters[p];
      }
      // right-nested brackets ending in [Z, Z] vanish
      if (len >= 2 && w.letters[len - 1] == w.letters[len - 2])
        continue;
      double acc = 0.0;
      dynkin_splittings(w.letters, 0, 0, 1.0, acc);
      if (std::abs(acc) < 1e-15)
        continue;
      w.coefficient = acc;
      words_.push_back(std::move(w));
    }
  }
}

Vec StratifiedAlgebra::bracket(const Vec &x, const Vec &y) const
{
  Vec z = Vec::Zero(m_);
  for (int i = 0; i < m_; ++i)
  {
    if (x[i] == 0.0)
      continue;
    for (int j = 0; j < m_; ++j)
    {
      const double xy = x[i] * y[j];
      if (xy == 0.0)
        continue;
      const double *row = &c_[(i * m_ + j) * m_];
      for (int k = 0; k < m_; ++k)
        z[k] += xy * row[k];
    }
  }
  return z;
}

Vec StratifiedAlgebra::nested(const Word &w, const Vec &x, const Vec &y) const
{
  const int n = static_cast<int>(w.letters.size());
  Vec v = w.letters[n - 1] ? y : x;
  for (int p = n - 2; p >= 0; --p)
    v = bracket(w.letters[p] ? y : x, v);
  return v;
}

Vec StratifiedAlgebra::multiply(const Vec &x, const Vec &y) const
{
  if (x.size() != m_ || y.size() != m_)
    fail(ErrorCode::DimensionMismatch, "group element has wrong dimension");
  Vec z = Vec::Zero(m_);
  for (const auto &w : words_)
    z += w.coefficient * nested(w, x, y);
  return z;
}

Vec StratifiedAlgebra::dilate(double t, const Vec &x) const
{
  Vec y(x.size());
  for (int j = 0; j < x.size(); ++j)
    y[j] = std::exp(weights_[j] * t) * x[j];
  return y;
}

Mat StratifiedAlgebra::field_coefficients(const Vec &x) const
{
  Mat a = Mat::Zero(m_, m_);
  for (int j = 0; j < m_; ++j)
  {
    const Vec e = Vec::Unit(m_, j);
    for (const auto &w : words_)
      if (w.y_count == 1)
        a.row(j) += w.coefficient * nested(w, x, e).transpose();
  }
  return a;
}

StratifiedAlgebra StratifiedAlgebra::heisenberg(int d)
{
  if (d < 1)
    fail(ErrorCode::InvalidArgument, "heisenberg(d) needs d >= 1");
  std::vector<Bracket> b;
  for (int i = 0; i < d; ++i)
    b.push_back({2 * i, 2 * i + 1, 2 * d, -4.0});
  return StratifiedAlgebra({2 * d, 1}, b, "heisenberg(" + std::to_string(d) + ")");
}

StratifiedAlgebra StratifiedAlgebra::abelian(int m)
{
  if (m < 1)
    fail(ErrorCode::InvalidArgument, "abelian(m) needs m >= 1");
  return StratifiedAlgebra({m}, {}, "abelian(" + std::to_string(m) + ")");
}

StratifiedAlgebra StratifiedAlgebra::engel()
{
  return StratifiedAlgebra({2, 1, 1}, {{0, 1, 2, 1.0}, {0, 2, 3, 1.0}}, "engel");
}

std::vector<Bracket> random_grading_brackets(const std::vector<int> &layers, unsigned seed)
{
  // Only layer1 x layer1 -> layer2 constants are drawn; every triple bracket then lands in
  // weight >= 3 with a zero inner factor, so Jacobi holds for any values.
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Bracket> out;
  if (layers.size() < 2)
    return out;
  const int m1 = layers[0];
  for (int i = 0; i < m1; ++i)
    for (int j = i + 1; j < m1; ++j)
      for (int k = 0; k < layers[1]; ++k)
        out.push_back({i, j, m1 + k, u(rng)});
  return out;
}

std::string to_string(QuasiNormKind k)
{
  switch (k)
  {
    case QuasiNormKind::PowerSum: return "power_sum";
    case QuasiNormKind::HeisenbergRho: return "heisenberg_rho";
    case QuasiNormKind::Euclidean: return "euclidean";
    case QuasiNormKind::UserSupplied: return "user";
  }
  return "unknown";
}

QuasiNormKind quasi_norm_kind_from_string(const std::string &s)
{
  if (s == "power_sum")
    return QuasiNormKind::PowerSum;
  if (s == "heisenberg_rho")
    return QuasiNormKind::HeisenbergRho;
  if (s == "euclidean")
    return QuasiNormKind::Euclidean;
  fail(ErrorCode::InvalidArgument, "unknown quasi-norm kind '" + s + "'");
}

QuasiNorm::QuasiNorm(const StratifiedAlgebra &alg, QuasiNormKind kind)
  : weights_(alg.weights()), m1_(alg.horizontal_dim()), kind_(kind)
{
  exponent_ = 2 * static_cast<int>(factorial(alg.step()));
  if (kind == QuasiNormKind::HeisenbergRho && !alg.is_heisenberg())
    fail(ErrorCode::InvalidArgument, "heisenberg_rho needs a Heisenberg-type algebra");
  if (kind == QuasiNormKind::Euclidean && !alg.is_abelian())
    fail(ErrorCode::InvalidArgument, "the Euclidean norm is homogeneous only on abelian groups");
  if (kind == QuasiNormKind::UserSupplied)
    fail(ErrorCode::InvalidArgument, "user quasi-norms need a callback");
}

QuasiNorm::QuasiNorm(const StratifiedAlgebra &alg, std::function<double(const Vec &)> fn, unsigned probe_seed)
  : weights_(alg.weights()), m1_(alg.horizontal_dim()), kind_(QuasiNormKind::UserSupplied), user_(std::move(fn))
{
  if (!user_)
    fail(ErrorCode::InvalidQuasiNorm, "empty callback");
  if (user_(Vec::Zero(alg.dim())) != 0.0)
    fail(ErrorCode::InvalidQuasiNorm, "quasi-norm must vanish at the identity");
  std::mt19937 rng(probe_seed);
  std::normal_distribution<double> g;
  for (int p = 0; p < 16; ++p)
  {
    Vec x(alg.dim());
    for (auto &v : x)
      v = g(rng);
    const double f = user_(x);
    if (!(f > 0.0) || !std::isfinite(f))
      fail(ErrorCode::InvalidQuasiNorm, "quasi-norm must be positive away from the identity");
    for (double t : {-1.3, 0.4, 2.1})
    {
      const double ft = user_(alg.dilate(t, x));
      if (std::abs(ft - std::exp(t) * f) > 1e-9 * std::exp(t) * f)
        fail(ErrorCode::InvalidQuasiNorm, "quasi-norm is not homogeneous of degree 1 under dilations");
    }
  }
}

double QuasiNorm::operator()(const Vec &x) const
{
  switch (kind_)
  {
    case QuasiNormKind::Euclidean: return x.norm();
    case QuasiNormKind::HeisenbergRho:
    {
      const double z2 = x.head(m1_).squaredNorm();
      const double t = x[x.size() - 1];
      return std::sqrt(std::sqrt(z2 * z2 + t * t));
    }
    case QuasiNormKind::UserSupplied: return user_(x);
    case QuasiNormKind::PowerSum:
    {
      // (sum |x_j|^(p/nu_j))^(1/p) with p = 2 r!, scaled by the largest |x_j|^(1/nu_j)
      double s = 0.0;
      for (int j = 0; j < x.size(); ++j)
        s = std::max(s, std::pow(std::abs(x[j]), 1.0 / weights_[j]));
      if (s == 0.0)
        return 0.0;
      double acc = 0.0;
      for (int j = 0; j < x.size(); ++j)
        acc += std::pow(std::pow(std::abs(x[j]), 1.0 / weights_[j]) / s, exponent_);
      return s * std::pow(acc, 1.0 / exponent_);
    }
  }
  return 0.0;
}

double heisenberg_rho(const StratifiedAlgebra &alg, const Vec &x)
{
  return QuasiNorm(alg, QuasiNormKind::HeisenbergRho)(x);
}

double rho_gradient_weight(const StratifiedAlgebra &alg, const Vec &x)
{
  if (!alg.is_heisenberg())
    fail(ErrorCode::InvalidArgument, "rho gradient weight needs a Heisenberg-type algebra");
  const double z2 = x.head(alg.horizontal_dim()).squaredNorm();
  const double t = x[alg.dim() - 1];
  const double den = z2 * z2 + t * t;
  if (den == 0.0)
    fail(ErrorCode::OriginSingular, "gradient weight is singular at the identity");
  return z2 / den;
}

HorizontalPart horizontal_part(const StratifiedAlgebra &alg, const Vec &x)
{
  Vec h = x.head(alg.horizontal_dim());
  const double n = h.norm();
  return {std::move(h), n};
}

}  // namespace carnot
