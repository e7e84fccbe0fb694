#include <carnot/lattice.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace carnot
{

Lattice::Lattice(const StratifiedAlgebra &alg, LatticeSpec spec, std::vector<double> axis_scale)
  : alg_(alg), spec_(spec)
{
  if (!(spec.radius > 0.0) || !(spec.spacing > 0.0))
    fail(ErrorCode::InvalidArgument, "lattice radius and spacing must be positive");
  K_ = static_cast<int>(std::floor(spec.radius / spec.spacing + 1e-9));
  if (K_ < 2)
    fail(ErrorCode::InvalidArgument, "lattice needs radius/spacing >= 2");
  const int m = alg.dim();
  if (axis_scale.empty())
    axis_scale.assign(m, 1.0);
  if (static_cast<int>(axis_scale.size()) != m)
    fail(ErrorCode::DimensionMismatch, "axis_scale length differs from the algebra dimension");

  const int per_axis = spec.offset ? 2 * K_ : 2 * K_ - 1;
  centre_ = spec.offset ? K_ - 0.5 : K_ - 1.0;
  n_.assign(m, per_axis);
  h_.resize(m);
  for (int a = 0; a < m; ++a)
    h_[a] = spec.spacing * axis_scale[a];

  double total = 1.0;
  for (int a = 0; a < m; ++a)
    total *= per_axis;
  if (total > static_cast<double>(spec.max_nodes))
  {
    std::ostringstream os;
    os << "lattice needs " << total << " nodes, budget is " << spec.max_nodes;
    fail(ErrorCode::BudgetExceeded, os.str());
  }
  size_ = static_cast<Index>(total);
  stride_.assign(m, 1);
  for (int a = m - 2; a >= 0; --a)
    stride_[a] = stride_[a + 1] * n_[a + 1];
}

Vec Lattice::point(Index node) const
{
  const int m = dim();
  Vec x(m);
  for (int a = 0; a < m; ++a)
  {
    const int i = static_cast<int>((node / stride_[a]) % n_[a]);
    x[a] = coord(a, i);
  }
  return x;
}

void Lattice::multi_index(Index node, int *out) const
{
  for (int a = 0; a < dim(); ++a)
    out[a] = static_cast<int>((node / stride_[a]) % n_[a]);
}

Index Lattice::index(const int *multi) const
{
  Index id = 0;
  for (int a = 0; a < dim(); ++a)
  {
    if (multi[a] < 0 || multi[a] >= n_[a])
      return -1;
    id += multi[a] * stride_[a];
  }
  return id;
}

Index Lattice::neighbour(Index node, int a, int step) const
{
  const int i = static_cast<int>((node / stride_[a]) % n_[a]) + step;
  if (i < 0 || i >= n_[a])
    return -1;
  return node + step * stride_[a];
}

int Lattice::boundary_distance(Index node) const
{
  int best = std::numeric_limits<int>::max();
  for (int a = 0; a < dim(); ++a)
  {
    const int i = static_cast<int>((node / stride_[a]) % n_[a]);
    best = std::min({best, i + 1, n_[a] - i});
  }
  return best;
}

double Lattice::cell_volume() const
{
  double v = 1.0;
  for (double h : h_)
    v *= h;
  return v;
}

Vec sample(const Lattice &latt, const std::function<double(const Vec &)> &f)
{
  Vec out(latt.size());
  for (Index p = 0; p < latt.size(); ++p)
  {
    const double v = f(latt.point(p));
    if (!std::isfinite(v))
    {
      std::ostringstream os;
      os << "non-finite sample at node " << p << " (" << latt.point(p).transpose() << ")";
      fail(ErrorCode::NonFiniteSample, os.str());
    }
    out[p] = v;
  }
  return out;
}

}  // namespace carnot
