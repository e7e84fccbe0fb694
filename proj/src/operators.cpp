#include <carnot/operators.hpp>

#include <cmath>

namespace carnot
{

namespace
{

Mat coefficients_at(const Lattice &latt, const Vec &x, const FieldCallback &fields)
{
  if (fields)
  {
    Mat a = fields(x);
    if (a.rows() != latt.dim() || a.cols() != latt.dim())
      fail(ErrorCode::DimensionMismatch, "field callback returned a matrix of the wrong shape");
    return a;
  }
  if (latt.algebra().is_abelian())
    return Mat::Identity(latt.dim(), latt.dim());
  return latt.algebra().field_coefficients(x);
}

using Trip = Eigen::Triplet<double>;

// Uniform extended abscissae: ghost, nodes..., ghost.
Vec extended_axis(const Lattice &latt, int a)
{
  const int n = latt.extent(a);
  Vec xs(n + 2);
  for (int i = -1; i <= n; ++i)
    xs[i + 1] = latt.coord(a, i);
  return xs;
}

// Linear map from node data (ghost values zero) to the natural-spline second derivatives at
// the extended abscissae.
Mat spline_moments(int n, double h)
{
  const int N = n + 2;
  Mat T = Mat::Zero(N, N);
  Mat R = Mat::Zero(N, n);
  T(0, 0) = 1.0;
  T(N - 1, N - 1) = 1.0;
  for (int i = 1; i < N - 1; ++i)
  {
    T(i, i - 1) = h / 6.0;
    T(i, i) = 2.0 * h / 3.0;
    T(i, i + 1) = h / 6.0;
    // data index d = ext - 1 for ext in [1, n]
    for (int e : {i - 1, i, i + 1})
    {
      const int d = e - 1;
      if (d < 0 || d >= n)
        continue;
      const double w = (e == i) ? -2.0 : 1.0;
      R(i, d) += w / h;
    }
  }
  return T.partialPivLu().solve(R);
}

// Rows: targets; columns: node data. derivative selects S or S'.
Mat interpolation_matrix(const Lattice &latt, int a, const Vec &targets, Interpolation mode, bool derivative)
{
  const int n = latt.extent(a);
  const double h = latt.spacing(a);
  const Vec xs = extended_axis(latt, a);
  const int N = n + 2;
  Mat P = Mat::Zero(targets.size(), n);
  Mat moments;
  if (mode == Interpolation::CubicSpline)
    moments = spline_moments(n, h);

  for (int r = 0; r < targets.size(); ++r)
  {
    const double y = targets[r];
    if (y <= xs[0] || y >= xs[N - 1])
      continue;
    int i = static_cast<int>(std::floor((y - xs[0]) / h));
    i = std::clamp(i, 0, N - 2);
    const double A = (xs[i + 1] - y) / h;
    const double B = 1.0 - A;
    auto add_data = [&](int ext, double w) {
      const int d = ext - 1;
      if (d >= 0 && d < n)
        P(r, d) += w;
    };
    if (mode == Interpolation::Multilinear)
    {
      if (derivative)
        fail(ErrorCode::InvalidArgument, "multilinear interpolation has no derivative path");
      add_data(i, A);
      add_data(i + 1, B);
      continue;
    }
    if (!derivative)
    {
      add_data(i, A);
      add_data(i + 1, B);
      const double ca = (A * A * A - A) * h * h / 6.0;
      const double cb = (B * B * B - B) * h * h / 6.0;
      P.row(r) += ca * moments.row(i) + cb * moments.row(i + 1);
    }
    else
    {
      add_data(i, -1.0 / h);
      add_data(i + 1, 1.0 / h);
      const double ca = -(3.0 * A * A - 1.0) * h / 6.0;
      const double cb = (3.0 * B * B - 1.0) * h / 6.0;
      P.row(r) += ca * moments.row(i) + cb * moments.row(i + 1);
    }
  }
  return P;
}

}  // namespace

SpMat field_operator(const Lattice &latt, int j, const FieldCallback &fields)
{
  const int m = latt.dim();
  if (j < 0 || j >= m)
    fail(ErrorCode::OutOfRange, "field index out of range");
  std::vector<Trip> trips;
  trips.reserve(static_cast<std::size_t>(latt.size()) * 2);
  for (Index p = 0; p < latt.size(); ++p)
  {
    const Mat a = coefficients_at(latt, latt.point(p), fields);
    for (int k = 0; k < m; ++k)
    {
      const double b = a(j, k);
      if (b == 0.0)
        continue;
      const double w = b / (2.0 * latt.spacing(k));
      const Index up = latt.neighbour(p, k, +1);
      const Index dn = latt.neighbour(p, k, -1);
      if (up >= 0)
        trips.emplace_back(p, up, w);
      if (dn >= 0)
        trips.emplace_back(p, dn, -w);
    }
  }
  SpMat X(latt.size(), latt.size());
  X.setFromTriplets(trips.begin(), trips.end());
  return X;
}

SpMat horizontal_field_operator(const Lattice &latt, int j, const FieldCallback &fields)
{
  if (j < 0 || j >= latt.algebra().horizontal_dim())
    fail(ErrorCode::OutOfRange, "horizontal field index must be below m_1");
  return field_operator(latt, j, fields);
}

SpMat forward_factor(const Lattice &latt, int j, const FieldCallback &fields)
{
  const int m = latt.dim();
  if (j < 0 || j >= latt.algebra().horizontal_dim())
    fail(ErrorCode::OutOfRange, "horizontal field index must be below m_1");
  std::vector<Index> ext_stride(m, 1);
  for (int a = m - 2; a >= 0; --a)
    ext_stride[a] = ext_stride[a + 1] * (latt.extent(a + 1) + 1);
  const Index rows = ext_stride[0] * (latt.extent(0) + 1);

  std::vector<Trip> trips;
  trips.reserve(static_cast<std::size_t>(rows) * 2);
  std::vector<int> base(m), shifted(m);
  Vec x(m);
  for (Index e = 0; e < rows; ++e)
  {
    for (int a = 0; a < m; ++a)
    {
      base[a] = static_cast<int>((e / ext_stride[a]) % (latt.extent(a) + 1)) - 1;
      x[a] = latt.coord(a, base[a]);
    }
    const Mat coef = coefficients_at(latt, x, fields);
    const Index here = latt.index(base.data());
    for (int k = 0; k < m; ++k)
    {
      const double b = coef(j, k);
      if (b == 0.0)
        continue;
      const double w = b / latt.spacing(k);
      shifted = base;
      shifted[k] += 1;
      const Index there = latt.index(shifted.data());
      if (there >= 0)
        trips.emplace_back(e, there, w);
      if (here >= 0)
        trips.emplace_back(e, here, -w);
    }
  }
  SpMat D(rows, latt.size());
  D.setFromTriplets(trips.begin(), trips.end());
  return D;
}

SpMat sublaplacian(const Lattice &latt, const FieldCallback &fields)
{
  SpMat L(latt.size(), latt.size());
  for (int j = 0; j < latt.algebra().horizontal_dim(); ++j)
  {
    const SpMat D = forward_factor(latt, j, fields);
    SpMat DtD = SpMat(D.transpose()) * D;
    L += DtD;
  }
  L.prune(0.0);
  // exact symmetrisation removes the last-bit asymmetry of the sparse product
  SpMat Lt = L.transpose();
  return 0.5 * (L + Lt);
}

SpMat euler_operator(const Lattice &latt, const FieldCallback &fields)
{
  const int m = latt.dim();
  SpMat E(latt.size(), latt.size());
  for (int j = 0; j < m; ++j)
  {
    const SpMat X = field_operator(latt, j, fields);
    Eigen::VectorXd d(latt.size());
    for (Index p = 0; p < latt.size(); ++p)
      d[p] = latt.algebra().weight(j) * latt.point(p)[j];
    E += d.asDiagonal() * X;
  }
  return E;
}

SpMat generator_iA(const Lattice &latt, const FieldCallback &fields)
{
  const SpMat E = euler_operator(latt, fields);
  const SpMat Et = E.transpose();
  return 0.5 * (E - Et);
}

CSpMat generator_A(const Lattice &latt, const FieldCallback &fields)
{
  const SpMat S = generator_iA(latt, fields);
  // A = -i * (iA)
  return S.cast<std::complex<double>>() * std::complex<double>(0.0, -1.0);
}

SpMat multiplication_operator(const Lattice &latt, const std::function<double(const Vec &)> &f)
{
  const Vec d = sample(latt, f);
  SpMat D(latt.size(), latt.size());
  D.reserve(Eigen::VectorXi::Constant(latt.size(), 1));
  for (Index p = 0; p < latt.size(); ++p)
    D.insert(p, p) = d[p];
  D.makeCompressed();
  return D;
}

double symmetry_defect(const SpMat &a)
{
  const SpMat at = a.transpose();
  const double n = a.norm();
  return n == 0.0 ? 0.0 : SpMat(a - at).norm() / n;
}

Vec apply_along_axis(const Lattice &latt, int a, const Mat &p, const Vec &u)
{
  const Index s = latt.stride(a);
  const Index n = latt.extent(a);
  const Index blocks = latt.size() / (n * s);
  Vec out(latt.size());
  for (Index b = 0; b < blocks; ++b)
  {
    Eigen::Map<const Mat> in(u.data() + b * n * s, s, n);
    Eigen::Map<Mat> o(out.data() + b * n * s, s, n);
    o.noalias() = in * p.transpose();
  }
  return out;
}

DilationPullback::DilationPullback(const Lattice &latt, double t, Interpolation mode)
  : latt_(&latt), scale_(std::exp(0.5 * latt.algebra().homogeneous_dimension() * t))
{
  for (int a = 0; a < latt.dim(); ++a)
  {
    const int n = latt.extent(a);
    Vec targets(n);
    const double f = std::exp(latt.algebra().weight(a) * t);
    for (int i = 0; i < n; ++i)
      targets[i] = f * latt.coord(a, i);
    axis_.push_back(interpolation_matrix(latt, a, targets, mode, false));
  }
}

Vec DilationPullback::apply(const Vec &u) const
{
  Vec v = u;
  for (int a = 0; a < latt_->dim(); ++a)
    v = apply_along_axis(*latt_, a, axis_[a], v);
  return scale_ * v;
}

Vec spline_dilation_generator(const Lattice &latt, const Vec &u)
{
  Vec out = 0.5 * latt.algebra().homogeneous_dimension() * u;
  for (int a = 0; a < latt.dim(); ++a)
  {
    const int n = latt.extent(a);
    Vec targets(n);
    for (int i = 0; i < n; ++i)
      targets[i] = latt.coord(a, i);
    const Mat D = interpolation_matrix(latt, a, targets, Interpolation::CubicSpline, true);
    const Vec du = apply_along_axis(latt, a, D, u);
    const int nu = latt.algebra().weight(a);
    for (Index p = 0; p < latt.size(); ++p)
      out[p] += nu * latt.point(p)[a] * du[p];
  }
  return out;
}

Vec dyadic_pullback(const Lattice &latt, int n, const Vec &u)
{
  if (latt.spec().offset)
    fail(ErrorCode::InvalidArgument, "dyadic pullback needs a lattice with a node at the identity");
  if (n < 0)
    fail(ErrorCode::InvalidArgument, "dyadic pullback supports t = n ln 2 with n >= 0");
  const int m = latt.dim();
  const int c = latt.half_count() - 1;
  std::vector<int> mi(m), mj(m);
  Vec out = Vec::Zero(latt.size());
  for (Index p = 0; p < latt.size(); ++p)
  {
    latt.multi_index(p, mi.data());
    bool inside = true;
    for (int a = 0; a < m; ++a)
    {
      const long f = 1L << (latt.algebra().weight(a) * n);
      const long j = c + f * (mi[a] - c);
      if (j < 0 || j >= latt.extent(a))
      {
        inside = false;
        break;
      }
      mj[a] = static_cast<int>(j);
    }
    if (inside)
      out[p] = u[latt.index(mj.data())];
  }
  return std::pow(2.0, 0.5 * latt.algebra().homogeneous_dimension() * n) * out;
}

}  // namespace carnot
