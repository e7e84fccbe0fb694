#pragma once

#include <carnot/lattice.hpp>

#include <Eigen/Sparse>

#include <complex>
#include <functional>
#include <optional>

namespace carnot
{

using SpMat = Eigen::SparseMatrix<double>;
using CSpMat = Eigen::SparseMatrix<std::complex<double>>;

// Row j: coefficients of X_j in d_1..d_m at x. Overrides the BCH-derived fields when given.
using FieldCallback = std::function<Mat(const Vec &)>;

// Centered-difference discretisation of the left-invariant field X_j (0-based, any layer).
SpMat field_operator(const Lattice &latt, int j, const FieldCallback &fields = {});

// Same, restricted to the horizontal layer; OutOfRange when j >= m_1.
SpMat horizontal_field_operator(const Lattice &latt, int j, const FieldCallback &fields = {});

// Forward-difference factor of X_j (j < m_1). Rows run over base points of the box extended
// by one ghost layer on the low side of every axis, so D^T D carries Dirichlet conditions on
// both ends.
SpMat forward_factor(const Lattice &latt, int j, const FieldCallback &fields = {});

// -Delta = sum_j D_j^T D_j (symmetric positive semidefinite by construction).
SpMat sublaplacian(const Lattice &latt, const FieldCallback &fields = {});

// Euler operator E = sum_j nu_j diag(x_j) X_j over all basis directions.
SpMat euler_operator(const Lattice &latt, const FieldCallback &fields = {});

// A = (E - E^T) / (2i), Hermitian.
CSpMat generator_A(const Lattice &latt, const FieldCallback &fields = {});
// iA = (E - E^T) / 2 as a real antisymmetric matrix.
SpMat generator_iA(const Lattice &latt, const FieldCallback &fields = {});

SpMat multiplication_operator(const Lattice &latt, const std::function<double(const Vec &)> &f);

double symmetry_defect(const SpMat &a);

enum class Interpolation
{
  Multilinear,
  CubicSpline
};

// [Dil(t) u](x) = e^{Mt/2} u(dil_t x), evaluated by separable interpolation with zero data on
// and beyond the ghost layers.
class DilationPullback
{
public:
  DilationPullback(const Lattice &latt, double t, Interpolation mode = Interpolation::Multilinear);
  Vec apply(const Vec &u) const;

private:
  const Lattice *latt_;
  double scale_;
  std::vector<Mat> axis_;
};

// Exact t-derivative at t = 0 of the spline pullback: (M/2) u + sum_a nu_a x_a (d_a spline u).
Vec spline_dilation_generator(const Lattice &latt, const Vec &u);

// Pullback for t = n ln 2 on a non-offset lattice: dilated nodes land on nodes, no interpolation.
Vec dyadic_pullback(const Lattice &latt, int n, const Vec &u);

// Apply a dense n_a x n_a matrix along axis a of a grid function.
Vec apply_along_axis(const Lattice &latt, int a, const Mat &p, const Vec &u);

}  // namespace carnot
