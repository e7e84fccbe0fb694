#pragma once

#include <carnot/operators.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace carnot
{

struct SpectralFactorization
{
  Vec eigenvalues;  // ascending
  Mat vectors;      // orthonormal columns
};

// Dense symmetric eigendecomposition (LAPACK dsyevd).
SpectralFactorization factorize(const Mat &a);
SpectralFactorization factorize(const SpMat &a);

double reconstruction_error(const SpectralFactorization &f, const Mat &a);
double orthonormality_error(const SpectralFactorization &f);

// Q diag(lambda^s) Q^T. NegativeEigenvalue below -1e-10 * max|lambda|; tiny negatives clamp to 0.
Mat fractional_power(const SpectralFactorization &f, double s);
// ||(-Delta)^{sigma/2} u||
double sobolev_norm(const SpectralFactorization &f, const Vec &u, double sigma);

// g(lambda) = (scale * lambda^power + shift)^(inverse ? -1 : 1)
struct SpectralFn
{
  double power = 1.0;
  double scale = 1.0;
  double shift = 0.0;
  bool inverse = false;

  double operator()(double lambda) const;
  static SpectralFn pow(double p) { return {p, 1.0, 0.0, false}; }
  static SpectralFn inv_pow(double p) { return {p, 1.0, 0.0, true}; }
};

// Functions of the discrete sublaplacian L = -Delta.
class SpectralCalculus
{
public:
  virtual ~SpectralCalculus() = default;
  virtual Index size() const = 0;
  virtual std::string name() const = 0;
  virtual Vec apply(const SpectralFn &g, const Vec &x) const = 0;
  virtual double lambda_min() const = 0;
  virtual double lambda_max() const = 0;
  // Dense g(L) when the backend holds a full factorization.
  virtual bool has_factorization() const { return false; }
  virtual Mat dense(const SpectralFn &g) const;
  virtual const SpectralFactorization *factorization() const { return nullptr; }
  // The assembled sparse -Delta, if kept.
  virtual const SpMat *sparse() const { return nullptr; }
  // Accuracy estimate for the last apply (0 for exact backends).
  virtual double last_error() const { return 0.0; }
};

enum class SpectralBackend
{
  Auto,
  Dense,
  Sine,
  Krylov
};

std::string to_string(SpectralBackend b);
SpectralBackend spectral_backend_from_string(const std::string &s);

// Full eigendecomposition; n <= dense_limit.
std::shared_ptr<SpectralCalculus> make_dense_spectral(const SpMat &laplacian, Index dense_limit = 5000);
// Exact diagonalisation of the abelian Dirichlet Laplacian by separable DST-I (FFTW).
std::shared_ptr<SpectralCalculus> make_sine_spectral(const Lattice &latt);
// Lanczos approximation of g(L) x on the sparse operator; power-one functions are applied
// exactly (product or sparse Cholesky solve).
std::shared_ptr<SpectralCalculus> make_krylov_spectral(SpMat laplacian, double tol = 1e-10);

// Abelian -> Sine, n <= 5000 -> Dense, else Krylov.
std::shared_ptr<SpectralCalculus> make_spectral(const Lattice &latt, SpectralBackend backend = SpectralBackend::Auto,
                                                Index dense_limit = 5000);

}  // namespace carnot
