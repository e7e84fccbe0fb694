#pragma once

#include <carnot/errors.hpp>

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace carnot
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One structure constant: [X_i, X_j] = ... + value * X_k. Indices are 0-based.
struct Bracket
{
  int i;
  int j;
  int k;
  double value;
};

// Stratified nilpotent Lie algebra in a graded basis X_1..X_m.
// Immutable after construction; group law is the BCH product in exponential coordinates.
class StratifiedAlgebra
{
public:
  // Brackets are given for i < j; antisymmetry is filled in. Throws on any invariant failure.
  StratifiedAlgebra(std::vector<int> layer_dims, const std::vector<Bracket> &brackets,
                    std::string name = "custom");

  // [X_{2i-1}, X_{2i}] = -4 X_t, matching the fields X = d + 2y dt, Y = d - 2x dt.
  static StratifiedAlgebra heisenberg(int d);
  static StratifiedAlgebra abelian(int m);
  // Filiform step-3 algebra with layers (2,1,1): [X1,X2] = X3, [X1,X3] = X4.
  static StratifiedAlgebra engel();

  const std::string &name() const { return name_; }
  int step() const { return static_cast<int>(layers_.size()); }
  int dim() const { return m_; }
  const std::vector<int> &layer_dims() const { return layers_; }
  int horizontal_dim() const { return layers_.front(); }
  // 1-based layer index of basis vector j (0-based).
  int weight(int j) const { return weights_[j]; }
  const std::vector<int> &weights() const { return weights_; }
  int homogeneous_dimension() const { return M_; }
  double c(int i, int j, int k) const { return c_[(i * m_ + j) * m_ + k]; }
  bool is_abelian() const { return step() == 1; }
  // Heisenberg type: layers (2d, 1).
  bool is_heisenberg() const { return heis_; }

  Vec bracket(const Vec &x, const Vec &y) const;
  Vec multiply(const Vec &x, const Vec &y) const;
  Vec inverse(const Vec &x) const { return -x; }
  Vec dilate(double t, const Vec &x) const;

  // Row j holds the coefficients of the left-invariant field X_j = sum_k a_jk(x) d_k,
  // i.e. d/ds BCH(x, s e_j) at s = 0.
  Mat field_coefficients(const Vec &x) const;

  // Largest |Jacobi residual| and |antisymmetry residual| over all basis triples.
  double jacobi_residual() const;

private:
  struct Word
  {
    std::vector<unsigned char> letters;  // 0 = X, 1 = Y
    double coefficient;
    int y_count;
  };

  void validate() const;
  void build_bch_table();
  Vec nested(const Word &w, const Vec &x, const Vec &y) const;

  std::string name_;
  std::vector<int> layers_;
  std::vector<int> weights_;
  int m_ = 0;
  int M_ = 0;
  bool heis_ = false;
  std::vector<double> c_;
  std::vector<Word> words_;
};

enum class QuasiNormKind
{
  PowerSum,
  HeisenbergRho,
  Euclidean,
  UserSupplied
};

std::string to_string(QuasiNormKind k);
QuasiNormKind quasi_norm_kind_from_string(const std::string &s);

// Homogeneous quasi-norm: |dil_t x| = e^t |x|, vanishing only at the identity.
class QuasiNorm
{
public:
  QuasiNorm(const StratifiedAlgebra &alg, QuasiNormKind kind);
  // Degree-1 homogeneity and positivity are probed at construction; InvalidQuasiNorm otherwise.
  QuasiNorm(const StratifiedAlgebra &alg, std::function<double(const Vec &)> fn,
            unsigned probe_seed = 7);

  QuasiNormKind kind() const { return kind_; }
  double operator()(const Vec &x) const;

private:
  std::vector<int> weights_;
  int exponent_ = 2;  // 2 r!
  int m1_ = 0;
  QuasiNormKind kind_;
  std::function<double(const Vec &)> user_;
};

// Heisenberg closed forms. |z|^2 is the squared first-layer norm, t the centre coordinate.
double heisenberg_rho(const StratifiedAlgebra &alg, const Vec &x);
// (grad rho)^2 / rho^2 = |z|^2 / (|z|^4 + t^2); OriginSingular at e.
double rho_gradient_weight(const StratifiedAlgebra &alg, const Vec &x);

struct HorizontalPart
{
  Vec coords;
  double norm;
};
HorizontalPart horizontal_part(const StratifiedAlgebra &alg, const Vec &x);

// Random algebra with the given layers: [X_i, X_j] for i in layer 1 spans the next layer.
// Used by property tests; the construction is a free-nilpotent quotient so Jacobi holds.
std::vector<Bracket> random_grading_brackets(const std::vector<int> &layers, unsigned seed);

}  // namespace carnot
