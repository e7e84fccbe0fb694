#pragma once

#include <carnot/algebra.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace carnot
{

using Index = std::int64_t;

struct LatticeSpec
{
  double radius = 3.0;
  double spacing = 0.375;
  bool offset = true;  // nodes at (k + 1/2) h so that no node sits at the identity
  std::size_t max_nodes = std::size_t(1) << 22;
};

// Tensor grid on the box [-R, R]^m in exponential coordinates with Dirichlet ghosts.
// K = floor(R/h). Offset: 2K nodes per axis at (k + 1/2)h, k = -K..K-1.
// Otherwise 2K - 1 nodes at k h, |k| <= K-1. Ghost layers (value 0) sit one step outside.
// Row-major node order, last axis fastest.
//
// axis_scale rescales both spacing and radius per axis; with s_a = exp(-nu_a t) the grid is
// the exact dilation image of the unscaled one.
class Lattice
{
public:
  Lattice(const StratifiedAlgebra &alg, LatticeSpec spec, std::vector<double> axis_scale = {});

  const StratifiedAlgebra &algebra() const { return alg_; }
  const LatticeSpec &spec() const { return spec_; }
  int dim() const { return alg_.dim(); }
  Index size() const { return size_; }
  int extent(int a) const { return n_[a]; }
  Index stride(int a) const { return stride_[a]; }
  double spacing(int a) const { return h_[a]; }
  int half_count() const { return K_; }

  // Coordinate of index i on axis a; i = -1 and i = extent(a) are the ghost layers.
  double coord(int a, int i) const { return (i - centre_) * h_[a]; }
  Vec point(Index node) const;
  void multi_index(Index node, int *out) const;
  Index index(const int *multi) const;
  // -1 when the neighbour falls on a ghost.
  Index neighbour(Index node, int a, int step) const;
  // Number of node steps to the nearest ghost layer (1 = adjacent).
  int boundary_distance(Index node) const;
  // Cell volume prod h_a.
  double cell_volume() const;

private:
  StratifiedAlgebra alg_;
  LatticeSpec spec_;
  std::vector<double> h_;
  std::vector<int> n_;
  std::vector<Index> stride_;
  Index size_ = 0;
  int K_ = 0;
  double centre_ = 0.0;
};

// Node samples of a scalar field; NonFiniteSample on any non-finite value.
Vec sample(const Lattice &latt, const std::function<double(const Vec &)> &f);

}  // namespace carnot
