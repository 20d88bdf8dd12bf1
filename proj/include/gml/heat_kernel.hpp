/* Copyright 2026 The gml Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "gml/grid_graph.hpp"
#include "gml/tensor_store.hpp"

namespace gml {

/// A symmetric linear operator on histograms. Sinkhorn scalings and the
/// colour map only need to apply it.
class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual std::size_t size() const = 0;
  virtual void apply(std::span<const double> in, std::span<double> out) const = 0;

  std::vector<double> apply(std::span<const double> in) const;
};

/// Explicit N x N kernel. Used for small diagnostics and to inject special
/// kernels (e.g. the identity) in tests.
class DenseKernel final : public Kernel {
 public:
  explicit DenseKernel(Eigen::MatrixXd k);
  static DenseKernel identity(std::size_t n);

  using Kernel::apply;
  std::size_t size() const override { return static_cast<std::size_t>(k_.rows()); }
  void apply(std::span<const double> in, std::span<double> out) const override;
  const Eigen::MatrixXd& matrix() const { return k_; }

 private:
  Eigen::MatrixXd k_;
};

/// Intermediate states v^l = M^{-(l+1)} v of one kernel application,
/// l = 0..S-1. The last state is the kernel output.
struct KernelTape {
  std::size_t length = 0;
  std::size_t substeps = 0;
  std::vector<double> states;

  std::span<const double> state(std::size_t l) const {
    return std::span<const double>(states).subspan(l * length, length);
  }
};

/// Sign of the weight adjoint. Differentiating M^{-S} gives
/// d<g, M^{-S} v>/dw_e = -sum_l (g^l)^T (dM/dw_e) v^l, and dM/dw_e is the
/// positive rank-one term c (e_i - e_j)(e_i - e_j)^T, so the sum enters with
/// a minus sign. Pinned by the finite-difference tests.
inline constexpr double kWeightAdjointSign = -1.0;

/// Dense diagnostics refuse grids larger than this.
inline constexpr std::size_t kDenseDiagnosticLimit = 4096;

/// Implicit-Euler heat kernel K = M^{-S} with M = Id - (eps / 4S) L, where L
/// is the grid Laplacian of the edge weights scaled by axis_scale() (the grid
/// spans the unit cube). M is factorized once by a sparse Cholesky with AMD
/// ordering; every application is S pairs of triangular solves.
///
/// Immutable after construction. Concurrent apply calls are safe.
class DiffusionOperator final : public Kernel {
 public:
  DiffusionOperator(const EdgeWeights& weights, double epsilon, int substeps);
  ~DiffusionOperator() override;
  DiffusionOperator(DiffusionOperator&&) noexcept;
  DiffusionOperator& operator=(DiffusionOperator&&) noexcept;

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const override { return grid_.vertex_count(); }
  std::size_t edge_count() const { return edges_.size(); }
  double epsilon() const { return epsilon_; }
  int substeps() const { return substeps_; }
  /// eps / (4 S)
  double step_coefficient() const { return epsilon_ / (4.0 * substeps_); }
  const SparseMatrix& matrix() const { return m_; }

  using Kernel::apply;
  void apply(std::span<const double> in, std::span<double> out) const override;
  /// u = M^{-S} v; when tape is non-null it receives every intermediate state.
  std::vector<double> apply(std::span<const double> v, KernelTape* tape) const;

  /// One solve, M^{-1} b.
  std::vector<double> solve(std::span<const double> b) const;

  /// Transpose of v -> K v applied to g. K is symmetric so this is K g.
  std::vector<double> adjoint_input(std::span<const double> g) const;

  /// Gradient of w -> <g, K(w) v> with respect to every edge weight, where v
  /// is the input recorded in the tape.
  std::vector<double> adjoint_weights(const KernelTape& tape, std::span<const double> g) const;
  /// Adds the same gradient into grad.
  void accumulate_adjoint_weights(const KernelTape& tape, std::span<const double> g,
                                  std::span<double> grad) const;

  Tensor dense_kernel() const;
  /// -eps * log(K), elementwise.
  Tensor dense_cost() const;

 private:
  struct Factor;

  GridSpec grid_;
  std::vector<GridSpec::Edge> edges_;
  std::vector<double> edge_coefficient_;  // c * axis_scale, per edge
  double epsilon_;
  int substeps_;
  SparseMatrix m_;
  std::unique_ptr<Factor> factor_;
};

}  // namespace gml
