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

#include "gml/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gml {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + " contains non-finite values");
    }
  }
}

using ConstMap = Eigen::Map<const Eigen::VectorXd>;

}  // namespace

std::vector<double> Kernel::apply(std::span<const double> in) const {
  std::vector<double> out(size());
  apply(in, out);
  return out;
}

DenseKernel::DenseKernel(Eigen::MatrixXd k) : k_(std::move(k)) {
  if (k_.rows() != k_.cols()) {
    throw std::invalid_argument("dense kernel must be square");
  }
}

DenseKernel DenseKernel::identity(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return DenseKernel(Eigen::MatrixXd::Identity(m, m));
}

void DenseKernel::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != size() || out.size() != size()) {
    throw std::invalid_argument("kernel size mismatch");
  }
  Eigen::Map<Eigen::VectorXd>(out.data(), k_.rows()) =
      k_ * ConstMap(in.data(), static_cast<Eigen::Index>(in.size()));
}

struct DiffusionOperator::Factor {
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

DiffusionOperator::DiffusionOperator(const EdgeWeights& weights, double epsilon, int substeps)
    : grid_(weights.grid()),
      edges_(grid_.edges()),
      epsilon_(epsilon),
      substeps_(substeps),
      factor_(std::make_unique<Factor>()) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (substeps < 1) {
    throw std::invalid_argument("substeps must be at least 1");
  }
  const double c = step_coefficient();
  const auto w = weights.values();
  std::vector<double> scaled(w.size());
  edge_coefficient_.resize(w.size());
  for (std::size_t e = 0; e < w.size(); ++e) {
    const double s = grid_.axis_scale(edges_[e].axis);
    scaled[e] = s * w[e];
    edge_coefficient_[e] = c * s;
  }
  const SparseMatrix lap = build_laplacian(grid_, scaled);
  SparseMatrix id(lap.rows(), lap.cols());
  id.setIdentity();
  m_ = id - c * lap;
  m_.makeCompressed();
  factor_->llt.compute(m_);
  if (factor_->llt.info() != Eigen::Success) {
    throw std::runtime_error("Cholesky factorization of the diffusion matrix failed");
  }
}

DiffusionOperator::~DiffusionOperator() = default;
DiffusionOperator::DiffusionOperator(DiffusionOperator&&) noexcept = default;
DiffusionOperator& DiffusionOperator::operator=(DiffusionOperator&&) noexcept = default;

std::vector<double> DiffusionOperator::solve(std::span<const double> b) const {
  if (b.size() != size()) {
    throw std::invalid_argument("vector length does not match grid");
  }
  const Eigen::VectorXd x = factor_->llt.solve(ConstMap(b.data(), static_cast<Eigen::Index>(b.size())));
  return std::vector<double>(x.data(), x.data() + x.size());
}

void DiffusionOperator::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != size() || out.size() != size()) {
    throw std::invalid_argument("vector length does not match grid");
  }
  require_finite(in, "kernel input");
  const auto n = static_cast<Eigen::Index>(in.size());
  Eigen::VectorXd a = ConstMap(in.data(), n);
  Eigen::VectorXd b(n);
  for (int s = 0; s < substeps_; ++s) {
    b = factor_->llt.solve(a);
    a.swap(b);
  }
  Eigen::Map<Eigen::VectorXd>(out.data(), n) = a;
}

std::vector<double> DiffusionOperator::apply(std::span<const double> v, KernelTape* tape) const {
  if (tape == nullptr) {
    return Kernel::apply(v);
  }
  if (v.size() != size()) {
    throw std::invalid_argument("vector length does not match grid");
  }
  require_finite(v, "kernel input");
  const auto n = static_cast<Eigen::Index>(v.size());
  tape->length = v.size();
  tape->substeps = static_cast<std::size_t>(substeps_);
  tape->states.resize(tape->length * tape->substeps);
  Eigen::VectorXd a = ConstMap(v.data(), n);
  Eigen::VectorXd b(n);
  for (int s = 0; s < substeps_; ++s) {
    b = factor_->llt.solve(a);
    a.swap(b);
    std::copy(a.data(), a.data() + n, tape->states.begin() + s * n);
  }
  return std::vector<double>(a.data(), a.data() + n);
}

std::vector<double> DiffusionOperator::adjoint_input(std::span<const double> g) const {
  return Kernel::apply(g);
}

std::vector<double> DiffusionOperator::adjoint_weights(const KernelTape& tape,
                                                       std::span<const double> g) const {
  std::vector<double> grad(edges_.size(), 0.0);
  accumulate_adjoint_weights(tape, g, grad);
  return grad;
}

void DiffusionOperator::accumulate_adjoint_weights(const KernelTape& tape,
                                                   std::span<const double> g,
                                                   std::span<double> grad) const {
  if (tape.length != size() || tape.substeps != static_cast<std::size_t>(substeps_) ||
      tape.states.size() != tape.length * tape.substeps) {
    throw std::invalid_argument("kernel tape does not match this operator");
  }
  if (g.size() != size() || grad.size() != edges_.size()) {
    throw std::invalid_argument("adjoint vector length mismatch");
  }
  require_finite(g, "adjoint input");

  const auto n = static_cast<Eigen::Index>(g.size());
  std::vector<double> sums(edges_.size(), 0.0);
  // g^l = M^{l-S} g, generated from l = S-1 down to 0.
  Eigen::VectorXd gl = ConstMap(g.data(), n);
  Eigen::VectorXd next(n);
  for (int l = substeps_ - 1; l >= 0; --l) {
    next = factor_->llt.solve(gl);
    gl.swap(next);
    const auto vl = tape.state(static_cast<std::size_t>(l));
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const std::size_t i = edges_[e].tail;
      const std::size_t j = edges_[e].head;
      sums[e] += (gl[static_cast<Eigen::Index>(i)] - gl[static_cast<Eigen::Index>(j)]) *
                 (vl[i] - vl[j]);
    }
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    grad[e] += kWeightAdjointSign * edge_coefficient_[e] * sums[e];
  }
}

Tensor DiffusionOperator::dense_kernel() const {
  const std::size_t n = size();
  if (n > kDenseDiagnosticLimit) {
    throw std::length_error("dense kernel diagnostics are limited to " +
                            std::to_string(kDenseDiagnosticLimit) + " vertices");
  }
  Tensor k = Tensor::zeros({n, n});
  std::vector<double> basis(n, 0.0);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < n; ++j) {
    basis[j] = 1.0;
    apply(basis, column);
    basis[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) k.data[i * n + j] = column[i];
  }
  return k;
}

Tensor DiffusionOperator::dense_cost() const {
  Tensor c = dense_kernel();
  for (double& x : c.data) {
    x = -epsilon_ * std::log(x);
  }
  return c;
}

}  // namespace gml
