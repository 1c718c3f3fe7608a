#pragma once

#include <span>

#include <Eigen/SparseCore>

#include "fiberlab/manifold.hpp"

namespace fiberlab {

/// Discrete Laplace–Beltrami with Δ = -div grad (spectrum ≥ 0).
/// Δf = stiffness * f / mass; stiffness is symmetric and annihilates constants.
struct LaplaceOperator {
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd mass;

    ScalarField apply(const ScalarField& f) const;
};

LaplaceOperator laplacian_matrix(const DiscreteManifold& M);

/// Centered differences raised with g^{-1} on grids; area-averaged P1 face
/// gradients expressed in the vertex tangent frame on meshes.
VectorField gradient(const DiscreteManifold& M, const ScalarField& f);

/// Covariant Hessian ∂_a∂_b f - Γ^c_ab ∂_c f.
TensorField hessian(const DiscreteManifold& M, const ScalarField& f);

double inner(const DiscreteManifold& M, std::size_t i, const SmallVec& X, const SmallVec& Y);
double norm_sq(const DiscreteManifold& M, std::size_t i, const SmallVec& X);
/// Full g-norm squared g^{ik} g^{jl} T_ij T_kl.
double tensor_norm_sq(const DiscreteManifold& M, std::size_t i, const SmallMat& T);
double tensor_apply(const SmallMat& T, const SmallVec& X, const SmallVec& Y);

ScalarField pointwise_norm(const DiscreteManifold& M, const VectorField& X);
ScalarField pointwise_norm(const DiscreteManifold& M, const TensorField& T);

/// (Σ w f² / Σ w)^{1/2} over the region.
double l2_average(const DiscreteManifold& M, const ScalarField& f, std::span<const std::size_t> region);
/// Σ w |f| / Σ w over the region.
double l1_average(const DiscreteManifold& M, const ScalarField& f, std::span<const std::size_t> region);
double sup_abs(const ScalarField& f, std::span<const std::size_t> region);
double region_volume(const DiscreteManifold& M, std::span<const std::size_t> region);

std::vector<std::size_t> all_nodes(const DiscreteManifold& M);

/// Sample a function of chart position at every node.
template <class Fn>
ScalarField sample(const DiscreteManifold& M, Fn&& fn) {
    ScalarField f(static_cast<Eigen::Index>(M.size()));
    for (std::size_t i = 0; i < M.size(); ++i) f(static_cast<Eigen::Index>(i)) = fn(M.position(i));
    return f;
}

namespace kernels {

// Each pointwise kernel has an OpenMP version and a serial reference kept for
// tests and the benchmark.  Both produce bit-identical output.
VectorField gradient_serial(const DiscreteManifold& M, const ScalarField& f);
VectorField gradient_omp(const DiscreteManifold& M, const ScalarField& f);
TensorField hessian_serial(const DiscreteManifold& M, const ScalarField& f);
TensorField hessian_omp(const DiscreteManifold& M, const ScalarField& f);
ScalarField laplacian_apply_serial(const LaplaceOperator& L, const ScalarField& f);
ScalarField laplacian_apply_omp(const LaplaceOperator& L, const ScalarField& f);

}  // namespace kernels

}  // namespace fiberlab
