#pragma once

#include <optional>
#include <vector>

#include "fiberlab/operators.hpp"

namespace fiberlab {

/// Map Φ = (Φ¹..Φᵏ) defined on a set of domain nodes.  `interior` marks nodes
/// whose whole derivative stencil lies in the domain; only there are ∇Φ and
/// Hess Φ meaningful.
struct SplittingMap {
    std::vector<ScalarField> components;
    NodeMask domain;
    NodeMask interior;
    std::vector<double> harmonic_residual;  // ‖ΔΦᵃ‖_{L̄²} over the free nodes
    std::size_t center = 0;
    double radius = 0.0;  // radius of the Dirichlet ball, 0 when given explicitly

    int k() const { return static_cast<int>(components.size()); }
    SmallVec value(std::size_t i) const;
};

/// Discrete Dirichlet problem ΔΦᵃ = 0 on the ball, Φᵃ = boundary_data[a] on
/// its boundary nodes.  Only the boundary entries of the data are read.
SplittingMap solve_harmonic(const DiscreteManifold& M, const GeodesicBall& ball,
                            const std::vector<ScalarField>& boundary_data);

/// Harmonic map on B(center, radius) with the base chart coordinates (unwrapped
/// around the center) as boundary data.
SplittingMap coordinate_map(const DiscreteManifold& M, std::size_t center, double radius);

/// Wrap given fields as a map on `domain` (every node when empty).
SplittingMap explicit_map(const DiscreteManifold& M, std::vector<ScalarField> components, NodeMask domain = {});

/// QΦ for a constant k×k matrix Q.
SplittingMap transformed(const SplittingMap& phi, const Eigen::MatrixXd& Q);

/// Pointwise Jacobian analytics of Φ, filled on interior nodes.
struct JacobianStats {
    int k = 0;
    std::vector<VectorField> grad;   // ∇Φᵃ
    std::vector<TensorField> hess;   // Hess Φᵃ
    std::vector<Eigen::MatrixXd> J;  // Gram matrix per node
    std::vector<Eigen::MatrixXd> V;  // eigenvectors of J (columns, ascending)
    std::vector<Eigen::VectorXd> eig;
    ScalarField lambda, Lambda, det_sqrt;
    NodeMask valid;
};

JacobianStats jacobian_stats(const DiscreteManifold& M, const SplittingMap& phi);

struct RegularMask {
    NodeMask regular;
    double threshold = 0.0;
    double singular_fraction = 0.0;  // weighted, relative to the valid nodes
};

/// 1e-6 times the median of Λ over valid nodes.
double default_regularity_threshold(const JacobianStats& stats);
RegularMask classify_regular(const DiscreteManifold& M, const JacobianStats& stats, double threshold);

struct Certificate {
    double supGrad = 0.0;
    double gramDev = 0.0;
    double hessEnergy = 0.0;
    bool rangeOk = false;
    double psi = 0.0;
    double epsilonHat = 0.0;
};

/// Deviation quantities of Φ over B(p, 2r); ball2r must lie inside Φ's interior.
Certificate certify(const DiscreteManifold& M, const SplittingMap& phi, const JacobianStats& stats,
                    const GeodesicBall& ball2r, double r, double epsilon_hat);

/// F(∇u, T, T) at a regular node, assembled in the eigenbasis of J.
double quantity_F(const JacobianStats& stats, const RegularMask& reg, const DiscreteManifold& M, std::size_t i,
                  const SmallVec& grad_u, const SmallVec& T);
/// G(T) at a regular node, assembled in the eigenbasis of J.
double quantity_G(const JacobianStats& stats, const RegularMask& reg, const DiscreteManifold& M, std::size_t i,
                  const SmallVec& T);

/// Normal part Σ (J⁻¹)_ab ⟨∇u, ∇Φᵃ⟩ ∇Φᵇ at a regular node, in the eigenbasis.
SmallVec normal_part(const JacobianStats& stats, const DiscreteManifold& M, std::size_t i, const SmallVec& grad_u);

}  // namespace fiberlab
