#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/QR>

#include "fiberlab/manifold.hpp"
#include "fiberlab/splitting.hpp"

namespace fixtures {

// Torus of revolution (radii R, a) with 4n x n vertices.  Quad diagonals are
// mirrored across the plane X = 0 so the mesh is symmetric under X -> -X.
inline void write_torus_off(const std::string& path, int n, double R = 1.0, double a = 0.4) {
    const int nu = 4 * n, nv = n;
    const double tau = 2.0 * std::numbers::pi;
    std::vector<Eigen::Vector3d> V;
    std::vector<std::array<int, 3>> F;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const double u = tau * i / nu, v = tau * j / nv;
            V.emplace_back((R + a * std::cos(v)) * std::cos(u), (R + a * std::cos(v)) * std::sin(u), a * std::sin(v));
        }
    const auto id = [&](int i, int j) { return ((i % nu + nu) % nu) * nv + ((j % nv + nv) % nv); };
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const int p = id(i, j), q = id(i + 1, j), s = id(i + 1, j + 1), t = id(i, j + 1);
            if (i >= nu / 4 && i < 3 * nu / 4) {
                F.push_back({p, q, t});
                F.push_back({q, s, t});
            } else {
                F.push_back({p, q, s});
                F.push_back({p, s, t});
            }
        }
    fiberlab::write_off(path, V, F);
}

inline fiberlab::FamilySpec mesh_spec(const std::string& path) {
    fiberlab::FamilySpec s;
    s.kind = fiberlab::FamilyKind::ImportedMesh;
    s.base_dim = 1;
    s.mesh_path = path;
    return s;
}

inline Eigen::MatrixXd random_orthogonal(int k, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd A(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) A(i, j) = n(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ();
    for (int j = 0; j < k; ++j)
        if (qr.matrixQR()(j, j) < 0) Q.col(j) *= -1.0;
    return Q;
}

struct Twisted {
    fiberlab::DiscreteManifold M;
    fiberlab::SplittingMap phi;
    fiberlab::ScalarField u;
};

// A non-diagonal k = 2 map on the twisted 3-torus, restricted to a box in the base.
inline Twisted twisted_setup() {
    using fiberlab::SmallVec;
    constexpr double kPi = std::numbers::pi;
    fiberlab::FamilySpec s;
    s.kind = fiberlab::FamilyKind::TwistedTorus3;
    s.base_dim = 2;
    s.epsilon = 0.2;
    s.twist = 0.3;
    s.resolution = {24, 16};
    auto M = fiberlab::build_family(s);
    fiberlab::NodeMask box(M.size(), 0);
    for (std::size_t i = 0; i < M.size(); ++i) {
        const SmallVec x = M.position(i);
        box[i] = std::abs(x(0) - 0.5) < 0.3 && std::abs(x(1) - 0.5) < 0.3;
    }
    auto p1 = fiberlab::sample(M, [](const SmallVec& x) { return x(0) + 0.04 * std::sin(2 * kPi * x(1)); });
    auto p2 = fiberlab::sample(M, [](const SmallVec& x) { return 0.5 * x(0) + x(1) + 0.03 * std::cos(2 * kPi * x(0)); });
    auto phi = fiberlab::explicit_map(M, {p1, p2}, box);
    auto u = fiberlab::sample(M, [](const SmallVec& x) {
        return std::sin(2 * kPi * x(0)) * std::cos(2 * kPi * x(2)) + std::cos(2 * kPi * x(1)) * std::sin(2 * kPi * x(2));
    });
    return {std::move(M), std::move(phi), std::move(u)};
}

}  // namespace fixtures
