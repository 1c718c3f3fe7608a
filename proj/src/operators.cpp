#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fiberlab/operators.hpp"

namespace fiberlab {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_edge(Triplets& t, std::size_t i, std::size_t j, double c) {
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
    t.emplace_back(a, a, c);
    t.emplace_back(b, b, c);
    t.emplace_back(a, b, -c);
    t.emplace_back(b, a, -c);
}

// Compact two-point fluxes for g^{aa} (metric at the edge midpoint) and
// centred-difference products for the mixed terms g^{ab}, a ≠ b.
Eigen::SparseMatrix<double> grid_stiffness(const DiscreteManifold& M) {
    const auto& G = M.grid();
    const int m = M.dim();
    const double V = G.cell_volume();
    Triplets t;
    t.reserve(M.size() * static_cast<std::size_t>(4 * m + 8 * m * (m - 1)));
    for (std::size_t i = 0; i < M.size(); ++i) {
        const SmallVec x = G.position(i);
        for (int a = 0; a < m; ++a) {
            const double h = G.spacing(a);
            SmallVec mid = x;
            mid(a) += 0.5 * h;
            const SmallMat g = M.metric_at(std::span<const double>(mid.data(), static_cast<std::size_t>(m)));
            const SmallMat gi = g.inverse();
            const double c = std::sqrt(g.determinant()) * gi(a, a) * V / (h * h);
            add_edge(t, i, G.shift(i, a, 1), c);
        }
        const SmallMat& gi = M.inverse_metric(i);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                if (a == b || gi(a, b) == 0.0) continue;
                const double c = M.volume_element(i) * gi(a, b) * V / (4.0 * G.spacing(a) * G.spacing(b));
                const std::size_t pa = G.shift(i, a, 1), ma = G.shift(i, a, -1);
                const std::size_t pb = G.shift(i, b, 1), mb = G.shift(i, b, -1);
                auto put = [&](std::size_t r, std::size_t s, double v) {
                    t.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s), v);
                };
                // c (d_a d_b^T) with d_a = e_{pa} - e_{ma}; the (b, a) pass supplies the transpose.
                put(pa, pb, c);
                put(pa, mb, -c);
                put(ma, pb, -c);
                put(ma, mb, c);
            }
    }
    Eigen::SparseMatrix<double> S(static_cast<Eigen::Index>(M.size()), static_cast<Eigen::Index>(M.size()));
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

Eigen::SparseMatrix<double> mesh_stiffness(const DiscreteManifold& M) {
    const auto& T = M.mesh();
    Triplets t;
    t.reserve(T.faces.size() * 12);
    for (const auto& f : T.faces) {
        for (int k = 0; k < 3; ++k) {
            const int i = f[(k + 1) % 3], j = f[(k + 2) % 3];
            const Eigen::Vector3d u = T.vertices[i] - T.vertices[f[k]];
            const Eigen::Vector3d v = T.vertices[j] - T.vertices[f[k]];
            const double cot = u.dot(v) / u.cross(v).norm();
            add_edge(t, static_cast<std::size_t>(i), static_cast<std::size_t>(j), 0.5 * cot);
        }
    }
    Eigen::SparseMatrix<double> S(static_cast<Eigen::Index>(M.size()), static_cast<Eigen::Index>(M.size()));
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

}  // namespace

ScalarField LaplaceOperator::apply(const ScalarField& f) const { return kernels::laplacian_apply_omp(*this, f); }

LaplaceOperator laplacian_matrix(const DiscreteManifold& M) {
    LaplaceOperator L;
    L.stiffness = M.is_grid() ? grid_stiffness(M) : mesh_stiffness(M);
    L.stiffness.makeCompressed();
    L.mass = M.weights();
    return L;
}

VectorField gradient(const DiscreteManifold& M, const ScalarField& f) { return kernels::gradient_omp(M, f); }

TensorField hessian(const DiscreteManifold& M, const ScalarField& f) { return kernels::hessian_omp(M, f); }

double inner(const DiscreteManifold& M, std::size_t i, const SmallVec& X, const SmallVec& Y) {
    return X.dot(M.metric(i) * Y);
}

double norm_sq(const DiscreteManifold& M, std::size_t i, const SmallVec& X) { return inner(M, i, X, X); }

double tensor_norm_sq(const DiscreteManifold& M, std::size_t i, const SmallMat& T) {
    const SmallMat A = M.inverse_metric(i) * T;
    return (A * A).trace();
}

double tensor_apply(const SmallMat& T, const SmallVec& X, const SmallVec& Y) { return X.dot(T * Y); }

ScalarField pointwise_norm(const DiscreteManifold& M, const VectorField& X) {
    ScalarField out(static_cast<Eigen::Index>(M.size()));
    for (std::size_t i = 0; i < M.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(0.0, norm_sq(M, i, X.at(i))));
    return out;
}

ScalarField pointwise_norm(const DiscreteManifold& M, const TensorField& T) {
    ScalarField out(static_cast<Eigen::Index>(M.size()));
    for (std::size_t i = 0; i < M.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(0.0, tensor_norm_sq(M, i, T.at(i))));
    return out;
}

double region_volume(const DiscreteManifold& M, std::span<const std::size_t> region) {
    double v = 0.0;
    for (std::size_t i : region) v += M.weight(i);
    return v;
}

double l2_average(const DiscreteManifold& M, const ScalarField& f, std::span<const std::size_t> region) {
    double s = 0.0, v = 0.0;
    for (std::size_t i : region) {
        const double fi = f(static_cast<Eigen::Index>(i));
        s += M.weight(i) * fi * fi;
        v += M.weight(i);
    }
    if (!(v > 0.0)) throw PreconditionError("average over an empty region");
    return std::sqrt(s / v);
}

double l1_average(const DiscreteManifold& M, const ScalarField& f, std::span<const std::size_t> region) {
    double s = 0.0, v = 0.0;
    for (std::size_t i : region) {
        s += M.weight(i) * std::abs(f(static_cast<Eigen::Index>(i)));
        v += M.weight(i);
    }
    if (!(v > 0.0)) throw PreconditionError("average over an empty region");
    return s / v;
}

double sup_abs(const ScalarField& f, std::span<const std::size_t> region) {
    double s = 0.0;
    for (std::size_t i : region) s = std::max(s, std::abs(f(static_cast<Eigen::Index>(i))));
    return s;
}

std::vector<std::size_t> all_nodes(const DiscreteManifold& M) {
    std::vector<std::size_t> out(M.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

}  // namespace fiberlab
