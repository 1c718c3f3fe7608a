#include <Eigen/Dense>

#include "fiberlab/operators.hpp"

namespace fiberlab {

namespace {

// Gradient of the linear interpolant on face f of the values picked by `val`.
template <class Val>
Eigen::Vector3d face_gradient(const TriMesh& T, int f, Val&& val, double& area) {
    const auto& t = T.faces[f];
    const Eigen::Vector3d& p0 = T.vertices[t[0]];
    const Eigen::Vector3d& p1 = T.vertices[t[1]];
    const Eigen::Vector3d& p2 = T.vertices[t[2]];
    const Eigen::Vector3d n2 = (p1 - p0).cross(p2 - p0);
    const double dbl = n2.norm();
    area = 0.5 * dbl;
    const Eigen::Vector3d n = n2 / dbl;
    // Σ u_i (n × e_i) / (2A), e_i the edge opposite vertex i.
    const Eigen::Vector3d g =
        val(t[0]) * n.cross(p2 - p1) + val(t[1]) * n.cross(p0 - p2) + val(t[2]) * n.cross(p1 - p0);
    return g / dbl;
}

template <class Val>
Eigen::Vector3d vertex_average_gradient(const TriMesh& T, std::size_t i, Val&& val) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    double wsum = 0.0;
    for (int f : T.vertex_faces[i]) {
        double area = 0.0;
        const Eigen::Vector3d g = face_gradient(T, f, val, area);
        acc += area * g;
        wsum += area;
    }
    return acc / wsum;
}

// Tangent-projected ambient gradient at a vertex.
Eigen::Vector3d mesh_ambient_gradient(const TriMesh& T, const ScalarField& u, std::size_t i) {
    const Eigen::Vector3d g = vertex_average_gradient(T, i, [&](int v) { return u(v); });
    const auto& F = T.frames[i];
    return F * (F.transpose() * g);
}

SmallVec grid_gradient_at(const DiscreteManifold& M, const ScalarField& f, std::size_t i) {
    const auto& G = M.grid();
    const int m = M.dim();
    SmallVec df(m);
    for (int a = 0; a < m; ++a)
        df(a) = (f(static_cast<Eigen::Index>(G.shift(i, a, 1))) - f(static_cast<Eigen::Index>(G.shift(i, a, -1)))) /
                (2.0 * G.spacing(a));
    return M.inverse_metric(i) * df;
}

SmallVec mesh_gradient_at(const DiscreteManifold& M, const ScalarField& f, std::size_t i) {
    const auto& T = M.mesh();
    const Eigen::Vector2d c = T.frames[i].transpose() * mesh_ambient_gradient(T, f, i);
    SmallVec out(2);
    out << c(0), c(1);
    return out;
}

SmallMat grid_hessian_at(const DiscreteManifold& M, const ScalarField& f, std::size_t i) {
    const auto& G = M.grid();
    const int m = M.dim();
    auto val = [&](std::size_t j) { return f(static_cast<Eigen::Index>(j)); };
    SmallVec df(m);
    for (int a = 0; a < m; ++a)
        df(a) = (val(G.shift(i, a, 1)) - val(G.shift(i, a, -1))) / (2.0 * G.spacing(a));
    SmallMat H(m, m);
    for (int a = 0; a < m; ++a) {
        const double ha = G.spacing(a);
        H(a, a) = (val(G.shift(i, a, 1)) - 2.0 * val(i) + val(G.shift(i, a, -1))) / (ha * ha);
        for (int b = a + 1; b < m; ++b) {
            const double hb = G.spacing(b);
            auto at = [&](int sa, int sb) {
                std::array<int, 3> s{0, 0, 0};
                s[a] = sa;
                s[b] = sb;
                return val(G.offset(i, std::span<const int>(s.data(), static_cast<std::size_t>(m))));
            };
            H(a, b) = H(b, a) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * ha * hb);
        }
    }
    const auto gamma = M.christoffel(i);
    for (int c = 0; c < m; ++c) H -= df(c) * gamma[c];
    return H;
}

std::vector<Eigen::Vector3d> mesh_ambient_gradients(const DiscreteManifold& M, const ScalarField& f,
                                                    bool parallel) {
    const auto& T = M.mesh();
    const auto n = static_cast<long>(M.size());
    std::vector<Eigen::Vector3d> out(M.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (long i = 0; i < n; ++i) out[i] = mesh_ambient_gradient(T, f, static_cast<std::size_t>(i));
    return out;
}

// Levi-Civita derivative of the embedded surface: tangential part of the
// ambient derivative of the (tangent) gradient field.
SmallMat mesh_hessian_at(const DiscreteManifold& M, const std::vector<Eigen::Vector3d>& grad,
                         std::size_t i) {
    const auto& T = M.mesh();
    Eigen::Matrix3d D;  // D(c, d) = ∂_d (∇f)^c
    for (int c = 0; c < 3; ++c)
        D.row(c) = vertex_average_gradient(T, i, [&](int v) { return grad[v](c); }).transpose();
    const auto& F = T.frames[i];
    const Eigen::Matrix2d h = F.transpose() * D * F;
    SmallMat H(2, 2);
    H(0, 0) = h(0, 0);
    H(1, 1) = h(1, 1);
    H(0, 1) = H(1, 0) = 0.5 * (h(0, 1) + h(1, 0));
    return H;
}

VectorField gradient_impl(const DiscreteManifold& M, const ScalarField& f, bool parallel) {
    const int m = M.dim();
    VectorField out{Eigen::MatrixXd(static_cast<Eigen::Index>(M.size()), m)};
    const auto n = static_cast<long>(M.size());
    if (M.is_grid()) {
#pragma omp parallel for schedule(static) if (parallel)
        for (long i = 0; i < n; ++i) out.set(static_cast<std::size_t>(i), grid_gradient_at(M, f, static_cast<std::size_t>(i)));
    } else {
#pragma omp parallel for schedule(static) if (parallel)
        for (long i = 0; i < n; ++i) out.set(static_cast<std::size_t>(i), mesh_gradient_at(M, f, static_cast<std::size_t>(i)));
    }
    return out;
}

TensorField hessian_impl(const DiscreteManifold& M, const ScalarField& f, bool parallel) {
    const int m = M.dim();
    TensorField out{m, Eigen::MatrixXd(static_cast<Eigen::Index>(M.size()), m * m)};
    const auto n = static_cast<long>(M.size());
    if (M.is_grid()) {
#pragma omp parallel for schedule(static) if (parallel)
        for (long i = 0; i < n; ++i) out.set(static_cast<std::size_t>(i), grid_hessian_at(M, f, static_cast<std::size_t>(i)));
    } else {
        const auto grad = mesh_ambient_gradients(M, f, parallel);
#pragma omp parallel for schedule(static) if (parallel)
        for (long i = 0; i < n; ++i) out.set(static_cast<std::size_t>(i), mesh_hessian_at(M, grad, static_cast<std::size_t>(i)));
    }
    return out;
}

// The stiffness matrix is symmetric, so column j doubles as row j.
ScalarField apply_impl(const LaplaceOperator& L, const ScalarField& f, bool parallel) {
    const auto n = static_cast<long>(L.mass.size());
    ScalarField out(n);
#pragma omp parallel for schedule(static) if (parallel)
    for (long j = 0; j < n; ++j) {
        double s = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(L.stiffness, j); it; ++it) s += it.value() * f(it.row());
        out(j) = s / L.mass(j);
    }
    return out;
}

}  // namespace

namespace kernels {

VectorField gradient_serial(const DiscreteManifold& M, const ScalarField& f) { return gradient_impl(M, f, false); }
VectorField gradient_omp(const DiscreteManifold& M, const ScalarField& f) { return gradient_impl(M, f, true); }
TensorField hessian_serial(const DiscreteManifold& M, const ScalarField& f) { return hessian_impl(M, f, false); }
TensorField hessian_omp(const DiscreteManifold& M, const ScalarField& f) { return hessian_impl(M, f, true); }
ScalarField laplacian_apply_serial(const LaplaceOperator& L, const ScalarField& f) { return apply_impl(L, f, false); }
ScalarField laplacian_apply_omp(const LaplaceOperator& L, const ScalarField& f) { return apply_impl(L, f, true); }

}  // namespace kernels

}  // namespace fiberlab
