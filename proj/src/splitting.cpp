#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "fiberlab/splitting.hpp"

namespace fiberlab {

namespace {

NodeMask interior_of(const DiscreteManifold& M, const NodeMask& domain) {
    NodeMask in(M.size(), 0);
    for (std::size_t i = 0; i < M.size(); ++i) {
        if (!domain[i]) continue;
        const auto nb = stencil_neighbours(M, i);
        in[i] = std::all_of(nb.begin(), nb.end(), [&](std::size_t j) { return domain[j] != 0; });
    }
    return in;
}

// Grid stencils reach the box neighbours; mesh Hessians reach the two-ring.
NodeMask derivative_interior(const DiscreteManifold& M, const NodeMask& domain) {
    NodeMask in = interior_of(M, domain);
    if (!M.is_grid()) in = interior_of(M, in);
    return in;
}

SmallVec rotated_gradient(const JacobianStats& s, std::size_t i, int a) {
    SmallVec g = SmallVec::Zero(s.grad[0].dim());
    for (int b = 0; b < s.k; ++b) g += s.V[i](b, a) * s.grad[b].at(i);
    return g;
}

SmallMat rotated_hessian(const JacobianStats& s, std::size_t i, int a) {
    SmallMat h = SmallMat::Zero(s.hess[0].m, s.hess[0].m);
    for (int b = 0; b < s.k; ++b) h += s.V[i](b, a) * s.hess[b].at(i);
    return h;
}

void require_regular(const RegularMask& reg, std::size_t i) {
    if (!reg.regular[i]) throw PreconditionError("node " + std::to_string(i) + " is singular for the splitting map");
}

}  // namespace

SmallVec SplittingMap::value(std::size_t i) const {
    SmallVec v(k());
    for (int a = 0; a < k(); ++a) v(a) = components[a](static_cast<Eigen::Index>(i));
    return v;
}

SplittingMap solve_harmonic(const DiscreteManifold& M, const GeodesicBall& ball,
                            const std::vector<ScalarField>& boundary_data) {
    if (boundary_data.empty()) throw PreconditionError("splitting map needs at least one component");
    if (ball.boundary.empty()) throw PreconditionError("Dirichlet ball has no boundary nodes");
    NodeMask fixed(M.size(), 0);
    for (std::size_t i : ball.boundary) fixed[i] = 1;
    std::vector<Eigen::Index> local(M.size(), -1);
    std::vector<std::size_t> free;
    for (std::size_t i : ball.members)
        if (!fixed[i]) {
            local[i] = static_cast<Eigen::Index>(free.size());
            free.push_back(i);
        }
    if (free.empty()) throw PreconditionError("Dirichlet ball has no free nodes");

    const LaplaceOperator L = laplacian_matrix(M);
    const auto nf = static_cast<Eigen::Index>(free.size());
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t i : free)
        for (Eigen::SparseMatrix<double>::InnerIterator it(L.stiffness, static_cast<Eigen::Index>(i)); it; ++it)
            if (local[it.row()] >= 0) t.emplace_back(local[it.row()], local[i], it.value());
    Eigen::SparseMatrix<double> A(nf, nf);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw Error("Dirichlet system is singular (degenerate ball)");

    SplittingMap phi;
    phi.domain = ball.mask;
    phi.interior = derivative_interior(M, phi.domain);
    phi.center = ball.center;
    phi.radius = ball.radius;
    for (const ScalarField& data : boundary_data) {
        ScalarField f = ScalarField::Zero(static_cast<Eigen::Index>(M.size()));
        for (std::size_t i : ball.boundary) f(static_cast<Eigen::Index>(i)) = data(static_cast<Eigen::Index>(i));
        const ScalarField Sf = L.stiffness * f;
        Eigen::VectorXd rhs(nf);
        for (Eigen::Index j = 0; j < nf; ++j) rhs(j) = -Sf(static_cast<Eigen::Index>(free[j]));
        const Eigen::VectorXd x = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !x.allFinite()) throw Error("Dirichlet solve failed");
        for (Eigen::Index j = 0; j < nf; ++j) f(static_cast<Eigen::Index>(free[j])) = x(j);

        const ScalarField r = L.stiffness * f;
        double s = 0.0, v = 0.0;
        for (std::size_t i : free) {
            const double ri = r(static_cast<Eigen::Index>(i)) / M.weight(i);
            s += M.weight(i) * ri * ri;
            v += M.weight(i);
        }
        phi.harmonic_residual.push_back(std::sqrt(s / v));
        phi.components.push_back(std::move(f));
    }
    return phi;
}

SplittingMap coordinate_map(const DiscreteManifold& M, std::size_t center, double radius) {
    const GeodesicBall ball = geodesic_ball(M, center, radius);
    const SmallVec p = M.position(center);
    const int k = M.base_dim();
    std::vector<ScalarField> data(static_cast<std::size_t>(k), ScalarField::Zero(static_cast<Eigen::Index>(M.size())));
    for (std::size_t i : ball.members) {
        const SmallVec x = M.position(i);
        const SmallVec d = M.wrapped_offset(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                                            std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
        for (int a = 0; a < k; ++a) data[a](static_cast<Eigen::Index>(i)) = p(a) + d(a);
    }
    return solve_harmonic(M, ball, data);
}

SplittingMap explicit_map(const DiscreteManifold& M, std::vector<ScalarField> components, NodeMask domain) {
    if (components.empty()) throw PreconditionError("splitting map needs at least one component");
    SplittingMap phi;
    phi.components = std::move(components);
    phi.domain = domain.empty() ? NodeMask(M.size(), 1) : std::move(domain);
    phi.interior = derivative_interior(M, phi.domain);
    phi.harmonic_residual.assign(phi.components.size(), 0.0);
    return phi;
}

SplittingMap transformed(const SplittingMap& phi, const Eigen::MatrixXd& Q) {
    if (Q.rows() != phi.k() || Q.cols() != phi.k()) throw PreconditionError("transform size does not match k");
    SplittingMap out = phi;
    for (int a = 0; a < phi.k(); ++a) {
        out.components[a].setZero();
        for (int b = 0; b < phi.k(); ++b) out.components[a] += Q(a, b) * phi.components[b];
    }
    return out;
}

JacobianStats jacobian_stats(const DiscreteManifold& M, const SplittingMap& phi) {
    JacobianStats s;
    s.k = phi.k();
    for (const auto& c : phi.components) {
        s.grad.push_back(gradient(M, c));
        s.hess.push_back(hessian(M, c));
    }
    const auto n = static_cast<Eigen::Index>(M.size());
    s.J.assign(M.size(), Eigen::MatrixXd());
    s.V.assign(M.size(), Eigen::MatrixXd());
    s.eig.assign(M.size(), Eigen::VectorXd());
    s.lambda = ScalarField::Zero(n);
    s.Lambda = ScalarField::Zero(n);
    s.det_sqrt = ScalarField::Zero(n);
    s.valid = phi.interior;
    const long nn = static_cast<long>(M.size());
#pragma omp parallel for schedule(static)
    for (long li = 0; li < nn; ++li) {
        const auto i = static_cast<std::size_t>(li);
        if (!s.valid[i]) continue;
        Eigen::MatrixXd J(s.k, s.k);
        for (int a = 0; a < s.k; ++a)
            for (int b = a; b < s.k; ++b) J(a, b) = J(b, a) = inner(M, i, s.grad[a].at(i), s.grad[b].at(i));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
        s.J[i] = J;
        s.V[i] = es.eigenvectors();
        s.eig[i] = es.eigenvalues();
        s.lambda(li) = es.eigenvalues()(0);
        s.Lambda(li) = es.eigenvalues()(s.k - 1);
        s.det_sqrt(li) = std::sqrt(std::max(0.0, J.determinant()));
    }
    return s;
}

double default_regularity_threshold(const JacobianStats& stats) {
    std::vector<double> v;
    for (std::size_t i = 0; i < stats.valid.size(); ++i)
        if (stats.valid[i]) v.push_back(stats.Lambda(static_cast<Eigen::Index>(i)));
    if (v.empty()) throw PreconditionError("splitting map has no interior nodes");
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return 1e-6 * *mid;
}

RegularMask classify_regular(const DiscreteManifold& M, const JacobianStats& stats, double threshold) {
    if (!(threshold > 0.0)) throw PreconditionError("regularity threshold must be positive");
    RegularMask r;
    r.threshold = threshold;
    r.regular.assign(M.size(), 0);
    double total = 0.0, singular = 0.0;
    for (std::size_t i = 0; i < M.size(); ++i) {
        if (!stats.valid[i]) continue;
        total += M.weight(i);
        if (stats.lambda(static_cast<Eigen::Index>(i)) > threshold)
            r.regular[i] = 1;
        else
            singular += M.weight(i);
    }
    r.singular_fraction = total > 0.0 ? singular / total : 0.0;
    return r;
}

Certificate certify(const DiscreteManifold& M, const SplittingMap& phi, const JacobianStats& stats,
                    const GeodesicBall& ball2r, double r, double epsilon_hat) {
    for (std::size_t i : ball2r.members)
        if (!phi.interior[i]) throw PreconditionError("certificate ball leaves the interior of the splitting map");
    Certificate c;
    c.epsilonHat = epsilon_hat;
    const double vol = region_volume(M, ball2r.members);
    const SmallVec p = phi.value(ball2r.center);
    c.rangeOk = true;
    for (int a = 0; a < stats.k; ++a) {
        double hsum = 0.0;
        for (std::size_t i : ball2r.members) {
            c.supGrad = std::max(c.supGrad, std::sqrt(std::max(0.0, norm_sq(M, i, stats.grad[a].at(i)))));
            hsum += M.weight(i) * tensor_norm_sq(M, i, stats.hess[a].at(i));
        }
        c.hessEnergy += r * r * hsum / vol;
        for (int b = a; b < stats.k; ++b) {
            double dev = 0.0;
            for (std::size_t i : ball2r.members) dev += M.weight(i) * std::abs(stats.J[i](a, b) - (a == b ? 1.0 : 0.0));
            c.gramDev = std::max(c.gramDev, dev / vol);
        }
    }
    for (std::size_t i : ball2r.members)
        if ((phi.value(i) - p).norm() > 2.0 * r * (1.0 + 1e-9)) c.rangeOk = false;
    c.psi = std::max(c.gramDev, std::sqrt(c.hessEnergy));
    return c;
}

double quantity_F(const JacobianStats& stats, const RegularMask& reg, const DiscreteManifold& M, std::size_t i,
                  const SmallVec& grad_u, const SmallVec& T) {
    require_regular(reg, i);
    double F = 0.0;
    for (int a = 0; a < stats.k; ++a) {
        const double la = stats.eig[i](a);
        const double ca = inner(M, i, grad_u, rotated_gradient(stats, i, a)) / std::sqrt(la);
        double prod = 1.0;
        for (int b = 0; b < stats.k; ++b)
            if (b != a) prod *= std::sqrt(std::max(0.0, stats.eig[i](b)));
        F += ca * tensor_apply(rotated_hessian(stats, i, a), T, T) * prod;
    }
    return F;
}

double quantity_G(const JacobianStats& stats, const RegularMask& reg, const DiscreteManifold&, std::size_t i,
                  const SmallVec& T) {
    require_regular(reg, i);
    double G = 0.0;
    for (int a = 0; a < stats.k; ++a) {
        const SmallVec unit = rotated_gradient(stats, i, a) / std::sqrt(stats.eig[i](a));
        double prod = 1.0;
        for (int b = 0; b < stats.k; ++b)
            if (b != a) prod *= std::sqrt(std::max(0.0, stats.eig[i](b)));
        G += tensor_apply(rotated_hessian(stats, i, a), T, unit) * prod;
    }
    return G;
}

SmallVec normal_part(const JacobianStats& stats, const DiscreteManifold& M, std::size_t i, const SmallVec& grad_u) {
    SmallVec out = SmallVec::Zero(grad_u.size());
    for (int a = 0; a < stats.k; ++a) {
        const SmallVec ga = rotated_gradient(stats, i, a);
        out += inner(M, i, grad_u, ga) / stats.eig[i](a) * ga;
    }
    return out;
}

}  // namespace fiberlab
