#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "fiberlab/spectral.hpp"

namespace fiberlab {

namespace {

struct Pencil {
    Eigen::SparseMatrix<double> S;
    Eigen::VectorXd w;
};

// Shift-invert subspace iteration with Rayleigh–Ritz on the pencil (S, diag w).
// Returns W-orthonormal Ritz vectors.
std::vector<EigenPair> solve_pencil(const Pencil& P, int count, const EigenOptions& opt) {
    const Eigen::Index n = P.w.size();
    if (count < 1) throw PreconditionError("eigenpair count must be positive");
    if (count > n) throw PreconditionError("more eigenpairs requested than nodes");
    const Eigen::Index p = std::min<Eigen::Index>(n, count + std::max(opt.min_extra, count));

    Eigen::SparseMatrix<double> A = P.S;
    for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) -= opt.shift * P.w(i);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw Error("sparse factorization of the shifted operator failed");

    std::mt19937_64 rng(opt.seed);
    Eigen::MatrixXd Y(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) Y(i, j) = std::generate_canonical<double, 53>(rng) - 0.5;

    const Eigen::VectorXd sw = P.w.cwiseSqrt();
    Eigen::VectorXd theta;
    std::vector<double> res(static_cast<std::size_t>(count));
    double worst = 0.0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        Eigen::MatrixXd Z = ldlt.solve(P.w.asDiagonal() * Y);
        Eigen::MatrixXd Q = sw.asDiagonal() * Z;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
        Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
        Z = sw.cwiseInverse().asDiagonal() * Q;

        const Eigen::MatrixXd SZ = P.S * Z;
        Eigen::MatrixXd H = Z.transpose() * SZ;
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        theta = es.eigenvalues();
        Y = Z * es.eigenvectors();
        const Eigen::MatrixXd SY = SZ * es.eigenvectors();

        worst = 0.0;
        bool ok = true;
        for (int j = 0; j < count; ++j) {
            const Eigen::VectorXd r = SY.col(j).cwiseQuotient(P.w) - theta(j) * Y.col(j);
            res[j] = std::sqrt(r.cwiseAbs2().dot(P.w));
            const double rel = res[j] / (1.0 + std::abs(theta(j)));
            worst = std::max(worst, rel);
            if (rel > opt.tolerance) ok = false;
        }
        if (ok) {
            std::vector<EigenPair> out;
            for (int j = 0; j < count; ++j) {
                Eigen::VectorXd u = Y.col(j);
                Eigen::Index imax = 0;
                u.cwiseAbs().maxCoeff(&imax);
                if (u(imax) < 0) u = -u;
                out.push_back({std::max(0.0, theta(j)), std::move(u), res[j]});
            }
            return out;
        }
    }
    std::ostringstream msg;
    msg << "eigensolver did not converge after " << opt.max_iterations
        << " iterations (worst relative residual " << worst << ")";
    throw Error(msg.str());
}

// W-orthonormal to L̄²-normalized.  The W-norm residual of the unscaled vector
// already equals the L̄² residual of the rescaled one.
void normalize_average(std::vector<EigenPair>& pairs, double volume) {
    const double s = std::sqrt(volume);
    for (auto& e : pairs) e.u *= s;
}

}  // namespace

std::vector<EigenPair> eigenpairs(const DiscreteManifold& M, int count, std::optional<double> theta_max,
                                  const EigenOptions& opt) {
    const LaplaceOperator L = laplacian_matrix(M);
    const Pencil P{L.stiffness, L.mass};
    const int n = static_cast<int>(M.size());
    if (!theta_max) {
        auto out = solve_pencil(P, count, opt);
        normalize_average(out, M.total_volume());
        return out;
    }
    int c = std::max(count, 8);
    for (;;) {
        c = std::min(c, n);
        auto out = solve_pencil(P, c, opt);
        if (out.back().theta > *theta_max || c == n) {
            std::erase_if(out, [&](const EigenPair& e) { return e.theta > *theta_max; });
            normalize_average(out, M.total_volume());
            return out;
        }
        c *= 2;
    }
}

std::vector<EigenPair> dirichlet_eigenpairs(const DiscreteManifold& M, const GeodesicBall& ball, int count,
                                            const EigenOptions& opt) {
    NodeMask boundary(M.size(), 0);
    for (std::size_t i : ball.boundary) boundary[i] = 1;
    std::vector<Eigen::Index> local(M.size(), -1);
    std::vector<std::size_t> inner;
    for (std::size_t i : ball.members)
        if (!boundary[i]) {
            local[i] = static_cast<Eigen::Index>(inner.size());
            inner.push_back(i);
        }
    if (inner.empty()) throw PreconditionError("ball has no interior nodes");
    const LaplaceOperator L = laplacian_matrix(M);
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t i : inner)
        for (Eigen::SparseMatrix<double>::InnerIterator it(L.stiffness, static_cast<Eigen::Index>(i)); it; ++it)
            if (local[it.row()] >= 0) t.emplace_back(local[it.row()], local[i], it.value());
    Pencil P;
    P.S.resize(static_cast<Eigen::Index>(inner.size()), static_cast<Eigen::Index>(inner.size()));
    P.S.setFromTriplets(t.begin(), t.end());
    P.w.resize(static_cast<Eigen::Index>(inner.size()));
    for (std::size_t j = 0; j < inner.size(); ++j) P.w(static_cast<Eigen::Index>(j)) = M.weight(inner[j]);

    auto sub = solve_pencil(P, count, opt);
    std::vector<EigenPair> out;
    for (auto& e : sub) {
        ScalarField u = ScalarField::Zero(static_cast<Eigen::Index>(M.size()));
        for (std::size_t j = 0; j < inner.size(); ++j)
            u(static_cast<Eigen::Index>(inner[j])) = e.u(static_cast<Eigen::Index>(j));
        out.push_back({e.theta, std::move(u), e.residual});
    }
    normalize_average(out, ball.volume);
    return out;
}

std::vector<std::vector<int>> eigen_clusters(const std::vector<EigenPair>& pairs, double rel) {
    std::vector<std::vector<int>> out;
    for (int i = 0; i < static_cast<int>(pairs.size()); ++i) {
        if (!out.empty()) {
            const double prev = pairs[out.back().back()].theta;
            const double cur = pairs[i].theta;
            if (std::abs(cur - prev) < rel * std::max(cur, prev) || (cur == 0.0 && prev == 0.0)) {
                out.back().push_back(i);
                continue;
            }
        }
        out.push_back({i});
    }
    return out;
}

double eigen_residual(const DiscreteManifold& M, const LaplaceOperator& L, const ScalarField& u, double theta) {
    const ScalarField r = L.apply(u) - theta * u;
    return l2_average(M, r, all_nodes(M));
}

double cheng_yau_ratio(const DiscreteManifold& M, const ScalarField& u, const GeodesicBall& ball) {
    const GeodesicBall outer = geodesic_ball(M, ball.center, 2.0 * ball.radius);
    const double su = sup_abs(u, outer.members);
    if (!(su > 0.0)) throw PreconditionError("Cheng-Yau ratio undefined for u = 0 on the doubled ball");
    const ScalarField g = pointwise_norm(M, gradient(M, u));
    return ball.radius * sup_abs(g, ball.members) / su;
}

double c1_bound(const DiscreteManifold& M, const ScalarField& u, const GeodesicBall& ball, double r) {
    const ScalarField g = pointwise_norm(M, gradient(M, u));
    double k = 0.0;
    for (std::size_t i : ball.members)
        k = std::max(k, std::abs(u(static_cast<Eigen::Index>(i))) + r * g(static_cast<Eigen::Index>(i)));
    return k;
}

}  // namespace fiberlab
