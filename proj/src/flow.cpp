#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/LU>

#include "fiberlab/flow.hpp"
#include "fiberlab/format.hpp"
#include "fiberlab/interpolation.hpp"

namespace fiberlab {

TangentialField tangential_projection(const DiscreteManifold& M, const VectorField& grad_u,
                                      const JacobianStats& stats, const RegularMask& reg) {
    const std::size_t n = M.size();
    const Eigen::Index m = grad_u.c.cols();
    TangentialField out;
    out.grad = grad_u;
    out.tangential.c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
    out.normal.c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
    out.defined.assign(n, 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
        const auto i = static_cast<std::size_t>(s);
        if (!reg.regular[i] || !stats.valid[i]) continue;
        const SmallVec g = grad_u.at(i);
        const SmallVec nrm = normal_part(stats, M, i, g);
        out.normal.set(i, nrm);
        out.tangential.set(i, g - nrm);
        out.defined[i] = 1;
    }
    return out;
}

TangentialField tangential_projection(const DiscreteManifold& M, const ScalarField& u,
                                      const JacobianStats& stats, const RegularMask& reg) {
    return tangential_projection(M, gradient(M, u), stats, reg);
}

double stability_measure(const DiscreteManifold& M, const TangentialField& field) {
    if (!M.is_grid()) throw PreconditionError("stability measure needs a grid chart");
    const auto& G = M.grid();
    const int m = M.dim();
    double sup = 0.0;
#pragma omp parallel for schedule(static) reduction(max : sup)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(M.size()); ++s) {
        const auto i = static_cast<std::size_t>(s);
        if (!field.defined[i]) continue;
        SmallMat A(m, m);
        bool ok = true;
        for (int a = 0; a < m && ok; ++a) {
            const std::size_t ip = G.shift(i, a, 1), im = G.shift(i, a, -1);
            if (!field.defined[ip] || !field.defined[im]) {
                ok = false;
                break;
            }
            A.col(a) = (field.tangential.at(ip) - field.tangential.at(im)) / (2.0 * G.spacing(a));
        }
        if (!ok) continue;
        const SmallMat& g = M.metric(i);
        const double nsq = (g * A * M.inverse_metric(i) * A.transpose()).trace();
        sup = std::max(sup, std::sqrt(std::max(0.0, nsq)));
    }
    return sup;
}

namespace {

struct Projector {
    const DiscreteManifold& M;
    const SplittingMap& phi;
    const GridInterpolator& interp;

    SmallVec value(const SmallVec& x, Eigen::MatrixXd* D) const {
        const int k = phi.k();
        SmallVec v(k);
        if (D) D->resize(k, M.dim());
        for (int a = 0; a < k; ++a) {
            SmallVec p;
            v(a) = interp.value_and_partials(phi.components[static_cast<std::size_t>(a)],
                                             std::span<const double>(x.data(), x.size()), p);
            if (D) D->row(a) = p.transpose();
        }
        return v;
    }
};

}  // namespace

FlowTrajectory integrate_flow(const DiscreteManifold& M, const SplittingMap& phi, const RegularMask& reg,
                              const ScalarField& u, const TangentialField& field, std::size_t x0,
                              const FlowOptions& opt) {
    if (!M.is_grid()) throw PreconditionError("flow integration needs a grid chart");
    if (!(opt.dt > 0.0) || !(opt.duration >= 0.0)) throw PreconditionError("flow needs dt > 0 and duration >= 0");
    if (!reg.regular[x0] || !field.defined[x0]) throw PreconditionError("flow start node is not regular");
    const double stab = stability_measure(M, field);
    if (opt.dt * stab > opt.stability_limit)
        throw PreconditionError("flow step too large: dt * sup|grad X| = " + fmt17(opt.dt * stab) + " exceeds " +
                                fmt17(opt.stability_limit));

    const GridInterpolator interp(M);
    const Projector proj{M, phi, interp};
    const SmallVec level = phi.value(x0);
    const auto span_of = [](const SmallVec& x) { return std::span<const double>(x.data(), x.size()); };

    FlowTrajectory traj;
    traj.start = x0;
    SmallVec x = M.position(x0);

    const auto record = [&](double t) {
        const SmallVec X = interp.vector(field.tangential, span_of(x));
        traj.t.push_back(t);
        traj.x.push_back(x);
        traj.u.push_back(interp.value(u, span_of(x)));
        traj.speed_sq.push_back(X.dot(M.metric_at(span_of(x)) * X));
        traj.drift.push_back((proj.value(x, nullptr) - level).norm());
    };
    const auto velocity = [&](const SmallVec& y) {
        if (!interp.inside(field.defined, span_of(y)))
            throw FlowError("flow left the regular region", traj);
        return SmallVec(interp.vector(field.tangential, span_of(y)));
    };

    record(0.0);
    const auto steps = static_cast<long>(std::llround(opt.duration / opt.dt));
    const double h = steps > 0 ? opt.duration / static_cast<double>(steps) : 0.0;
    const int every = std::max(1, opt.sample_every);
    for (long s = 1; s <= steps; ++s) {
        const SmallVec k1 = velocity(x);
        const SmallVec k2 = velocity(x + 0.5 * h * k1);
        const SmallVec k3 = velocity(x + 0.5 * h * k2);
        const SmallVec k4 = velocity(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        double res = std::numeric_limits<double>::infinity();
        for (int it = 0; it <= opt.newton_iterations; ++it) {
            if (!interp.inside(field.defined, span_of(x))) throw FlowError("flow left the regular region", traj);
            Eigen::MatrixXd D;
            const Eigen::VectorXd r = proj.value(x, &D) - level;
            res = r.cwiseAbs().maxCoeff();
            if (res <= opt.newton_tolerance || it == opt.newton_iterations) break;
            const Eigen::MatrixXd ginv = M.metric_at(span_of(x)).inverse();
            const Eigen::MatrixXd A = D * ginv * D.transpose();
            x -= SmallVec(ginv * D.transpose() * A.partialPivLu().solve(r));
        }
        if (res > opt.newton_tolerance)
            throw FlowError("reprojection failed at t = " + fmt17(static_cast<double>(s) * h) +
                                ", residual " + fmt17(res),
                            traj);
        if (s % every == 0 || s == steps) record(static_cast<double>(s) * h);
    }
    return traj;
}

double FiberBoundReport::decay_rate() const {
    return 2.0 * (1.0 + std::sqrt(Lambda * k) * C0 / lambda) * K / (r * r);
}

FiberBoundReport fiber_apriori_check(const DiscreteManifold& M, const FiberTrace& fiber, const SplittingMap& phi,
                                     const JacobianStats& stats, const RegularMask& reg,
                                     const TangentialField& field, const TensorField& hess_u,
                                     double epsilon_hat, double r) {
    if (!M.is_grid()) throw PreconditionError("a priori check needs a grid chart");
    if (!fiber.regular || fiber.points.empty()) throw PreconditionError("a priori check needs a regular fiber");
    if (!(r > 0.0) || !(epsilon_hat >= 0.0)) throw PreconditionError("a priori check needs r > 0, epsilon_hat >= 0");

    const GridInterpolator interp(M);
    std::vector<std::size_t> nodes;
    for (const auto& p : fiber.points) {
        const auto c = interp.corners(std::span<const double>(p.data(), p.size()));
        nodes.insert(nodes.end(), c.begin(), c.end());
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    FiberBoundReport rep;
    rep.level = fiber.level;
    rep.k = phi.k();
    rep.r = r;
    rep.epsilon_hat = epsilon_hat;
    rep.lambda = std::numeric_limits<double>::infinity();
    rep.fiber_nodes = nodes.size();
    for (std::size_t i : nodes) {
        if (!reg.regular[i] || !stats.valid[i] || !field.defined[i])
            throw PreconditionError("fiber touches a singular or undefined node");
        rep.lambda = std::min(rep.lambda, stats.lambda(static_cast<Eigen::Index>(i)));
        rep.Lambda = std::max(rep.Lambda, stats.Lambda(static_cast<Eigen::Index>(i)));
        for (int b = 0; b < rep.k; ++b)
            rep.C0 = std::max(rep.C0, r * r * tensor_norm_sq(M, i, stats.hess[static_cast<std::size_t>(b)].at(i)));
        rep.delta0 = std::max(rep.delta0, std::sqrt(norm_sq(M, i, field.tangential.at(i))));
    }

    const double horizon = 2.0 * epsilon_hat * r;
    const auto dist = graph_distance(M, nodes, {}, horizon);
    for (std::size_t i = 0; i < M.size(); ++i) {
        if (!(dist[i] <= horizon)) continue;
        if (!phi.interior[i]) throw PreconditionError("fiber neighbourhood leaves the splitting-map domain");
        ++rep.neighbourhood_nodes;
        const double g = std::sqrt(norm_sq(M, i, field.grad.at(i)));
        const double hs = std::sqrt(std::max(0.0, tensor_norm_sq(M, i, hess_u.at(i))));
        rep.K = std::max(rep.K, r * g + r * r * hs);
    }

    const double factor = 1.0 + std::sqrt(rep.Lambda * rep.k) * rep.C0 / rep.lambda;
    rep.lhs = r * rep.delta0;
    rep.rhs = 2.0 * std::sqrt(factor) * rep.K * std::sqrt(epsilon_hat);
    rep.pass = rep.lhs <= rep.rhs;
    rep.margin = rep.lhs > 0.0 ? rep.rhs / rep.lhs : std::numeric_limits<double>::infinity();
    rep.counterexample = rep.delta0 * rep.delta0 > 4.0 * factor * rep.K * rep.K * epsilon_hat / (r * r);
    return rep;
}

ExponentialCheck verify_exponential_bound(const FlowTrajectory& traj, double rate, double tolerance) {
    ExponentialCheck out;
    out.rate = rate;
    out.margin = std::numeric_limits<double>::infinity();
    if (!traj.speed_sq.empty() && traj.speed_sq.front() > 0.0)
        for (std::size_t s = 0; s < traj.t.size(); ++s)
            out.margin = std::min(out.margin,
                                  traj.speed_sq[s] / (std::exp(-rate * traj.t[s]) * traj.speed_sq.front()));
    out.pass = out.margin >= 1.0 - tolerance;
    return out;
}

ExponentialCheck verify_exponential_bound(const FlowTrajectory& traj, const FiberBoundReport& report,
                                          double tolerance) {
    return verify_exponential_bound(traj, report.decay_rate(), tolerance);
}

void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj) {
    const Eigen::Index m = traj.x.empty() ? 0 : traj.x.front().size();
    out << "t";
    for (Eigen::Index a = 0; a < m; ++a) out << ",x" << a;
    out << ",u,speed_sq,drift\n";
    for (std::size_t s = 0; s < traj.t.size(); ++s) {
        out << fmt17(traj.t[s]);
        for (Eigen::Index a = 0; a < m; ++a) out << ',' << fmt17(traj.x[s](a));
        out << ',' << fmt17(traj.u[s]) << ',' << fmt17(traj.speed_sq[s]) << ',' << fmt17(traj.drift[s]) << '\n';
    }
}

}  // namespace fiberlab
