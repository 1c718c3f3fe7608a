#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fiberlab/estimates.hpp"
#include "fiberlab/interpolation.hpp"

namespace fiberlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double at(const ScalarField& f, std::size_t i) { return f(static_cast<Eigen::Index>(i)); }

double smoothstep5(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

double weighted_mean(const DiscreteManifold& M, std::span<const std::size_t> region, auto&& value) {
    double num = 0.0, den = 0.0;
    for (std::size_t i : region) {
        num += M.weight(i) * value(i);
        den += M.weight(i);
    }
    if (!(den > 0.0)) throw PreconditionError("average over an empty region");
    return num / den;
}

double hess_norm(const DiscreteManifold& M, const TensorField& H, std::size_t i) {
    return std::sqrt(std::max(0.0, tensor_norm_sq(M, i, H.at(i))));
}

double grad_norm(const DiscreteManifold& M, const VectorField& X, std::size_t i) {
    return std::sqrt(std::max(0.0, norm_sq(M, i, X.at(i))));
}

void require_interior(const SplittingMap& phi, const GeodesicBall& ball, const char* what) {
    for (std::size_t i : ball.members)
        if (!phi.interior[i]) throw PreconditionError(std::string(what) + " is not inside the splitting-map interior");
}

}  // namespace

void EstimateReport::add(const std::string& key, double value, const std::string& provenance) {
    constants.push_back({key, value, provenance});
}

double EstimateReport::constant(const std::string& key) const {
    for (const auto& c : constants)
        if (c.name == key) return c.value;
    throw Error("report '" + name + "' has no constant '" + key + "'");
}

void EstimateReport::finish() {
    pass = lhs <= rhs;
    margin = lhs > 0.0 ? rhs / lhs : kInf;
}

FunctionData differentiate(const DiscreteManifold& M, const LaplaceOperator& L, const ScalarField& u) {
    return {u, gradient(M, u), hessian(M, u), L.apply(u)};
}

CutoffFunction build_cutoff(const DiscreteManifold& M, const LaplaceOperator& L, const GeodesicBall& ball_r,
                            const GeodesicBall& ball_2r, double epsilon_hat) {
    const double r = ball_r.radius;
    CutoffFunction c;
    c.r = r;
    c.inner_radius = r * (1.0 + 4.0 * epsilon_hat);
    c.outer_radius = 2.0 * r;
    if (!(epsilon_hat >= 0.0) || !(c.inner_radius < c.outer_radius))
        throw PreconditionError("cutoff needs r(1 + 4 epsilon_hat) < 2r");
    if (std::abs(ball_2r.radius - 2.0 * r) > 1e-12 * r || ball_2r.center != ball_r.center)
        throw PreconditionError("cutoff needs concentric balls of radii r and 2r");

    const double width = c.outer_radius - c.inner_radius;
    c.phi = ScalarField::Zero(static_cast<Eigen::Index>(M.size()));
    for (std::size_t i : ball_2r.members)
        c.phi(static_cast<Eigen::Index>(i)) = smoothstep5((c.outer_radius - ball_2r.distance[i]) / width);

    const VectorField g = gradient(M, c.phi);
    const ScalarField lap = L.apply(c.phi);
    c.profile.resize(c.phi.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < M.size(); ++i) {
        const double q = r * grad_norm(M, g, i) + r * r * std::abs(at(lap, i));
        c.profile(static_cast<Eigen::Index>(i)) = q;
        sup = std::max(sup, q);
    }
    c.C_ctf_measured = 0.5 * sup;
    c.C_ctf = std::max(c.C_ctf_measured, 1.0);
    return c;
}

std::vector<EstimateReport> hessian_l2_bound(const DiscreteManifold& M, const FunctionData& f,
                                             const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                             const CutoffFunction& cutoff, double lambda_ric) {
    const double r = ball_r.radius;
    const int m = M.dim();
    double K = 0.0;
    for (std::size_t i : ball_2r.members) K = std::max(K, std::abs(at(f.u, i)) + r * grad_norm(M, f.grad, i));
    const double lap2 = l2_average(M, f.laplacian, ball_2r.members);
    const double C = cutoff.C_ctf;

    EstimateReport inter;
    inter.name = "hessian_cutoff_weitzenbock";
    inter.lhs = weighted_mean(M, ball_2r.members, [&](std::size_t i) {
        const double h = hess_norm(M, f.hess, i);
        return at(cutoff.phi, i) * h * h;
    });
    inter.rhs = (8.0 * C / (r * r) + lambda_ric * (m - 1)) * K * K / (r * r) + 1.5 * lap2 * lap2;
    inter.add("K", K, "measured");
    inter.add("C_ctf", C, "measured");
    inter.add("C_ctf_raw", cutoff.C_ctf_measured, "measured");
    inter.add("lambda_ric", lambda_ric, "input");
    inter.add("laplacian_l2_avg_2r", lap2, "measured");
    inter.add("r", r, "input");
    inter.add("m", m, "input");
    inter.finish();

    EstimateReport fin;
    fin.name = "hessian_l2_bound";
    fin.lhs = l2_average(M, pointwise_norm(M, f.hess), ball_r.members);
    fin.rhs = 4.0 * m * C * K / (r * r) + 2.0 * lap2;
    fin.constants = inter.constants;
    fin.add("hessian_l1_avg_r", l1_average(M, pointwise_norm(M, f.hess), ball_r.members), "measured");
    fin.notes.push_back("lhs is the L2 average of |Hess u| over B(p,r), which dominates its L1 average");
    fin.finish();
    return {inter, fin};
}

double splitting_c0(const DiscreteManifold& M, const SplittingMap& phi, const JacobianStats& stats,
                    const GeodesicBall& ball_4r, double r) {
    require_interior(phi, ball_4r, "B(p,4r)");
    double sup_grad = 0.0;
    double hess_energy = 0.0;
    for (int b = 0; b < phi.k(); ++b) {
        const auto& G = stats.grad[static_cast<std::size_t>(b)];
        const auto& H = stats.hess[static_cast<std::size_t>(b)];
        for (std::size_t i : ball_4r.members) sup_grad = std::max(sup_grad, grad_norm(M, G, i));
        hess_energy += weighted_mean(M, ball_4r.members, [&](std::size_t i) {
            const double h = hess_norm(M, H, i);
            return h * h;
        });
    }
    return std::max({0.0, sup_grad - 1.0, std::sqrt(r * r * hess_energy)});
}

double sobolev_k(const DiscreteManifold& M, const FunctionData& f, const GeodesicBall& ball_2r, double r) {
    double sup = 0.0;
    for (std::size_t i : ball_2r.members) {
        const double g = grad_norm(M, f.grad, i);
        sup = std::max(sup, at(f.u, i) * at(f.u, i) + r * r * g * g);
    }
    const double hess2 = weighted_mean(M, ball_2r.members, [&](std::size_t i) {
        const double h = hess_norm(M, f.hess, i);
        return h * h;
    });
    return std::sqrt(sup + std::pow(r, 4) * hess2);
}

double interior_c1(int k, double C0) { return 8.0 * k * k * std::pow(1.0 + C0, k - 1); }

double theorem_c2(int m, int k, double C_ctf, double volume_2r, double volume_r) {
    return 48.0 * m * k * k * C_ctf * std::pow(2.0, k) * volume_2r / volume_r;
}

EstimateReport interior_l2_report(const DiscreteManifold& M, const FunctionData& f, const SplittingMap& phi,
                                  const JacobianStats& stats, const RegularMask& reg, const TangentialField& field,
                                  const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                  const GeodesicBall& ball_4r, double epsilon_hat) {
    const double r = ball_r.radius;
    const int k = phi.k();
    const double C0 = splitting_c0(M, phi, stats, ball_4r, r);
    if (C0 >= 1.0) throw PreconditionError("interior L2 estimate needs C0 < 1, measured " + std::to_string(C0));
    const double K = sobolev_k(M, f, ball_2r, r);

    EstimateReport rep;
    rep.name = "interior_l2";
    double sum = 0.0;
    for (std::size_t i : ball_r.members) {
        if (!field.defined[i] || !reg.regular[i]) continue;
        sum += norm_sq(M, i, field.tangential.at(i)) * at(stats.det_sqrt, i) * M.weight(i);
    }
    rep.lhs = r * r * sum;
    const double C1 = interior_c1(k, C0);
    rep.rhs = C1 * ball_r.volume * K * K * (std::sqrt(epsilon_hat) + C0);
    rep.add("C0", C0, "measured");
    rep.add("C1", C1, "formula");
    rep.add("K", K, "measured");
    rep.add("epsilon_hat", epsilon_hat, "measured");
    rep.add("volume_r", ball_r.volume, "measured");
    rep.add("r", r, "input");
    rep.add("k", k, "input");
    rep.notes.push_back("lhs sums over every regular node of B(p,r), a superset of the preimage of regular values");
    rep.finish();
    return rep;
}

TangentialNorms tangential_norms(const DiscreteManifold& M, const JacobianStats& stats, const RegularMask& reg,
                                 const TangentialField& field, const GeodesicBall& ball) {
    TangentialNorms out;
    double plain = 0.0, weighted = 0.0, vol = 0.0;
    for (std::size_t i : ball.members) {
        if (!field.defined[i] || !reg.regular[i]) continue;
        const double t2 = norm_sq(M, i, field.tangential.at(i));
        plain += M.weight(i) * t2;
        weighted += M.weight(i) * t2 * at(stats.det_sqrt, i);
        vol += M.weight(i);
    }
    if (!(vol > 0.0)) throw PreconditionError("no regular nodes in the ball");
    out.unweighted = std::sqrt(plain / vol);
    out.weighted = std::sqrt(weighted / vol);
    out.singular_fraction = 1.0 - vol / ball.volume;
    return out;
}

EstimateReport tangential_l2_report(const DiscreteManifold& M, const FunctionData& f, const JacobianStats& stats,
                                    const RegularMask& reg, const TangentialField& field,
                                    const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                    const CutoffFunction& cutoff, double epsilon_hat, double psi) {
    const double r = ball_r.radius;
    const int k = stats.k;
    const double K = c1_bound(M, f.u, ball_2r, r);
    const double lap2 = l2_average(M, f.laplacian, ball_2r.members);
    const double C2 = theorem_c2(M.dim(), k, cutoff.C_ctf, ball_2r.volume, ball_r.volume);
    const auto norms = tangential_norms(M, stats, reg, field, ball_r);

    EstimateReport rep;
    rep.name = "tangential_l2";
    rep.lhs = r * r * norms.weighted * norms.weighted;
    rep.rhs = C2 * (std::sqrt(epsilon_hat) + psi) * (K * K + lap2 * K * r * r);
    rep.add("C2", C2, "formula");
    rep.add("C_ctf", cutoff.C_ctf, "measured");
    rep.add("K", K, "measured");
    rep.add("laplacian_l2_avg_2r", lap2, "measured");
    rep.add("epsilon_hat", epsilon_hat, "measured");
    rep.add("psi", psi, "measured");
    rep.add("volume_ratio", ball_2r.volume / ball_r.volume, "measured");
    rep.add("singular_fraction", norms.singular_fraction, "measured");
    rep.add("r", r, "input");
    rep.notes.push_back("psi is the measured splitting certificate, standing in for the unquantified smallness term");
    rep.finish();
    return rep;
}

EstimateReport main_theorem_report(const DiscreteManifold& M, const EigenPair& eig, const FunctionData& f,
                                   const JacobianStats& stats, const RegularMask& reg, const TangentialField& field,
                                   const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                   const CutoffFunction& cutoff, double epsilon_hat, double psi,
                                   double residual_tolerance) {
    if (!(eig.residual <= residual_tolerance * (1.0 + std::abs(eig.theta))))
        throw PreconditionError("eigenpair residual " + std::to_string(eig.residual) + " is above tolerance");
    const double r = ball_r.radius;
    const int k = stats.k;
    const double u_sup = sup_abs(f.u, ball_2r.members);
    double grad_sup = 0.0;
    for (std::size_t i : ball_r.members) grad_sup = std::max(grad_sup, grad_norm(M, f.grad, i));
    const double C_cy = u_sup > 0.0 ? r * grad_sup / u_sup : 0.0;
    const double C2 = theorem_c2(M.dim(), k, cutoff.C_ctf, ball_2r.volume, ball_r.volume);
    const auto norms = tangential_norms(M, stats, reg, field, ball_r);

    EstimateReport rep;
    rep.name = "main_theorem";
    rep.lhs = r * norms.unweighted;
    rep.rhs = C2 * (1.0 + C_cy) * u_sup * (std::sqrt(epsilon_hat) + psi);
    rep.add("theta", eig.theta, "measured");
    rep.add("eigen_residual", eig.residual, "measured");
    rep.add("C2", C2, "formula");
    rep.add("C_CY", C_cy, "measured");
    rep.add("C_ctf", cutoff.C_ctf, "measured");
    rep.add("u_sup_2r", u_sup, "measured");
    rep.add("epsilon_hat", epsilon_hat, "measured");
    rep.add("psi", psi, "measured");
    rep.add("lhs_weighted", r * norms.weighted, "measured");
    rep.add("singular_fraction", norms.singular_fraction, "measured");
    rep.add("r", r, "input");
    rep.add("m", M.dim(), "input");
    rep.add("k", k, "input");
    rep.notes.push_back("psi is the measured splitting certificate, standing in for the unquantified smallness term");
    rep.finish();
    return rep;
}

EstimateReport change_integral_check(const DiscreteManifold& M, const FunctionData& f, const SplittingMap& phi,
                                     const JacobianStats& stats, const RegularMask& reg,
                                     const TangentialField& field, const GeodesicBall& ball_r,
                                     const GeodesicBall& ball_2r, const GeodesicBall& ball_4r, double epsilon_hat,
                                     double time, double dt, std::size_t stride) {
    const double r = ball_r.radius;
    const int k = phi.k();
    const double C0 = splitting_c0(M, phi, stats, ball_4r, r);
    const double K = sobolev_k(M, f, ball_2r, r);
    const GridInterpolator interp(M);

    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s < ball_r.members.size(); s += std::max<std::size_t>(1, stride)) {
        const std::size_t i = ball_r.members[s];
        if (reg.regular[i] && field.defined[i]) starts.push_back(i);
    }
    std::vector<double> before(starts.size()), after(starts.size());
    FlowOptions opt;
    opt.dt = dt;
    opt.duration = time;
    opt.sample_every = std::numeric_limits<int>::max();
    std::string failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(starts.size()); ++s) {
        const std::size_t i = starts[static_cast<std::size_t>(s)];
        try {
            const auto traj = integrate_flow(M, phi, reg, f.u, field, i, opt);
            const SmallVec& x = traj.x.back();
            const std::span<const double> xs(x.data(), x.size());
            before[static_cast<std::size_t>(s)] = M.weight(i) * at(f.u, i) * at(stats.det_sqrt, i);
            after[static_cast<std::size_t>(s)] = M.weight(i) * traj.u.back() * interp.value(stats.det_sqrt, xs);
        } catch (const Error& e) {
#pragma omp critical(change_integral_failure)
            if (failure.empty()) failure = e.what();
        }
    }
    if (!failure.empty()) throw Error("change integral flow failed: " + failure);
    double b = 0.0, a = 0.0, vol = 0.0;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        b += before[s];
        a += after[s];
        vol += M.weight(starts[s]);
    }
    EstimateReport rep;
    rep.name = "change_integral";
    rep.lhs = std::abs(a - b);
    rep.rhs = 4.0 * k * std::pow(1.0 + C0, k) * vol * K * epsilon_hat;
    rep.add("C0", C0, "measured");
    rep.add("K", K, "measured");
    rep.add("epsilon_hat", epsilon_hat, "measured");
    rep.add("flow_time", time, "input");
    rep.add("sampled_volume", vol, "measured");
    rep.add("samples", static_cast<double>(starts.size()), "measured");
    rep.finish();
    return rep;
}

double SweepRow::ratio() const {
    const double d = u_sup * (std::sqrt(epsilon_hat) + psi);
    return d > 0.0 ? lhs / d : kInf;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("log-log fit needs matching samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw PreconditionError("log-log fit needs positive samples");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) throw PreconditionError("log-log fit needs distinct abscissae");
    return (n * sxy - sx * sy) / den;
}

SweepSummary summarize_sweep(std::vector<SweepRow> rows, double max_spread, double degenerate_lhs) {
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.epsilon != b.epsilon ? a.epsilon < b.epsilon : a.mode < b.mode;
    });
    std::vector<double> eps;
    for (const auto& r : rows)
        if (eps.empty() || eps.back() != r.epsilon) eps.push_back(r.epsilon);
    if (eps.size() < 3) throw PreconditionError("a sweep needs at least three epsilon values");

    SweepSummary out;
    out.all_pass = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.pass; });

    const auto degenerate = [&](const SweepRow& r) { return !(r.lhs > degenerate_lhs * std::max(r.u_sup, 1e-300)); };

    // Exponent: per ε the worst (largest) non-degenerate lhs against that ε's ε̂.
    std::vector<double> xs, ys;
    for (double e : eps) {
        double best = 0.0, eh = 0.0;
        for (const auto& r : rows)
            if (r.epsilon == e && !degenerate(r) && r.lhs > best) {
                best = r.lhs;
                eh = r.epsilon_hat;
            }
        if (best > 0.0) {
            xs.push_back(eh);
            ys.push_back(best);
        }
    }
    if (xs.size() >= 3)
        out.exponent = fit_loglog_slope(xs, ys);
    else
        out.notes.push_back("exponent fit skipped: fewer than three epsilon values with lhs above round-off");

    std::map<int, std::vector<const SweepRow*>> by_mode;
    for (const auto& r : rows) by_mode[r.mode].push_back(&r);
    double spread = 1.0;
    int compared = 0;
    for (const auto& [mode, group] : by_mode) {
        if (group.size() < 2) continue;
        ++compared;
        if (std::any_of(group.begin(), group.end(), [&](const SweepRow* r) { return degenerate(*r); })) {
            out.spread_degenerate = true;
            continue;
        }
        double lo = kInf, hi = 0.0;
        for (const auto* r : group) {
            lo = std::min(lo, r->ratio());
            hi = std::max(hi, r->ratio());
        }
        spread = std::max(spread, hi / lo);
    }
    out.ratio_spread = out.spread_degenerate ? std::numeric_limits<double>::quiet_NaN() : spread;
    if (out.spread_degenerate)
        out.notes.push_back("ratio spread undefined: lhs is at round-off level for some mode on some epsilon");
    out.spread_pass = compared > 0 && !out.spread_degenerate && spread <= max_spread;
    out.rows = std::move(rows);
    return out;
}

}  // namespace fiberlab
