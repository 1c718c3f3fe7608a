#include "fiberlab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <thread>

#include "fiberlab/hashing.hpp"
#include "fiberlab/report_io.hpp"

namespace fiberlab {

namespace {

// Modes below this eigenvalue are constants and carry no estimate content.
constexpr double kConstantMode = 1e-6;

double median_Lambda(const JacobianStats& stats) {
    std::vector<double> v;
    for (std::size_t i = 0; i < stats.valid.size(); ++i)
        if (stats.valid[i]) v.push_back(stats.Lambda(static_cast<Eigen::Index>(i)));
    if (v.empty()) throw Error("splitting map has no interior nodes");
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::size_t center_node(const DiscreteManifold& M, const std::vector<double>& center) {
    std::vector<double> x(center);
    x.resize(static_cast<std::size_t>(M.is_grid() ? M.dim() : 3), 0.0);
    return M.nearest_node(x);
}

ScalarField flow_function(const PointSetup& s, const std::vector<EigenPair>& pairs) {
    const auto& c = s.config;
    if (c.flow_function == FlowFunction::Eigenmode) {
        if (static_cast<std::size_t>(c.flow_mode) >= pairs.size())
            throw PreconditionError("flow.mode " + std::to_string(c.flow_mode) + " exceeds the " +
                                    std::to_string(pairs.size()) + " computed eigenpairs");
        return pairs[static_cast<std::size_t>(c.flow_mode)].u;
    }
    const int axis = s.M.dim() - 1;
    const double q = 2.0 * std::numbers::pi * c.flow_frequency;
    return sample(s.M, [&](const SmallVec& x) { return std::sin(q * x(axis)); });
}

}  // namespace

bool ModeResult::pass() const {
    for (const auto& r : reports)
        if (!r.pass) return false;
    for (const auto& f : fibers)
        if (!f.pass) return false;
    return true;
}

bool PointResult::pass() const {
    for (const auto& m : modes)
        if (!m.pass()) return false;
    return true;
}

bool FlowResult::pass() const { return bound.pass && exponential.pass && monotone; }

bool SweepResult::pass() const {
    if (!summary.all_pass || !summary.spread_pass) return false;
    for (const auto& p : points)
        if (!p.pass()) return false;
    return true;
}

PointSetup prepare_point(const ExperimentConfig& config) {
    config.validate();
    PointSetup s{config, build_family(config.family), {}, 0, config.radius, {}, {}, {}, {}, {}, {}, {}, {}, {}, 0.0};
    s.L = laplacian_matrix(s.M);
    s.center = center_node(s.M, config.center);
    s.ball_r = geodesic_ball(s.M, s.center, s.r);
    s.ball_2r = geodesic_ball(s.M, s.center, 2 * s.r);
    s.ball_4r = geodesic_ball(s.M, s.center, 4 * s.r);
    s.phi = coordinate_map(s.M, s.center, 5 * s.r);
    s.stats = jacobian_stats(s.M, s.phi);
    s.reg = classify_regular(s.M, s.stats, config.lambda_min * median_Lambda(s.stats));
    FiberOptions opt;
    opt.level_tolerance = config.level_tolerance;
    s.fibers = epsilon_proxy(s.M, s.ball_r, s.phi, s.reg, config.fiber_samples, opt);
    s.certificate = certify(s.M, s.phi, s.stats, s.ball_2r, s.r, s.fibers.epsilon_hat);
    s.cutoff = build_cutoff(s.M, s.L, s.ball_r, s.ball_2r, s.fibers.epsilon_hat);
    s.lambda_ric = config.lambda_ric ? *config.lambda_ric : ricci_lower_parameter(s.M);
    return s;
}

std::vector<EigenPair> point_spectrum(const DiscreteManifold& M, const ExperimentConfig& config,
                                      const std::string& cache_dir) {
    EigenOptions opt;
    opt.seed = config.seed;
    const std::string key = eigen_cache_key(M, config.eigen_count, config.theta_max) + ";seed=" +
                            std::to_string(config.seed);
    std::string path;
    if (!cache_dir.empty()) {
        std::filesystem::create_directories(cache_dir);
        path = (std::filesystem::path(cache_dir) / (sha256_hex(key).substr(0, 24) + ".eig")).string();
        if (auto hit = load_eigen_cache(path, M, key)) return *hit;
    }
    auto pairs = eigenpairs(M, config.eigen_count, config.theta_max, opt);
    if (!path.empty()) save_eigen_cache(path, M, key, pairs);
    return pairs;
}

PointResult verify_point(const PointSetup& s, const std::vector<EigenPair>& pairs) {
    PointResult out;
    out.epsilon = s.config.family.epsilon;
    out.certificate = s.certificate;
    out.singular_fraction = s.reg.singular_fraction;
    out.lambda_ric = s.lambda_ric;
    const double eps_hat = s.fibers.epsilon_hat;
    const double psi = s.certificate.psi;
    if (!s.M.is_grid()) out.notes.push_back("fiber a priori checks skipped: flows and fiber bounds need a grid");
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const auto& pair = pairs[j];
        if (s.config.theta_max && pair.theta > *s.config.theta_max) continue;
        if (pair.theta <= kConstantMode) {
            out.notes.push_back("mode " + std::to_string(j) + " is constant and was skipped");
            continue;
        }
        ModeResult m;
        m.index = static_cast<int>(j);
        m.theta = pair.theta;
        m.residual = pair.residual;
        const FunctionData f = differentiate(s.M, s.L, pair.u);
        const TangentialField T = tangential_projection(s.M, f.grad, s.stats, s.reg);
        m.reports = hessian_l2_bound(s.M, f, s.ball_r, s.ball_2r, s.cutoff, s.lambda_ric);
        m.reports.push_back(
            interior_l2_report(s.M, f, s.phi, s.stats, s.reg, T, s.ball_r, s.ball_2r, s.ball_4r, eps_hat));
        const auto tangential =
            tangential_l2_report(s.M, f, s.stats, s.reg, T, s.ball_r, s.ball_2r, s.cutoff, eps_hat, psi);
        m.reports.push_back(tangential);
        const auto main = main_theorem_report(s.M, pair, f, s.stats, s.reg, T, s.ball_r, s.ball_2r, s.cutoff,
                                              eps_hat, psi, s.config.residual_tolerance);
        m.reports.push_back(main);
        if (s.M.is_grid()) {
            for (const auto& trace : s.fibers.fibers)
                if (trace.regular && trace.closed)
                    m.fibers.push_back(
                        fiber_apriori_check(s.M, trace, s.phi, s.stats, s.reg, T, f.hess, eps_hat, s.r));
        }
        m.row.epsilon = out.epsilon;
        m.row.mode = m.index;
        m.row.theta = pair.theta;
        m.row.epsilon_hat = eps_hat;
        m.row.psi = psi;
        m.row.K = tangential.constant("K");
        m.row.u_sup = main.constant("u_sup_2r");
        m.row.lhs = main.lhs;
        m.row.rhs = main.rhs;
        m.row.margin = main.margin;
        m.row.pass = main.pass;
        out.modes.push_back(std::move(m));
    }
    if (out.modes.empty()) throw PreconditionError("no non-constant eigenmode within the spectrum settings");
    return out;
}

FlowResult run_flow(const PointSetup& s, const std::vector<EigenPair>& pairs) {
    if (!s.M.is_grid()) throw PreconditionError("fiber flows need a grid family");
    const auto& c = s.config;
    const ScalarField u = flow_function(s, pairs);
    const TensorField hess_u = hessian(s.M, u);
    const TangentialField T = tangential_projection(s.M, u, s.stats, s.reg);

    std::vector<double> start(c.center);
    start.resize(static_cast<std::size_t>(s.M.dim()), 0.0);
    start.back() = c.flow_start;
    const std::size_t x0 = s.M.nearest_node(start);
    if (!s.reg.regular[x0]) throw PreconditionError("flow start node is not a regular point of the splitting map");

    FiberOptions fopt;
    fopt.level_tolerance = c.level_tolerance;
    const FiberTrace fiber = extract_fiber(s.M, s.phi, s.reg, s.phi.value(x0), x0, fopt);

    FlowResult out;
    out.bound = fiber_apriori_check(s.M, fiber, s.phi, s.stats, s.reg, T, hess_u, s.fibers.epsilon_hat, s.r);
    out.duration = c.flow_time_factor / out.bound.K;
    const double sup = stability_measure(s.M, T);
    out.dt = sup > 0.0 ? c.dt_factor / sup : out.duration / 1000.0;
    FlowOptions opt;
    opt.dt = std::min(out.dt, out.duration);
    opt.duration = out.duration;
    opt.sample_every = std::max(1, static_cast<int>(std::llround(out.duration / opt.dt)) / 2000);
    out.trajectory = integrate_flow(s.M, s.phi, s.reg, u, T, x0, opt);
    out.exponential = verify_exponential_bound(out.trajectory, out.bound);
    out.max_drift = *std::max_element(out.trajectory.drift.begin(), out.trajectory.drift.end());
    out.monotone = std::is_sorted(out.trajectory.u.begin(), out.trajectory.u.end());
    return out;
}

std::string point_directory(double epsilon) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, epsilon);
    return "eps_" + std::string(buf, res.ptr);
}

SweepResult run_sweep(const ExperimentConfig& config, const std::string& out_dir, int jobs) {
    config.validate();
    const std::set<double> distinct(config.epsilons.begin(), config.epsilons.end());
    if (distinct.size() < 3)
        throw PreconditionError("sweep needs at least three distinct epsilon values, got " +
                                std::to_string(distinct.size()));
    if (distinct.size() != config.epsilons.size()) throw PreconditionError("sweep epsilons must be distinct");

    const std::size_t n = config.epsilons.size();
    std::vector<PointResult> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto cache_dir = config.cache ? (std::filesystem::path(out_dir) / "cache").string() : std::string();

    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                ExperimentConfig c = config;
                c.family.epsilon = config.epsilons[i];
                const PointSetup setup = prepare_point(c);
                const auto pairs = point_spectrum(setup.M, c, cache_dir);
                results[i] = verify_point(setup, pairs);
                const auto dir = std::filesystem::path(out_dir) / "points" / point_directory(c.family.epsilon);
                std::filesystem::create_directories(dir);
                write_json((dir / "report.json").string(), to_json(results[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(jobs, 1, static_cast<int>(n));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    SweepResult out;
    std::vector<SweepRow> rows;
    for (const auto& p : results)
        for (const auto& m : p.modes) rows.push_back(m.row);
    out.points = std::move(results);
    out.summary = summarize_sweep(std::move(rows), config.max_spread);
    return out;
}

}  // namespace fiberlab
