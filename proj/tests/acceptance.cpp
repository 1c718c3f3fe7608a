#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "fiberlab/report_io.hpp"
#include "fixtures.hpp"

using namespace fiberlab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
const std::string kConfigs = FIBERLAB_CONFIGS;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok) { pass = pass && ok; }
};

int failures = 0;

void print(int n, const std::string& title, const Verdict& v) {
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << title << "  [" << v.detail.str()
              << "]" << std::endl;
    failures += !v.pass;
}

template <class Fn>
void criterion(int n, const std::string& title, Fn&& fn) {
    Verdict v;
    try {
        fn(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << "error: " << e.what();
    }
    print(n, title, v);
}

std::string g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

bool is_hessian(const std::string& name) { return name.rfind("hessian", 0) == 0; }

std::vector<double> flat_spectrum(double eps, int count) {
    std::vector<double> v;
    for (int p = -12; p <= 12; ++p)
        for (int q = -12; q <= 12; ++q) v.push_back(4 * kPi * kPi * (p * p + q * q / (eps * eps)));
    std::sort(v.begin(), v.end());
    v.resize(static_cast<std::size_t>(count));
    return v;
}

std::vector<double> flat_eigenvalues(double eps, int per_unit) {
    FamilySpec s;
    s.epsilon = eps;
    // per_unit nodes per unit of fiber length, but never fewer than the solver accepts.
    s.resolution = {per_unit, std::max(16, static_cast<int>(std::lround(per_unit * eps)))};
    std::vector<double> v;
    for (const auto& p : eigenpairs(build_family(s), 10)) v.push_back(p.theta);
    return v;
}

// t(y) − t(y0) for y' = 2π cos(2πy) / ε², composite Simpson.
double quadrature_time(double eps, double y0, double y) {
    const int n = 20000;
    const double h = (y - y0) / n;
    const auto f = [&](double s) { return eps * eps / (2.0 * kPi * std::cos(2.0 * kPi * s)); };
    double acc = f(y0) + f(y);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(y0 + i * h);
    return acc * h / 3.0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FIBERLAB_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
    criterion(1, "flat torus spectrum", [](Verdict& v) {
        for (double eps : {1.0, 0.1}) {
            const auto exact = flat_spectrum(eps, 10);
            const auto coarse = flat_eigenvalues(eps, 64), fine = flat_eigenvalues(eps, 128);
            double worst = std::abs(fine[0]);
            double order = INFINITY;
            for (int i = 1; i < 10; ++i) {
                const double e64 = std::abs(coarse[i] - exact[i]), e128 = std::abs(fine[i] - exact[i]);
                worst = std::max(worst, e128 / exact[i]);
                order = std::min(order, std::log2(e64 / e128));
            }
            v.require(worst <= 1e-2 && order >= 1.8);
            v.detail << "eps=" << eps << " rel.err " << g(worst) << " order " << g(order) << "; ";
        }
    });

    criterion(2, "flat exact-splitting null case", [](Verdict& v) {
        auto c = load_config(kConfigs + "/flat.yaml");
        const auto s = prepare_point(c);
        const auto p = verify_point(s, point_spectrum(s.M, c, ""));
        double tangential = 0.0, ratio = 0.0;
        int reports = 0;
        bool all_pass = p.pass();
        for (const auto& m : p.modes) {
            for (const auto& r : m.reports) {
                ++reports;
                if (r.name == "main_theorem") tangential = std::max(tangential, r.lhs);
                if (!is_hessian(r.name)) ratio = std::max(ratio, r.lhs / r.rhs);
            }
            for (const auto& f : m.fibers) ratio = std::max(ratio, f.lhs / f.rhs), ++reports;
        }
        v.require(s.certificate.psi <= 1e-10 && tangential <= 1e-8 && ratio <= 1e-8 && all_pass);
        v.detail << "psi " << g(s.certificate.psi) << ", max r|grad^T u| " << g(tangential)
                 << ", max lhs/rhs (tangential, fiber) " << g(ratio) << ", " << reports << " reports over "
                 << p.modes.size() << " modes " << (all_pass ? "all pass" : "some fail");
    });

    criterion(3, "orthogonal invariance of |J_k|, F, G", [](Verdict& v) {
        std::mt19937_64 rng(20240611);
        FamilySpec ws;
        ws.kind = FamilyKind::WarpedTorus;
        ws.epsilon = 0.1;
        ws.delta = 0.3;
        ws.base_length = 4.0;
        ws.resolution = {32, 32};
        const auto W = build_family(ws);
        const std::array<double, 2> at{0.75, 0.0};
        const auto wphi = coordinate_map(W, W.nearest_node(at), 1.25);
        const auto wu = sample(W, [](const SmallVec& x) { return std::sin(2 * kPi * x(1)) * (1 + 0.5 * x(0)); });
        const auto T = fixtures::twisted_setup();
        double dev = 0.0, scale = 0.0;
        long checked = 0;
        const auto check = [&](const DiscreteManifold& M, const SplittingMap& phi, const ScalarField& u) {
            const auto s0 = jacobian_stats(M, phi);
            const auto reg = classify_regular(M, s0, default_regularity_threshold(s0));
            const auto f0 = tangential_projection(M, u, s0, reg);
            for (int trial = 0; trial < 20; ++trial) {
                const auto s1 = jacobian_stats(M, transformed(phi, fixtures::random_orthogonal(phi.k(), rng)));
                for (std::size_t i = 0; i < M.size(); ++i) {
                    if (!f0.defined[i]) continue;
                    const auto e = static_cast<Eigen::Index>(i);
                    const SmallVec gr = f0.grad.at(i), t = f0.tangential.at(i);
                    const double F0 = quantity_F(s0, reg, M, i, gr, t), G0 = quantity_G(s0, reg, M, i, t);
                    const double F1 = quantity_F(s1, reg, M, i, gr, t), G1 = quantity_G(s1, reg, M, i, t);
                    dev = std::max({dev, std::abs(s1.det_sqrt(e) - s0.det_sqrt(e)), std::abs(F1 - F0),
                                    std::abs(G1 - G0)});
                    scale = std::max({scale, std::abs(F0), std::abs(G0)});
                    ++checked;
                }
            }
        };
        check(W, wphi, wu);
        check(T.M, T.phi, T.u);
        v.require(dev <= 1e-10);
        v.detail << "20 Q per k in {1, 2}, " << checked << " node evaluations, max |deviation| " << g(dev)
                 << " with |F|, |G| up to " << g(scale);
    });

    criterion(4, "flat fiber flow", [](Verdict& v) {
        const auto c = load_config(kConfigs + "/flat_flow.yaml");
        const auto s = prepare_point(c);
        const auto f = run_flow(s, {});
        const auto& tr = f.trajectory;
        double quad = 0.0;
        const double y0 = tr.x.front()(1);
        for (std::size_t j = 1; j < tr.t.size(); ++j)
            if (tr.x[j](1) < 0.2)
                quad = std::max(quad, std::abs(tr.t[j] - quadrature_time(c.family.epsilon, y0, tr.x[j](1))) / tr.t[j]);
        auto bad = tr;
        for (std::size_t j = 0; j < bad.t.size(); ++j) bad.speed_sq[j] *= std::exp(-3 * f.exponential.rate * bad.t[j]);
        const bool control_fails = !verify_exponential_bound(bad, f.exponential.rate).pass;
        v.require(f.max_drift <= 1e-8);
        v.require(f.monotone);
        v.require(f.exponential.pass && f.exponential.margin >= 1 - 1e-3);
        v.require(control_fails);
        v.detail << "(a) drift " << g(f.max_drift) << " over T=10/K=" << g(f.duration) << "; (b) monotone "
                 << (f.monotone ? "yes" : "no") << "; (c) margin " << g(f.exponential.margin)
                 << ", time vs quadrature rel.dev " << g(quad) << "; (d) corrupted trajectory "
                 << (control_fails ? "fails" : "passes");
    });

    const auto sweep_config = load_config(kConfigs + "/warped_sweep.yaml");
    const auto sweep_dir = fs::temp_directory_path() / "fiberlab_acceptance" / "sweep";
    fs::remove_all(sweep_dir);
    std::optional<SweepResult> sweep;
    std::string sweep_error;
    try {
        auto c = sweep_config;
        c.cache = false;
        sweep = run_sweep(c, sweep_dir.string(), 1);
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    const auto need_sweep = [&] {
        if (!sweep) throw Error("sweep failed: " + sweep_error);
        return *sweep;
    };

    criterion(5, "a priori bound on sampled warped fibers", [&](Verdict& v) {
        const auto sw = need_sweep();
        int n = 0, bad = 0;
        double margin = INFINITY;
        for (const auto& p : sw.points) {
            int here = 0;
            for (const auto& m : p.modes)
                for (const auto& f : m.fibers) {
                    ++n, ++here;
                    bad += !f.pass;
                    margin = std::min(margin, f.margin);
                }
            v.require(here > 0);
        }
        v.require(bad == 0);
        v.detail << n << " fiber checks over eps {0.2, 0.1, 0.05}, " << bad << " violations, min margin " << g(margin);
    });

    criterion(6, "interior L2 estimate with re-derived C1", [&](Verdict& v) {
        const auto sw = need_sweep();
        int n = 0, bad = 0;
        double c1_dev = 0.0, rhs_dev = 0.0;
        for (const auto& p : sw.points)
            for (const auto& m : p.modes)
                for (const auto& r : m.reports) {
                    if (r.name != "interior_l2") continue;
                    ++n;
                    bad += !(r.pass && r.lhs <= r.rhs);
                    const double k = r.constant("k"), C0 = r.constant("C0");
                    const double C1 = 8 * k * k * std::pow(1 + C0, k - 1);
                    const double rhs = C1 * r.constant("volume_r") * std::pow(r.constant("K"), 2) *
                                       (std::sqrt(r.constant("epsilon_hat")) + C0);
                    c1_dev = std::max(c1_dev, std::abs(r.constant("C1") - C1) / C1);
                    rhs_dev = std::max(rhs_dev, std::abs(r.rhs - rhs) / rhs);
                }
        v.require(n > 0 && bad == 0 && c1_dev <= 1e-12 && rhs_dev <= 1e-12);
        v.detail << n << " reports, " << bad << " fail; C1 rel.dev " << g(c1_dev) << ", RHS rel.dev " << g(rhs_dev);
    });

    criterion(7, "main theorem sweep", [&](Verdict& v) {
        const auto sw = need_sweep();
        const auto& s = sw.summary;
        v.require(s.all_pass);
        v.require(!s.spread_degenerate && s.spread_pass && s.ratio_spread <= sweep_config.max_spread);
        v.detail << s.rows.size() << " rows, reports " << (s.all_pass ? "all pass" : "some fail") << ", ratio spread "
                 << g(s.ratio_spread) << (s.spread_degenerate ? " (undefined: LHS at round-off)" : "");
    });

    criterion(8, "singular fraction of the Morse map under refinement", [](Verdict& v) {
        const auto dir = fs::temp_directory_path() / "fiberlab_acceptance" / "morse";
        fs::create_directories(dir);
        std::vector<double> frac;
        for (int n : {32, 64, 128}) {
            const auto path = (dir / ("torus" + std::to_string(n) + ".off")).string();
            fixtures::write_torus_off(path, n);
            const auto M = build_family(fixtures::mesh_spec(path));
            const auto phi = explicit_map(M, {sample(M, [](const SmallVec& x) { return x(0) * x(0); })});
            const auto stats = jacobian_stats(M, phi);
            frac.push_back(classify_regular(M, stats, default_regularity_threshold(stats)).singular_fraction);
        }
        v.require(frac[0] > frac[1] && frac[1] > frac[2]);
        v.detail << "fractions " << g(frac[0]) << " > " << g(frac[1]) << " > " << g(frac[2]);
    });

    criterion(9, "Hessian L2 bound and cutoff pointwise bound", [&](Verdict& v) {
        const auto sw = need_sweep();
        int n = 0, bad = 0;
        for (const auto& p : sw.points)
            for (const auto& m : p.modes)
                for (const auto& r : m.reports)
                    if (is_hessian(r.name)) ++n, bad += !(r.pass && r.lhs <= r.rhs);
        int cutoff_bad = 0;
        std::size_t nodes = 0;
        for (double eps : sweep_config.epsilons) {
            auto c = sweep_config;
            c.family.epsilon = eps;
            const auto s = prepare_point(c);
            const auto& cut = s.cutoff;
            for (std::size_t i = 0; i < s.M.size(); ++i) {
                const auto e = static_cast<Eigen::Index>(i);
                const double phi = cut.phi(e);
                bool ok = phi >= 0.0 && phi <= 1.0 && cut.profile(e) <= 2 * cut.C_ctf;
                if (s.ball_r.contains(i)) ok = ok && phi == 1.0;
                if (!s.ball_2r.contains(i)) ok = ok && phi == 0.0;
                cutoff_bad += !ok;
                ++nodes;
            }
        }
        v.require(n > 0 && bad == 0 && cutoff_bad == 0);
        v.detail << n << " Hessian reports, " << bad << " fail; cutoff checked at " << nodes << " nodes, "
                 << cutoff_bad << " violations";
    });

    criterion(10, "sweep determinism", [](Verdict& v) {
        const auto root = fs::temp_directory_path() / "fiberlab_acceptance" / "determinism";
        fs::remove_all(root);
        const std::string cfg = "--config " + kConfigs + "/warped_sweep.yaml";
        const int ca = run_cli(cfg + " --out " + (root / "a").string() + " sweep");
        const int cb = run_cli(cfg + " --out " + (root / "b").string() + " sweep");
        v.require(ca == cb && ca != 1);
        int compared = 0, differ = 0;
        for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
            const auto ext = e.path().extension();
            if (!e.is_regular_file() || (ext != ".csv" && ext != ".json") || e.path().filename() == "manifest.json")
                continue;
            const auto rel = fs::relative(e.path(), root / "a");
            ++compared;
            differ += slurp(e.path()) != slurp(root / "b" / rel);
        }
        v.require(compared >= 6 && differ == 0);
        v.detail << "exit codes " << ca << "/" << cb << ", " << compared << " CSV/JSON files compared, " << differ
                 << " differ";
    });

    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
    return failures == 0 ? 0 : 1;
}
