#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fiberlab/format.hpp"
#include "fiberlab/hashing.hpp"
#include "fiberlab/report_io.hpp"

using namespace fiberlab;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kEstimateFailure = 2;

struct Options {
    std::string config;
    std::string out;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    bool no_cache = false;
};

struct Run {
    ExperimentConfig config;
    std::string out;
    std::string cache_dir;
};

Run open_run(const Options& o) {
    Run run;
    run.config = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.config.empty()) run.config.validate();
    if (!o.out.empty()) run.config.output = o.out;
    if (o.seed) run.config.seed = *o.seed;
    if (o.no_cache) run.config.cache = false;
    run.out = run.config.output;
    fs::create_directories(run.out);
    run.cache_dir = run.config.cache ? (fs::path(run.out) / "cache").string() : std::string();
    return run;
}

void save(RunManifest& manifest, const Run& run, const std::string& name, const Json& j) {
    write_json((fs::path(run.out) / name).string(), j);
    manifest.add(name);
}

template <class Fn>
void save_csv(RunManifest& manifest, const Run& run, const std::string& name, Fn&& fill) {
    std::ofstream out(fs::path(run.out) / name, std::ios::binary);
    if (!out) throw Error("cannot write '" + (fs::path(run.out) / name).string() + "'");
    fill(out);
    out.close();
    manifest.add(name);
}

RunManifest begin(const Run& run, const std::string& command) {
    RunManifest manifest(run.out, run.config, command);
    write_text((fs::path(run.out) / "config.yaml").string(), to_yaml(run.config));
    manifest.add("config.yaml");
    return manifest;
}

int cmd_build(const Options& o) {
    const Run run = open_run(o);
    auto manifest = begin(run, "build");
    const auto M = build_family(run.config.family);
    Json j;
    j["schema"] = kReportSchema;
    j["family"] = to_string(M.spec().kind);
    j["canonical"] = M.spec().canonical();
    j["specHash"] = sha256_hex(M.spec().canonical());
    j["dim"] = M.dim();
    j["baseDim"] = M.base_dim();
    j["nodes"] = M.size();
    j["volume"] = number(M.total_volume());
    j["grid"] = M.is_grid();
    j["lambdaRic"] = number(ricci_lower_parameter(M));
    save(manifest, run, "manifold.json", j);
    manifest.write();
    std::cout << to_string(M.spec().kind) << ": m=" << M.dim() << " k=" << M.base_dim() << " nodes=" << M.size()
              << " volume=" << fmt17(M.total_volume()) << " epsilon=" << fmt17(M.spec().epsilon) << '\n';
    return kPass;
}

int cmd_eig(const Options& o) {
    const Run run = open_run(o);
    auto manifest = begin(run, "eig");
    const auto M = build_family(run.config.family);
    const auto pairs = point_spectrum(M, run.config, run.cache_dir);
    save_csv(manifest, run, "eigenpairs.csv", [&](std::ostream& out) { write_eigen_csv(out, pairs); });
    manifest.write();
    std::cout << pairs.size() << " eigenpairs, theta in [" << fmt17(pairs.front().theta) << ", "
              << fmt17(pairs.back().theta) << "]\n";
    return kPass;
}

int cmd_split(const Options& o) {
    const Run run = open_run(o);
    auto manifest = begin(run, "split");
    const auto s = prepare_point(run.config);
    Json j = to_json(s.certificate);
    j["schema"] = kReportSchema;
    j["singularFraction"] = number(s.reg.singular_fraction);
    j["regularThreshold"] = number(s.reg.threshold);
    Json res = Json::array();
    for (double v : s.phi.harmonic_residual) res.push_back(number(v));
    j["harmonicResidual"] = res;
    j["fibersSampled"] = s.fibers.fibers.size();
    j["maxFiberDiameter"] = number(s.fibers.max_diameter);
    save(manifest, run, "certificate.json", j);
    manifest.write();
    std::cout << "psi=" << fmt17(s.certificate.psi) << " epsilonHat=" << fmt17(s.certificate.epsilonHat)
              << " rangeOk=" << (s.certificate.rangeOk ? "true" : "false") << '\n';
    return kPass;
}

int cmd_flow(const Options& o) {
    const Run run = open_run(o);
    auto manifest = begin(run, "flow");
    const auto s = prepare_point(run.config);
    std::vector<EigenPair> pairs;
    if (run.config.flow_function == FlowFunction::Eigenmode) pairs = point_spectrum(s.M, run.config, run.cache_dir);
    const auto f = run_flow(s, pairs);
    save_csv(manifest, run, "trajectory.csv", [&](std::ostream& out) { write_trajectory_csv(out, f.trajectory); });
    save(manifest, run, "flow.json", to_json(f));
    manifest.write();
    std::cout << "fiber bound margin=" << fmt17(f.bound.margin) << " exponential margin=" << fmt17(f.exponential.margin)
              << " drift=" << fmt17(f.max_drift) << (f.pass() ? " PASS" : " FAIL") << '\n';
    return f.pass() ? kPass : kEstimateFailure;
}

int cmd_verify(const Options& o) {
    const Run run = open_run(o);
    auto manifest = begin(run, "verify");
    const auto s = prepare_point(run.config);
    const auto pairs = point_spectrum(s.M, run.config, run.cache_dir);
    const auto p = verify_point(s, pairs);
    save(manifest, run, "verify.json", to_json(p));
    manifest.write();
    int failed = 0, total = 0;
    for (const auto& m : p.modes) {
        for (const auto& r : m.reports) total++, failed += !r.pass;
        for (const auto& f : m.fibers) total++, failed += !f.pass;
    }
    std::cout << p.modes.size() << " modes, " << total << " checks, " << failed << " failed\n";
    return p.pass() ? kPass : kEstimateFailure;
}

int cmd_sweep(const Options& o) {
    const Run run = open_run(o);
    auto manifest = begin(run, "sweep");
    ExperimentConfig c = run.config;
    const auto result = run_sweep(c, run.out, o.jobs);
    for (double e : c.epsilons) manifest.add("points/" + point_directory(e) + "/report.json");
    save_csv(manifest, run, "sweep.csv", [&](std::ostream& out) { write_sweep_csv(out, result.summary.rows); });
    save_csv(manifest, run, "plot.csv", [&](std::ostream& out) { write_plot_csv(out, result.summary.rows); });
    save(manifest, run, "summary.json", to_json(result.summary));
    manifest.write();
    std::cout << result.summary.rows.size() << " rows over " << c.epsilons.size() << " epsilon values; reports "
              << (result.summary.all_pass ? "pass" : "fail") << "; ratio spread " << fmt17(result.summary.ratio_spread)
              << (result.summary.spread_pass ? " (pass)" : " (fail)") << '\n';
    for (const auto& note : result.summary.notes) std::cout << "note: " << note << '\n';
    return result.pass() ? kPass : kEstimateFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tangential gradient estimates on collapsing tori"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    std::uint64_t seed = 0;
    app.add_option("--config", o.config, "experiment config (YAML)");
    app.add_option("--out", o.out, "output directory (overrides the config)");
    app.add_option("--jobs", o.jobs, "parallel sweep points")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "eigensolver seed (overrides the config)");
    app.add_flag("--no-cache", o.no_cache, "ignore and do not write the eigenpair cache");

    int (*handler)(const Options&) = nullptr;
    const std::pair<const char*, int (*)(const Options&)> verbs[] = {
        {"build", cmd_build}, {"eig", cmd_eig},       {"split", cmd_split},
        {"flow", cmd_flow},   {"verify", cmd_verify}, {"sweep", cmd_sweep}};
    const char* help[] = {"build the manifold and print a summary", "eigenpair table",
                          "splitting map certificate",           "fiber flow trajectory and a priori bound",
                          "estimate reports at one point",       "estimate reports over the epsilon sweep"};
    for (std::size_t i = 0; i < std::size(verbs); ++i) {
        auto fn = verbs[i].second;
        app.add_subcommand(verbs[i].first, help[i])->callback([&handler, fn] { handler = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kError;
    }
    if (seed_opt->count() > 0) o.seed = seed;
    try {
        return handler(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
}
