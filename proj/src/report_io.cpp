#include "fiberlab/report_io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fiberlab/format.hpp"
#include "fiberlab/hashing.hpp"

namespace fiberlab {

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json vec(const SmallVec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
    return a;
}

}  // namespace

Json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

Json to_json(const Certificate& c) {
    Json j;
    j["supGrad"] = number(c.supGrad);
    j["gramDev"] = number(c.gramDev);
    j["hessEnergy"] = number(c.hessEnergy);
    j["rangeOk"] = c.rangeOk;
    j["psi"] = number(c.psi);
    j["epsilonHat"] = number(c.epsilonHat);
    return j;
}

Json to_json(const EstimateReport& r) {
    Json j;
    j["name"] = r.name;
    j["lhs"] = number(r.lhs);
    j["rhs"] = number(r.rhs);
    j["margin"] = number(r.margin);
    j["pass"] = r.pass;
    Json cs = Json::array();
    for (const auto& c : r.constants)
        cs.push_back(Json{{"name", c.name}, {"value", number(c.value)}, {"provenance", c.provenance}});
    j["constants"] = cs;
    j["notes"] = r.notes;
    return j;
}

Json to_json(const FiberBoundReport& r) {
    Json j;
    j["level"] = vec(r.level);
    j["k"] = r.k;
    j["r"] = number(r.r);
    j["epsilonHat"] = number(r.epsilon_hat);
    j["lambda"] = number(r.lambda);
    j["Lambda"] = number(r.Lambda);
    j["C0"] = number(r.C0);
    j["K"] = number(r.K);
    j["delta0"] = number(r.delta0);
    j["lhs"] = number(r.lhs);
    j["rhs"] = number(r.rhs);
    j["margin"] = number(r.margin);
    j["pass"] = r.pass;
    j["counterexample"] = r.counterexample;
    j["fiberNodes"] = r.fiber_nodes;
    j["neighbourhoodNodes"] = r.neighbourhood_nodes;
    return j;
}

Json to_json(const ModeResult& m) {
    Json j;
    j["index"] = m.index;
    j["theta"] = number(m.theta);
    j["residual"] = number(m.residual);
    j["pass"] = m.pass();
    Json reps = Json::array();
    for (const auto& r : m.reports) reps.push_back(to_json(r));
    j["reports"] = reps;
    Json fibers = Json::array();
    for (const auto& f : m.fibers) fibers.push_back(to_json(f));
    j["fiberBounds"] = fibers;
    return j;
}

Json to_json(const PointResult& p) {
    Json j;
    j["schema"] = kReportSchema;
    j["epsilon"] = number(p.epsilon);
    j["pass"] = p.pass();
    j["certificate"] = to_json(p.certificate);
    j["singularFraction"] = number(p.singular_fraction);
    j["lambdaRic"] = number(p.lambda_ric);
    Json modes = Json::array();
    for (const auto& m : p.modes) modes.push_back(to_json(m));
    j["modes"] = modes;
    j["notes"] = p.notes;
    return j;
}

Json to_json(const SweepSummary& s) {
    Json j;
    j["schema"] = kReportSchema;
    j["allPass"] = s.all_pass;
    j["exponent"] = s.exponent ? number(*s.exponent) : Json();
    j["ratioSpread"] = number(s.ratio_spread);
    j["spreadDegenerate"] = s.spread_degenerate;
    j["spreadPass"] = s.spread_pass;
    Json rows = Json::array();
    for (const auto& r : s.rows)
        rows.push_back(Json{{"epsilon", number(r.epsilon)},
                            {"mode", r.mode},
                            {"theta", number(r.theta)},
                            {"epsilonHat", number(r.epsilon_hat)},
                            {"psi", number(r.psi)},
                            {"K", number(r.K)},
                            {"uSup", number(r.u_sup)},
                            {"lhs", number(r.lhs)},
                            {"rhs", number(r.rhs)},
                            {"margin", number(r.margin)},
                            {"ratio", number(r.ratio())},
                            {"pass", r.pass}});
    j["rows"] = rows;
    j["notes"] = s.notes;
    return j;
}

Json to_json(const FlowResult& f) {
    Json j;
    j["schema"] = kReportSchema;
    j["pass"] = f.pass();
    j["dt"] = number(f.dt);
    j["duration"] = number(f.duration);
    j["samples"] = f.trajectory.t.size();
    j["maxDrift"] = number(f.max_drift);
    j["monotone"] = f.monotone;
    j["fiberBound"] = to_json(f.bound);
    j["exponentialBound"] =
        Json{{"rate", number(f.exponential.rate)}, {"margin", number(f.exponential.margin)}, {"pass", f.exponential.pass}};
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_eigen_csv(std::ostream& out, const std::vector<EigenPair>& pairs) {
    out << "index,theta,residual\n";
    for (std::size_t i = 0; i < pairs.size(); ++i)
        out << i << ',' << fmt17(pairs[i].theta) << ',' << fmt17(pairs[i].residual) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "epsilon,epsilonHat,psi,theta,K,lhs,rhs,margin,pass\n";
    for (const auto& r : rows)
        out << fmt17(r.epsilon) << ',' << fmt17(r.epsilon_hat) << ',' << fmt17(r.psi) << ',' << fmt17(r.theta) << ','
            << fmt17(r.K) << ',' << fmt17(r.lhs) << ',' << fmt17(r.rhs) << ',' << fmt17(r.margin) << ','
            << (r.pass ? "true" : "false") << '\n';
}

void write_plot_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "x,y,y2,epsilon,mode\n";
    for (const auto& r : rows)
        out << fmt17(r.epsilon_hat) << ',' << fmt17(r.lhs) << ',' << fmt17(r.rhs) << ',' << fmt17(r.epsilon) << ','
            << r.mode << '\n';
}

RunManifest::RunManifest(std::string root, const ExperimentConfig& config, std::string command)
    : root_(std::move(root)), command_(std::move(command)), config_hash_(config_hash(config)), started_(utc_now()) {}

void RunManifest::add(const std::string& relative) { files_.push_back(relative); }

void RunManifest::write() const {
    Json j;
    j["schema"] = "fiberlab.manifest/1";
    j["command"] = command_;
    j["version"] = FIBERLAB_VERSION;
    j["configHash"] = config_hash_;
    j["started"] = started_;
    j["finished"] = utc_now();
    Json files = Json::array();
    for (const auto& f : files_) {
        const auto path = (std::filesystem::path(root_) / f).string();
        files.push_back(Json{{"path", f}, {"sha256", sha256_file(path)}, {"bytes", std::filesystem::file_size(path)}});
    }
    j["files"] = files;
    write_json((std::filesystem::path(root_) / "manifest.json").string(), j);
}

bool verify_manifest(const std::string& root, std::string* problem) {
    const auto fail = [&](const std::string& what) {
        if (problem) *problem = what;
        return false;
    };
    std::ifstream in(std::filesystem::path(root) / "manifest.json");
    if (!in) return fail("manifest.json missing");
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        return fail(std::string("manifest.json unreadable: ") + e.what());
    }
    for (const auto& f : j.at("files")) {
        const auto rel = f.at("path").get<std::string>();
        const auto path = (std::filesystem::path(root) / rel).string();
        if (!std::filesystem::exists(path)) return fail(rel + " missing");
        if (sha256_file(path) != f.at("sha256").get<std::string>()) return fail(rel + " checksum mismatch");
    }
    return true;
}

}  // namespace fiberlab
