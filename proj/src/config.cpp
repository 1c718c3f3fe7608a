#include "fiberlab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

#include "fiberlab/hashing.hpp"

namespace fiberlab {

namespace {

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// A mapping node whose keys must all be consumed.
class Section {
public:
    Section(const YAML::Node& node, std::string path, const std::string& source)
        : node_(node), path_(std::move(path)), source_(source) {
        if (!node_.IsMap()) fail(node_, "expected a mapping");
    }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        const auto mark = at.Mark();
        std::string where = source_;
        if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1);
        throw ConfigError(where + ": " + (path_.empty() ? "" : "'" + path_ + "': ") + what);
    }

    std::optional<YAML::Node> get(const std::string& key) {
        seen_.insert(key);
        const YAML::Node v = std::as_const(node_)[key];
        if (!v.IsDefined() || v.IsNull()) return std::nullopt;
        return v;
    }

    template <class T>
    void read(const std::string& key, T& out) {
        auto v = get(key);
        if (!v) return;
        try {
            out = v->as<T>();
        } catch (const YAML::Exception&) {
            Section(node_, join(key), source_).fail(*v, "malformed value '" + scalar(*v) + "'");
        }
    }

    void read(const std::string& key, std::vector<double>& out) {
        auto v = get(key);
        if (!v) return;
        if (!v->IsSequence()) Section(node_, join(key), source_).fail(*v, "expected a list of numbers");
        out.clear();
        for (const auto& e : *v) {
            try {
                out.push_back(e.as<double>());
            } catch (const YAML::Exception&) {
                Section(node_, join(key), source_).fail(e, "malformed number '" + scalar(e) + "'");
            }
        }
    }

    Section child(const std::string& key) {
        seen_.insert(key);
        const YAML::Node v = std::as_const(node_)[key];
        return Section(v.IsDefined() && !v.IsNull() ? v : YAML::Node(YAML::NodeType::Map), join(key), source_);
    }

    void finish() const {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) fail(kv.first, "unknown key '" + key + "'");
        }
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    static std::string scalar(const YAML::Node& n) { return n.IsScalar() ? n.Scalar() : "<non-scalar>"; }

    YAML::Node node_;
    std::string path_;
    const std::string& source_;
    std::set<std::string> seen_;
};

void require_positive(double v, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name + " must be positive, got " + shortest(v));
}

}  // namespace

std::string to_string(FlowFunction f) { return f == FlowFunction::FiberSine ? "fiber-sine" : "eigenmode"; }

void ExperimentConfig::validate() const {
    family.validate();
    require_positive(radius, "ball.radius");
    require_positive(lambda_min, "thresholds.lambda_min");
    require_positive(level_tolerance, "thresholds.level_tolerance");
    require_positive(dt_factor, "thresholds.dt_factor");
    require_positive(residual_tolerance, "thresholds.residual_tolerance");
    require_positive(flow_time_factor, "flow.time_factor");
    require_positive(max_spread, "sweep.max_spread");
    if (theta_max) require_positive(*theta_max, "spectrum.theta_max");
    if (eigen_count < 1) throw ConfigError("spectrum.count must be at least 1");
    if (fiber_samples < 1 || fiber_samples % 2 == 0) throw ConfigError("estimates.fiber_samples must be odd");
    if (lambda_ric && !std::isfinite(*lambda_ric)) throw ConfigError("estimates.lambda_ric must be finite");
    if (flow_mode < 0) throw ConfigError("flow.mode must be non-negative");
    if (flow_frequency < 1) throw ConfigError("flow.frequency must be at least 1");
    const std::size_t want = family.kind == FamilyKind::ImportedMesh ? 3 : static_cast<std::size_t>(family.base_dim);
    if (center.size() != want)
        throw ConfigError("ball.center needs " + std::to_string(want) + " coordinates, got " +
                          std::to_string(center.size()));
    for (double e : epsilons)
        if (!(e > 0.0 && e <= 1.0)) throw ConfigError("sweep.epsilons entries must lie in (0, 1]");
    if (output.empty()) throw ConfigError("output must not be empty");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root.IsDefined() || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);

    ExperimentConfig c;
    Section top(root, "", source);

    Section fam = top.child("family");
    std::string kind = to_string(c.family.kind);
    fam.read("kind", kind);
    try {
        c.family.kind = family_kind_from_string(kind);
    } catch (const PreconditionError& e) {
        fam.fail(*fam.get("kind"), e.what());
    }
    fam.read("base_dim", c.family.base_dim);
    fam.read("epsilon", c.family.epsilon);
    fam.read("delta", c.family.delta);
    fam.read("twist", c.family.twist);
    fam.read("base_length", c.family.base_length);
    fam.read("mesh_path", c.family.mesh_path);
    fam.finish();

    Section res = top.child("resolution");
    res.read("base_per_unit", c.family.resolution.base_per_unit);
    res.read("fiber_nodes", c.family.resolution.fiber_nodes);
    res.finish();

    Section ball = top.child("ball");
    ball.read("center", c.center);
    ball.read("radius", c.radius);
    ball.finish();

    Section spec = top.child("spectrum");
    spec.read("count", c.eigen_count);
    if (spec.get("theta_max")) {
        double t = 0.0;
        spec.read("theta_max", t);
        c.theta_max = t;
    }
    spec.finish();

    Section th = top.child("thresholds");
    th.read("lambda_min", c.lambda_min);
    th.read("level_tolerance", c.level_tolerance);
    th.read("dt_factor", c.dt_factor);
    th.read("residual_tolerance", c.residual_tolerance);
    th.finish();

    Section est = top.child("estimates");
    if (auto v = est.get("lambda_ric")) {
        if (v->IsScalar() && v->Scalar() == "auto") {
            c.lambda_ric.reset();
        } else {
            double l = 0.0;
            est.read("lambda_ric", l);
            c.lambda_ric = l;
        }
    }
    est.read("fiber_samples", c.fiber_samples);
    est.finish();

    Section flow = top.child("flow");
    std::string fn = to_string(c.flow_function);
    flow.read("function", fn);
    if (fn == "fiber-sine") {
        c.flow_function = FlowFunction::FiberSine;
    } else if (fn == "eigenmode") {
        c.flow_function = FlowFunction::Eigenmode;
    } else {
        flow.fail(*flow.get("function"), "unknown flow function '" + fn + "' (fiber-sine or eigenmode)");
    }
    flow.read("mode", c.flow_mode);
    flow.read("frequency", c.flow_frequency);
    flow.read("start", c.flow_start);
    flow.read("time_factor", c.flow_time_factor);
    flow.finish();

    Section sweep = top.child("sweep");
    sweep.read("epsilons", c.epsilons);
    sweep.read("max_spread", c.max_spread);
    sweep.finish();

    top.read("output", c.output);
    top.read("cache", c.cache);
    top.read("seed", c.seed);
    top.finish();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string to_yaml(const ExperimentConfig& c) {
    YAML::Emitter out;
    const auto num = [](double v) { return shortest(v); };
    const auto list = [&](const std::vector<double>& v) {
        out << YAML::Flow << YAML::BeginSeq;
        for (double x : v) out << num(x);
        out << YAML::EndSeq;
    };
    out << YAML::BeginMap;
    out << YAML::Key << "family" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << to_string(c.family.kind);
    out << YAML::Key << "base_dim" << YAML::Value << c.family.base_dim;
    out << YAML::Key << "epsilon" << YAML::Value << num(c.family.epsilon);
    out << YAML::Key << "delta" << YAML::Value << num(c.family.delta);
    out << YAML::Key << "twist" << YAML::Value << num(c.family.twist);
    out << YAML::Key << "base_length" << YAML::Value << num(c.family.base_length);
    out << YAML::Key << "mesh_path" << YAML::Value << YAML::DoubleQuoted << c.family.mesh_path;
    out << YAML::EndMap;

    out << YAML::Key << "resolution" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "base_per_unit" << YAML::Value << c.family.resolution.base_per_unit;
    out << YAML::Key << "fiber_nodes" << YAML::Value << c.family.resolution.fiber_nodes;
    out << YAML::EndMap;

    out << YAML::Key << "ball" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "center" << YAML::Value;
    list(c.center);
    out << YAML::Key << "radius" << YAML::Value << num(c.radius);
    out << YAML::EndMap;

    out << YAML::Key << "spectrum" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "count" << YAML::Value << c.eigen_count;
    if (c.theta_max) out << YAML::Key << "theta_max" << YAML::Value << num(*c.theta_max);
    out << YAML::EndMap;

    out << YAML::Key << "thresholds" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lambda_min" << YAML::Value << num(c.lambda_min);
    out << YAML::Key << "level_tolerance" << YAML::Value << num(c.level_tolerance);
    out << YAML::Key << "dt_factor" << YAML::Value << num(c.dt_factor);
    out << YAML::Key << "residual_tolerance" << YAML::Value << num(c.residual_tolerance);
    out << YAML::EndMap;

    out << YAML::Key << "estimates" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lambda_ric" << YAML::Value << (c.lambda_ric ? num(*c.lambda_ric) : std::string("auto"));
    out << YAML::Key << "fiber_samples" << YAML::Value << c.fiber_samples;
    out << YAML::EndMap;

    out << YAML::Key << "flow" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "function" << YAML::Value << to_string(c.flow_function);
    out << YAML::Key << "mode" << YAML::Value << c.flow_mode;
    out << YAML::Key << "frequency" << YAML::Value << c.flow_frequency;
    out << YAML::Key << "start" << YAML::Value << num(c.flow_start);
    out << YAML::Key << "time_factor" << YAML::Value << num(c.flow_time_factor);
    out << YAML::EndMap;

    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "epsilons" << YAML::Value;
    list(c.epsilons);
    out << YAML::Key << "max_spread" << YAML::Value << num(c.max_spread);
    out << YAML::EndMap;

    out << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << c.output;
    out << YAML::Key << "cache" << YAML::Value << c.cache;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& c) { return sha256_hex(to_yaml(c)); }

}  // namespace fiberlab
