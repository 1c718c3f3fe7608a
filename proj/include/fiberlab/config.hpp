#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fiberlab/manifold.hpp"

namespace fiberlab {

enum class FlowFunction { FiberSine, Eigenmode };

struct ExperimentConfig {
    FamilySpec family;

    // Ball centre in base chart coordinates (ambient coordinates on meshes) and r.
    std::vector<double> center = {0.5};
    double radius = 0.25;

    int eigen_count = 10;
    std::optional<double> theta_max;

    double lambda_min = 1e-6;       // regularity threshold, relative to the median of Λ
    double level_tolerance = 1e-8;  // fiber tracing
    double dt_factor = 0.04;        // dt · sup|∇X| for the fiber flow
    double residual_tolerance = 1e-6;

    std::optional<double> lambda_ric;  // absent: measured from the analytic metric
    int fiber_samples = 9;

    FlowFunction flow_function = FlowFunction::FiberSine;
    int flow_mode = 1;
    int flow_frequency = 1;
    double flow_start = 0.05;  // fiber coordinate of the starting node
    double flow_time_factor = 10.0;

    std::vector<double> epsilons;
    double max_spread = 10.0;

    std::string output = "out";
    bool cache = true;
    std::uint64_t seed = 0x5eedf1b3ULL;

    void validate() const;
};

/// Parse a YAML config; `source` names the text in error messages.  Unknown
/// keys and malformed values raise ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Canonical YAML; parse_config(to_yaml(c)) reproduces c exactly.
std::string to_yaml(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);

std::string to_string(FlowFunction f);

class ConfigError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

}  // namespace fiberlab
