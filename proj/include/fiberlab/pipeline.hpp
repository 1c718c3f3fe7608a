#pragma once

#include <string>
#include <vector>

#include "fiberlab/config.hpp"
#include "fiberlab/estimates.hpp"

namespace fiberlab {

/// Everything about one experiment point that does not depend on u.
struct PointSetup {
    ExperimentConfig config;
    DiscreteManifold M;
    LaplaceOperator L;
    std::size_t center = 0;
    double r = 0.0;
    GeodesicBall ball_r, ball_2r, ball_4r;
    SplittingMap phi;  // harmonic on B(p, 5r)
    JacobianStats stats;
    RegularMask reg;
    EpsilonEstimate fibers;
    Certificate certificate;
    CutoffFunction cutoff;
    double lambda_ric = 0.0;
};

/// Builds the point for config.family.epsilon.
PointSetup prepare_point(const ExperimentConfig& config);

/// Eigenpairs per the spectrum section, read from or written to `cache_dir`
/// when it is non-empty.
std::vector<EigenPair> point_spectrum(const DiscreteManifold& M, const ExperimentConfig& config,
                                      const std::string& cache_dir);

struct ModeResult {
    int index = 0;
    double theta = 0.0;
    double residual = 0.0;
    std::vector<EstimateReport> reports;
    std::vector<FiberBoundReport> fibers;
    SweepRow row;

    bool pass() const;
};

struct PointResult {
    double epsilon = 0.0;
    Certificate certificate;
    double singular_fraction = 0.0;
    double lambda_ric = 0.0;
    std::vector<ModeResult> modes;
    std::vector<std::string> notes;

    bool pass() const;
};

/// All estimate reports for the non-constant eigenmodes (θ ≤ θ_max when set).
PointResult verify_point(const PointSetup& setup, const std::vector<EigenPair>& pairs);

struct FlowResult {
    FlowTrajectory trajectory;
    FiberBoundReport bound;
    ExponentialCheck exponential;
    double dt = 0.0;
    double duration = 0.0;
    double max_drift = 0.0;
    bool monotone = false;

    bool pass() const;
};

/// Fiber flow from the node nearest (centre, flow.start) for the configured u.
FlowResult run_flow(const PointSetup& setup, const std::vector<EigenPair>& pairs);

struct SweepResult {
    std::vector<PointResult> points;  // in ε order of the config
    SweepSummary summary;

    bool pass() const;
};

/// Runs every ε of the sweep on up to `jobs` threads; point i writes into
/// `out_dir`/points/eps_<ε>/.  Results are merged in config order.
SweepResult run_sweep(const ExperimentConfig& config, const std::string& out_dir, int jobs);

/// Directory name of a sweep point.
std::string point_directory(double epsilon);

}  // namespace fiberlab
