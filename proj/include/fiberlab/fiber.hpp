#pragma once

#include <vector>

#include "fiberlab/splitting.hpp"

namespace fiberlab {

/// One connected level curve Φ = v̄, as an ordered polyline in unwrapped chart
/// coordinates (ambient coordinates on meshes).
struct FiberTrace {
    SmallVec level;
    std::vector<SmallVec> points;
    bool regular = false;
    bool closed = false;
    double length = 0.0;
    double diameter = 0.0;     // intrinsic: half the length of a closed curve
    double level_error = 0.0;  // max |Φ(sample) − v̄| under multilinear interpolation
};

struct FiberOptions {
    double step = 0.0;           // continuation step for curve fibers in 3D; 0 picks a grid-scaled default
    int max_steps = 200000;
    double level_tolerance = 1e-8;
};

/// Level curve of Φ through the level v̄, choosing the component nearest the
/// node `near`.  Supported for m − k = 1: marching squares / triangles when
/// m = 2, predictor–corrector continuation when m = 3.
FiberTrace extract_fiber(const DiscreteManifold& M, const SplittingMap& phi, const RegularMask& reg,
                         const SmallVec& level, std::size_t near, const FiberOptions& opt = {});

struct EpsilonEstimate {
    double epsilon_hat = 0.0;
    double max_diameter = 0.0;
    std::vector<FiberTrace> fibers;
};

/// ε̂ = max regular fiber diameter / (2r) over levels sampled in Φ(B(p,r)):
/// `samples` levels per axis (odd, so the centre level Φ(p) is included).
EpsilonEstimate epsilon_proxy(const DiscreteManifold& M, const GeodesicBall& ball, const SplittingMap& phi,
                              const RegularMask& reg, int samples = 9,
                              const FiberOptions& opt = {});

/// Metric length of a polyline in chart coordinates (metric at segment midpoints).
double polyline_length(const DiscreteManifold& M, const std::vector<SmallVec>& points, bool closed);

}  // namespace fiberlab
