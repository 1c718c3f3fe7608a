#pragma once

#include <iosfwd>
#include <vector>

#include "fiberlab/fiber.hpp"
#include "fiberlab/splitting.hpp"

namespace fiberlab {

/// ∇u split into the part tangent to the fibers of Φ and its complement
/// spanned by the ∇Φᵃ.  Both parts are zero where `defined` is unset.
struct TangentialField {
    VectorField tangential;
    VectorField normal;
    VectorField grad;
    NodeMask defined;
};

TangentialField tangential_projection(const DiscreteManifold& M, const VectorField& grad_u,
                                      const JacobianStats& stats, const RegularMask& reg);
TangentialField tangential_projection(const DiscreteManifold& M, const ScalarField& u,
                                      const JacobianStats& stats, const RegularMask& reg);

/// sup over defined nodes of |∇X| for X = ∇ᵀu, the (1,1) tensor norm of the
/// centered-difference chart derivative.  Grids only.
double stability_measure(const DiscreteManifold& M, const TangentialField& field);

struct FlowOptions {
    double dt = 1e-5;
    double duration = 1.0;
    int sample_every = 1;
    double stability_limit = 0.1;  // dt * stability_measure must not exceed this
    int newton_iterations = 5;
    double newton_tolerance = 1e-10;
};

struct FlowTrajectory {
    std::size_t start = 0;
    std::vector<double> t;
    std::vector<SmallVec> x;         // unwrapped chart coordinates
    std::vector<double> u;
    std::vector<double> speed_sq;    // |∇ᵀu|² at γ(t)
    std::vector<double> drift;       // |Φ(γ(t)) − Φ(x0)|
};

/// Raised when the flow leaves the regular region or reprojection fails; carries
/// the samples integrated so far.
class FlowError : public Error {
public:
    FlowError(const std::string& what, FlowTrajectory partial) : Error(what), trajectory(std::move(partial)) {}
    FlowTrajectory trajectory;
};

/// RK4 for γ̇ = ∇ᵀu with multilinear field interpolation, each step followed by
/// Newton reprojection onto {Φ = Φ(x0)}.  Grids only.
FlowTrajectory integrate_flow(const DiscreteManifold& M, const SplittingMap& phi, const RegularMask& reg,
                              const ScalarField& u, const TangentialField& field, std::size_t x0,
                              const FlowOptions& opt);

struct FiberBoundReport {
    SmallVec level;
    int k = 0;
    double r = 0.0;
    double epsilon_hat = 0.0;
    double lambda = 0.0;
    double Lambda = 0.0;
    double C0 = 0.0;
    double K = 0.0;
    double delta0 = 0.0;
    double lhs = 0.0;   // r δ₀
    double rhs = 0.0;   // 2(1 + λ⁻¹√(Λk)C₀)^{1/2} K √ε̂
    double margin = 0.0;
    bool pass = false;
    bool counterexample = false;
    std::size_t fiber_nodes = 0;
    std::size_t neighbourhood_nodes = 0;

    /// Decay rate 2(1 + λ⁻¹√(Λk)C₀) K r⁻² of the squared tangential speed.
    double decay_rate() const;
};

/// Constants of the fiberwise a priori bound measured on the cell-corner nodes
/// of a traced fiber; K is taken over the graph-distance neighbourhood
/// B(fiber, 2ε̂r).  Grids only.
FiberBoundReport fiber_apriori_check(const DiscreteManifold& M, const FiberTrace& fiber, const SplittingMap& phi,
                                     const JacobianStats& stats, const RegularMask& reg,
                                     const TangentialField& field, const TensorField& hess_u,
                                     double epsilon_hat, double r);

struct ExponentialCheck {
    double rate = 0.0;
    double margin = 0.0;  // min over samples of |∇ᵀu|²(t) / (e^{-Ct} |∇ᵀu|²(0))
    bool pass = false;
};

ExponentialCheck verify_exponential_bound(const FlowTrajectory& traj, double rate, double tolerance = 1e-3);
ExponentialCheck verify_exponential_bound(const FlowTrajectory& traj, const FiberBoundReport& report,
                                          double tolerance = 1e-3);

/// Columns: t, x0..x{m-1}, u, speed_sq, drift.
void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj);

}  // namespace fiberlab
