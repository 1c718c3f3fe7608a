#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fiberlab/flow.hpp"
#include "fiberlab/spectral.hpp"

namespace fiberlab {

struct Constant {
    std::string name;
    double value = 0.0;
    std::string provenance;  // "measured", "formula" or "input"
};

struct EstimateReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs / lhs, +inf when lhs = 0
    bool pass = false;
    std::vector<Constant> constants;
    std::vector<std::string> notes;

    void add(const std::string& key, double value, const std::string& provenance);
    double constant(const std::string& key) const;
    /// Sets margin and pass from lhs and rhs.
    void finish();
};

/// u together with its discrete derivatives.
struct FunctionData {
    ScalarField u;
    VectorField grad;
    TensorField hess;
    ScalarField laplacian;  // Δu with Δ = -div grad
};

FunctionData differentiate(const DiscreteManifold& M, const LaplaceOperator& L, const ScalarField& u);

struct CutoffFunction {
    ScalarField phi;
    ScalarField profile;   // r|∇φ| + r²|Δφ| per node
    double r = 0.0;
    double inner_radius = 0.0;
    double outer_radius = 0.0;
    double C_ctf_measured = 0.0;  // half the sup of the profile
    double C_ctf = 0.0;           // max(measured, 1)
};

/// φ = S((2r − d)/(2r − r(1 + 4ε̂))) with the quintic smoothstep S, d the
/// graph distance from the centre.  Requires r(1 + 4ε̂) < 2r.
CutoffFunction build_cutoff(const DiscreteManifold& M, const LaplaceOperator& L, const GeodesicBall& ball_r,
                            const GeodesicBall& ball_2r, double epsilon_hat);

/// Cutoff-tested Weitzenböck bound (intermediate, over B(p,2r)) and the final
/// form ‖Hess u‖_{L̄²(B(p,r))} ≤ 4mC_ctf K r⁻² + 2‖Δu‖_{L̄²(B(p,2r))}.
std::vector<EstimateReport> hessian_l2_bound(const DiscreteManifold& M, const FunctionData& f,
                                             const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                             const CutoffFunction& cutoff, double lambda_ric);

/// Measured C₀ of the integral splitting hypotheses over B(p,4r):
/// max(sup max_a |∇Φᵃ| − 1, (r² Σ_b fint |Hess Φᵇ|²)^{1/2}).
double splitting_c0(const DiscreteManifold& M, const SplittingMap& phi, const JacobianStats& stats,
                    const GeodesicBall& ball_4r, double r);

/// K² = sup_{B(p,2r)}(u² + r²|∇u|²) + r⁴ fint_{B(p,2r)} |Hess u|².
double sobolev_k(const DiscreteManifold& M, const FunctionData& f, const GeodesicBall& ball_2r, double r);

/// r² Σ_{regular nodes of B(p,r)} |∇ᵀu|² |J_k| w  ≤  8k²(1+C₀)^{k−1} |B(p,r)| K² (√ε̂ + C₀).
EstimateReport interior_l2_report(const DiscreteManifold& M, const FunctionData& f, const SplittingMap& phi,
                                  const JacobianStats& stats, const RegularMask& reg, const TangentialField& field,
                                  const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                  const GeodesicBall& ball_4r, double epsilon_hat);

double interior_c1(int k, double C0);
/// 48 m k² C_ctf 2^k |B(p,2r)| / |B(p,r)|.
double theorem_c2(int m, int k, double C_ctf, double volume_2r, double volume_r);

struct TangentialNorms {
    double unweighted = 0.0;       // ‖∇ᵀu‖_{L̄²} over regular nodes of the ball
    double weighted = 0.0;         // (fint |∇ᵀu|² |J_k|)^{1/2} over the same nodes
    double singular_fraction = 0.0;
};

TangentialNorms tangential_norms(const DiscreteManifold& M, const JacobianStats& stats, const RegularMask& reg,
                                 const TangentialField& field, const GeodesicBall& ball);

/// r² fint|∇ᵀu|²|J_k| ≤ C₂(√ε̂ + Ψ)(K² + ‖Δu‖_{L̄²(B(p,2r))} K r²), K = sup_{B(p,2r)}(|u| + r|∇u|).
EstimateReport tangential_l2_report(const DiscreteManifold& M, const FunctionData& f, const JacobianStats& stats,
                                    const RegularMask& reg, const TangentialField& field,
                                    const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                    const CutoffFunction& cutoff, double epsilon_hat, double psi);

/// r‖∇ᵀu‖_{L̄²(B(p,r))} ≤ C₂(1 + C_CY) ‖u‖_{L^∞(B(p,2r))} (√ε̂ + Ψ) for an eigenpair.
EstimateReport main_theorem_report(const DiscreteManifold& M, const EigenPair& eig, const FunctionData& f,
                                   const JacobianStats& stats, const RegularMask& reg, const TangentialField& field,
                                   const GeodesicBall& ball_r, const GeodesicBall& ball_2r,
                                   const CutoffFunction& cutoff, double epsilon_hat, double psi,
                                   double residual_tolerance = 1e-6);

/// |∫ u|J_k|∘γ_t − ∫ u|J_k|| over regular nodes of B(p,r) (every `stride`-th node)
/// against 4k(1+C₀)^k |B(p,r)| K ε̂.  Grids only.
EstimateReport change_integral_check(const DiscreteManifold& M, const FunctionData& f, const SplittingMap& phi,
                                     const JacobianStats& stats, const RegularMask& reg,
                                     const TangentialField& field, const GeodesicBall& ball_r,
                                     const GeodesicBall& ball_2r, const GeodesicBall& ball_4r, double epsilon_hat,
                                     double time, double dt, std::size_t stride = 1);

struct SweepRow {
    double epsilon = 0.0;
    int mode = 0;
    double theta = 0.0;
    double epsilon_hat = 0.0;
    double psi = 0.0;
    double K = 0.0;
    double u_sup = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool pass = false;

    /// lhs / (‖u‖_∞ (√ε̂ + Ψ)).
    double ratio() const;
};

struct SweepSummary {
    std::vector<SweepRow> rows;  // sorted by ε, then mode
    bool all_pass = false;
    std::optional<double> exponent;  // log-log slope of lhs against ε̂, absent when degenerate
    double ratio_spread = 0.0;       // worst max/min of ratio() across ε, per mode
    bool spread_degenerate = false;  // some mode has lhs at round-off level on every ε
    bool spread_pass = false;
    std::vector<std::string> notes;
};

/// Sorts rows, fits the scaling exponent and evaluates the bounded-ratio check
/// (spread ≤ `max_spread`).  Needs at least three distinct ε.
SweepSummary summarize_sweep(std::vector<SweepRow> rows, double max_spread = 10.0, double degenerate_lhs = 1e-10);

/// Least-squares slope of log y against log x.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fiberlab
