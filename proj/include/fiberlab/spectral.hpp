#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fiberlab/manifold.hpp"
#include "fiberlab/operators.hpp"

namespace fiberlab {

/// Δu = θu with ‖u‖_{L̄²} = 1 over the domain the pair was computed on.
struct EigenPair {
    double theta = 0.0;
    ScalarField u;
    double residual = 0.0;
};

struct EigenOptions {
    std::uint64_t seed = 0x5eedf1b3ULL;
    double shift = -1.0;
    int max_iterations = 1000;
    double tolerance = 1e-8;  // residual ≤ tolerance·(1 + θ)
    int min_extra = 8;        // guard vectors beyond the requested count
};

/// Lowest `count` eigenpairs of the closed manifold, or, with θ_max, every
/// pair with θ ≤ θ_max (count is then a starting block size).
std::vector<EigenPair> eigenpairs(const DiscreteManifold& M, int count,
                                  std::optional<double> theta_max = std::nullopt,
                                  const EigenOptions& opt = {});

/// Dirichlet eigenpairs on a geodesic ball; boundary nodes are held at zero and
/// u is normalized over the ball.
std::vector<EigenPair> dirichlet_eigenpairs(const DiscreteManifold& M, const GeodesicBall& ball, int count,
                                            const EigenOptions& opt = {});

/// Groups of indices whose eigenvalues agree to |θᵢ − θⱼ| < rel·θ.
std::vector<std::vector<int>> eigen_clusters(const std::vector<EigenPair>& pairs, double rel = 1e-6);

/// ‖Δu − θu‖_{L̄²} over all nodes.
double eigen_residual(const DiscreteManifold& M, const LaplaceOperator& L, const ScalarField& u, double theta);

/// r·sup_{B(p,r)}|∇u| / sup_{B(p,2r)}|u|.
double cheng_yau_ratio(const DiscreteManifold& M, const ScalarField& u, const GeodesicBall& ball);

/// K = sup_{B}(|u| + r|∇u|).
double c1_bound(const DiscreteManifold& M, const ScalarField& u, const GeodesicBall& ball, double r);

// On-disk cache.  Layout (all integers and floats little-endian):
//   magic "FLEIGEN\0" | u32 version | u32 m | u32 n[3] | u64 nodes | u64 count
//   | 32-byte SHA-256 of the cache key | f64 theta[count] | f64 residual[count]
//   | f64 u[count][nodes] | 32-byte SHA-256 of everything before it.
std::string eigen_cache_key(const DiscreteManifold& M, int count, std::optional<double> theta_max);
void save_eigen_cache(const std::string& path, const DiscreteManifold& M, const std::string& key,
                      const std::vector<EigenPair>& pairs);
/// Empty when the file is missing, corrupted, or was written for another key.
std::optional<std::vector<EigenPair>> load_eigen_cache(const std::string& path, const DiscreteManifold& M,
                                                       const std::string& key);

}  // namespace fiberlab
