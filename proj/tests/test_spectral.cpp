#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "fiberlab/spectral.hpp"

using namespace fiberlab;

namespace {

constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

FamilySpec flat(double eps, int base, int fiber) {
    FamilySpec s;
    s.kind = FamilyKind::FlatProductTorus;
    s.epsilon = eps;
    s.resolution = {base, fiber};
    return s;
}

// Closed-form spectrum 4π²(p² + q²/ε²) of the flat product torus, sorted.
std::vector<double> torus_spectrum(double eps, int count) {
    std::vector<double> v;
    for (int p = -12; p <= 12; ++p)
        for (int q = -12; q <= 12; ++q) v.push_back(kFourPi2 * (p * p + q * q / (eps * eps)));
    std::sort(v.begin(), v.end());
    v.resize(static_cast<std::size_t>(count));
    return v;
}

}  // namespace

TEST(Eigenpairs, FlatTorusLowModes) {
    const auto M = build_family(flat(0.1, 64, 16));
    const auto pairs = eigenpairs(M, 6);
    const auto exact = torus_spectrum(0.1, 6);
    ASSERT_EQ(pairs.size(), 6u);
    EXPECT_NEAR(pairs[0].theta, 0.0, 1e-8);
    for (int i = 1; i < 6; ++i) EXPECT_NEAR(pairs[i].theta / exact[i], 1.0, 1e-2) << i;
    EXPECT_NEAR(pairs[1].theta, pairs[2].theta, 1e-8 * pairs[1].theta);
}

TEST(Eigenpairs, ConstantGroundStateAndNormalization) {
    const auto M = build_family(flat(0.1, 32, 16));
    const auto pairs = eigenpairs(M, 3);
    const auto all = all_nodes(M);
    EXPECT_NEAR(pairs[0].u.maxCoeff(), pairs[0].u.minCoeff(), 1e-9);
    for (const auto& e : pairs) {
        EXPECT_NEAR(l2_average(M, e.u, all), 1.0, 1e-12);
        EXPECT_LE(e.residual, 1e-8 * (1 + e.theta));
    }
}

TEST(Eigenpairs, OrthogonalInWeightedInner) {
    FamilySpec s = flat(0.2, 64, 16);
    s.kind = FamilyKind::WarpedTorus;
    s.delta = 0.3;
    const auto M = build_family(s);
    const auto pairs = eigenpairs(M, 8);
    const double V = M.total_volume();
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t j = 0; j < pairs.size(); ++j) {
            const double ip = pairs[i].u.cwiseProduct(M.weights()).dot(pairs[j].u) / V;
            EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-8);
        }
    for (std::size_t i = 1; i < pairs.size(); ++i) EXPECT_LE(pairs[i - 1].theta, pairs[i].theta);
}

TEST(Eigenpairs, ResidualMatchesIndependentEvaluation) {
    FamilySpec s = flat(0.2, 64, 16);
    s.kind = FamilyKind::WarpedTorus;
    s.delta = 0.3;
    const auto M = build_family(s);
    const auto L = laplacian_matrix(M);
    for (const auto& e : eigenpairs(M, 5)) EXPECT_NEAR(eigen_residual(M, L, e.u, e.theta), e.residual, 1e-10);
}

TEST(Eigenpairs, ThetaMaxExcludesFiberModes) {
    const auto M = build_family(flat(0.1, 32, 16));
    const auto pairs = eigenpairs(M, 4, 100.0);
    // Base modes p = 0, ±1 only: 4π²·4 > 100.
    ASSERT_EQ(pairs.size(), 3u);
    for (const auto& e : pairs) EXPECT_LT(e.theta, 100.0);
}

TEST(Eigenpairs, Deterministic) {
    const auto M = build_family(flat(0.1, 32, 16));
    const auto a = eigenpairs(M, 5);
    const auto b = eigenpairs(M, 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].theta, b[i].theta);
        EXPECT_EQ(a[i].u, b[i].u);
    }
}

TEST(Eigenpairs, DirichletBallOnFlatSquare) {
    // First Dirichlet eigenvalue of a disc of radius R is j₀₁²/R².  Zero is
    // imposed on the outer node layer, so the error is O(h) and shrinks under refinement.
    const double j01 = 2.404825557695773;
    const double exact = j01 * j01 / 0.09;
    double prev = 0.0;
    for (int n : {64, 128}) {
        const auto M = build_family(flat(1.0, n, n));
        const double p[2] = {0.5, 0.5};
        const auto ball = geodesic_ball(M, M.nearest_node(p), 0.3);
        const auto pairs = dirichlet_eigenpairs(M, ball, 1);
        const double err = std::abs(pairs[0].theta - exact) / exact;
        EXPECT_LT(err, 0.2);
        if (prev > 0.0) EXPECT_LT(err, 0.7 * prev);
        prev = err;
        for (std::size_t i = 0; i < M.size(); ++i)
            if (!ball.contains(i)) EXPECT_EQ(pairs[0].u(static_cast<Eigen::Index>(i)), 0.0);
    }
}

TEST(Clusters, GroupsDegenerateEigenvalues) {
    std::vector<EigenPair> v(5);
    const double th[5] = {0.0, 39.4784176, 39.4784176 * (1 + 1e-9), 157.9, 157.9};
    for (int i = 0; i < 5; ++i) v[i].theta = th[i];
    const auto c = eigen_clusters(v);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[1].size(), 2u);
}

TEST(ChengYau, SineOracle) {
    FamilySpec s = flat(0.1, 128, 16);
    s.base_length = 2.0;
    const auto M = build_family(s);
    const ScalarField u = sample(M, [](const SmallVec& x) { return std::sin(2 * std::numbers::pi * x(0)); });
    const double p[2] = {0.0, 0.0};
    const auto ball = geodesic_ball(M, M.nearest_node(p), 0.25);
    EXPECT_NEAR(cheng_yau_ratio(M, u, ball), 0.25 * 2 * std::numbers::pi, 2e-3);
    const ScalarField one = ScalarField::Ones(static_cast<Eigen::Index>(M.size()));
    EXPECT_NEAR(cheng_yau_ratio(M, one, ball), 0.0, 1e-12);
    EXPECT_THROW(cheng_yau_ratio(M, ScalarField::Zero(static_cast<Eigen::Index>(M.size())), ball), PreconditionError);
}

TEST(EigenCache, RoundTripAndCorruption) {
    const auto M = build_family(flat(0.1, 32, 16));
    const auto pairs = eigenpairs(M, 4);
    const std::string key = eigen_cache_key(M, 4, std::nullopt);
    const auto path = (std::filesystem::temp_directory_path() / "fiberlab_cache_test.bin").string();
    save_eigen_cache(path, M, key, pairs);
    auto back = load_eigen_cache(path, M, key);
    ASSERT_TRUE(back.has_value());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ((*back)[i].theta, pairs[i].theta);
        EXPECT_EQ((*back)[i].u, pairs[i].u);
    }
    EXPECT_FALSE(load_eigen_cache(path, M, key + "x").has_value());
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(100);
        f.put('\x7f');
    }
    EXPECT_FALSE(load_eigen_cache(path, M, key).has_value());
    std::remove(path.c_str());
}
