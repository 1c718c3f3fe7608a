#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "fiberlab/fiber.hpp"
#include "fixtures.hpp"

using namespace fiberlab;

namespace {

constexpr double kPi = std::numbers::pi;

DiscreteManifold torus2(FamilyKind kind, double eps, double delta, int base, int fiber) {
    FamilySpec s;
    s.kind = kind;
    s.epsilon = eps;
    s.delta = delta;
    s.resolution = {base, fiber};
    return build_family(s);
}

struct Setup {
    SplittingMap phi;
    RegularMask reg;
};

// Φ = x on the band |x − 0.5| < 0.45.
Setup base_coordinate(const DiscreteManifold& M) {
    NodeMask band(M.size(), 0);
    for (std::size_t i = 0; i < M.size(); ++i) band[i] = std::abs(M.position(i)(0) - 0.5) < 0.45;
    auto phi = explicit_map(M, {sample(M, [](const SmallVec& x) { return x(0); })}, band);
    const auto stats = jacobian_stats(M, phi);
    auto reg = classify_regular(M, stats, default_regularity_threshold(stats));
    return {std::move(phi), std::move(reg)};
}

SmallVec level(double v) {
    SmallVec l(1);
    l << v;
    return l;
}

std::size_t node_at(const DiscreteManifold& M, std::initializer_list<double> x) {
    return M.nearest_node(std::span<const double>(x.begin(), x.size()));
}

}  // namespace

TEST(Fiber, FlatCircleLength) {
    const auto M = torus2(FamilyKind::FlatProductTorus, 0.1, 0.0, 64, 32);
    const auto S = base_coordinate(M);
    const auto f = extract_fiber(M, S.phi, S.reg, level(0.4), node_at(M, {0.4, 0.0}));
    EXPECT_TRUE(f.closed);
    EXPECT_TRUE(f.regular);
    EXPECT_NEAR(f.length, 0.1, 1e-12);
    EXPECT_NEAR(f.diameter, 0.05, 1e-12);
    EXPECT_LE(f.level_error, 1e-8);
    for (const auto& x : f.points) EXPECT_NEAR(x(0), 0.4, 1e-8);
}

TEST(Fiber, WarpedCircleFollowsProfile) {
    const auto M = torus2(FamilyKind::WarpedTorus, 0.1, 0.3, 64, 32);
    const auto S = base_coordinate(M);
    for (double v : {0.25, 0.5, 0.71}) {
        const auto f = extract_fiber(M, S.phi, S.reg, level(v), node_at(M, {v, 0.0}));
        EXPECT_NEAR(f.length, 0.1 * warp_profile(0.3, v), 1e-10) << v;
    }
    EXPECT_NEAR(extract_fiber(M, S.phi, S.reg, level(0.25), node_at(M, {0.25, 0.0})).length, 0.13, 1e-10);
}

TEST(Fiber, LevelOutsideRangeRejected) {
    const auto M = torus2(FamilyKind::FlatProductTorus, 0.1, 0.0, 64, 32);
    const auto S = base_coordinate(M);
    EXPECT_THROW(extract_fiber(M, S.phi, S.reg, level(2.0), node_at(M, {0.5, 0.0})), PreconditionError);
    SmallVec two(2);
    two << 0.4, 0.1;
    EXPECT_THROW(extract_fiber(M, S.phi, S.reg, two, node_at(M, {0.4, 0.0})), PreconditionError);
    EXPECT_THROW(extract_fiber(M, S.phi, S.reg, level(0.5), node_at(M, {0.99, 0.0})), PreconditionError);
}

TEST(Fiber, EpsilonProxyExamples) {
    {
        const auto M = torus2(FamilyKind::FlatProductTorus, 0.1, 0.0, 64, 32);
        const auto S = base_coordinate(M);
        const auto e = epsilon_proxy(M, geodesic_ball(M, node_at(M, {0.5, 0.0}), 0.25), S.phi, S.reg);
        EXPECT_NEAR(e.epsilon_hat, 0.1, 1e-12);
        EXPECT_EQ(e.fibers.size(), 9u);
    }
    {
        const auto M = torus2(FamilyKind::FlatProductTorus, 1.0, 0.0, 64, 64);
        const auto S = base_coordinate(M);
        const auto e = epsilon_proxy(M, geodesic_ball(M, node_at(M, {0.5, 0.0}), 0.25), S.phi, S.reg);
        EXPECT_NEAR(e.epsilon_hat, 1.0, 1e-12);
    }
    {
        // The sampled level nearest the widest fiber (x = 0.25) is 0.253125.
        const auto M = torus2(FamilyKind::WarpedTorus, 0.1, 0.3, 64, 32);
        const auto S = base_coordinate(M);
        const auto e = epsilon_proxy(M, geodesic_ball(M, node_at(M, {0.3125, 0.0}), 0.25), S.phi, S.reg);
        EXPECT_NEAR(e.epsilon_hat, 0.1 * warp_profile(0.3, 0.253125), 1e-10);
        EXPECT_NEAR(e.epsilon_hat, 0.13, 1e-4);
        EXPECT_THROW(epsilon_proxy(M, geodesic_ball(M, node_at(M, {0.2, 0.0}), 0.25), S.phi, S.reg),
                     PreconditionError);
    }
    const auto M = torus2(FamilyKind::FlatProductTorus, 0.1, 0.0, 64, 32);
    const auto S = base_coordinate(M);
    EXPECT_THROW(epsilon_proxy(M, geodesic_ball(M, node_at(M, {0.5, 0.0}), 0.25), S.phi, S.reg, 4),
                 PreconditionError);
}

TEST(Fiber, PolylineLength) {
    const auto M = torus2(FamilyKind::FlatProductTorus, 0.5, 0.0, 16, 16);
    SmallVec a(2), b(2), c(2);
    a << 0.1, 0.1;
    b << 0.4, 0.1;
    c << 0.4, 0.5;
    EXPECT_NEAR(polyline_length(M, {a, b, c}, false), 0.3 + 0.5 * 0.4, 1e-14);
    EXPECT_NEAR(polyline_length(M, {a, b, c}, true), 0.3 + 0.2 + std::hypot(0.3, 0.2), 1e-14);
}

TEST(Fiber, TwistedContinuationCloses) {
    FamilySpec s;
    s.kind = FamilyKind::TwistedTorus3;
    s.base_dim = 2;
    s.epsilon = 0.2;
    s.twist = 0.3;
    s.resolution = {24, 16};
    const auto M = build_family(s);
    NodeMask box(M.size(), 0);
    for (std::size_t i = 0; i < M.size(); ++i) {
        const SmallVec x = M.position(i);
        box[i] = std::abs(x(0) - 0.5) < 0.4 && std::abs(x(1) - 0.5) < 0.4;
    }
    const auto phi = explicit_map(M, {sample(M, [](const SmallVec& x) { return x(0); }),
                                      sample(M, [](const SmallVec& x) { return x(1); })},
                                  box);
    const auto stats = jacobian_stats(M, phi);
    const auto reg = classify_regular(M, stats, default_regularity_threshold(stats));
    SmallVec lv(2);
    lv << 0.45, 0.6;
    const auto f = extract_fiber(M, phi, reg, lv, node_at(M, {0.45, 0.6, 0.0}));
    EXPECT_TRUE(f.closed);
    // The fiber is the y-circle, of length ε whatever the twist.
    EXPECT_NEAR(f.length, 0.2, 1e-6);
    EXPECT_LE(f.level_error, 1e-8);

    const auto flat_phi = explicit_map(M, {sample(M, [](const SmallVec& x) { return x(0); })}, box);
    const auto fs = jacobian_stats(M, flat_phi);
    const auto freg = classify_regular(M, fs, default_regularity_threshold(fs));
    EXPECT_THROW(extract_fiber(M, flat_phi, freg, level(0.45), node_at(M, {0.45, 0.6, 0.0})), PreconditionError);
}

TEST(Fiber, MarchingTrianglesOnMesh) {
    const auto dir = std::filesystem::temp_directory_path() / "fiberlab_fiber";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "torus32.off").string();
    fixtures::write_torus_off(path, 32);
    const auto M = build_family(fixtures::mesh_spec(path));
    const auto phi = explicit_map(M, {sample(M, [](const SmallVec& x) { return x(2); })});
    const auto stats = jacobian_stats(M, phi);
    const auto reg = classify_regular(M, stats, default_regularity_threshold(stats));
    // Z = 0.2 cuts two horizontal circles of radius 1 ± 0.4 cos(π/6).
    const double c = 0.4 * std::cos(kPi / 6);
    for (double R : {1 + c, 1 - c}) {
        const auto f = extract_fiber(M, phi, reg, level(0.2), node_at(M, {R, 0.0, 0.2}));
        EXPECT_TRUE(f.closed);
        EXPECT_NEAR(f.length, 2 * kPi * R, 0.01 * 2 * kPi * R) << R;
        for (const auto& x : f.points) EXPECT_NEAR(x(2), 0.2, 1e-10);
    }
}
