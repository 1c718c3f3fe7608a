#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fiberlab/manifold.hpp"

using namespace fiberlab;

namespace {

FamilySpec flat(double eps, int base = 32, int fiber = 16) {
    FamilySpec s;
    s.kind = FamilyKind::FlatProductTorus;
    s.epsilon = eps;
    s.resolution = {base, fiber};
    return s;
}

}  // namespace

TEST(Family, FlatVolumeIsEpsilon) {
    const auto M = build_family(flat(0.1));
    EXPECT_NEAR(M.total_volume(), 0.1, 1e-14);
    EXPECT_EQ(M.dim(), 2);
}

TEST(Family, WarpedVolumeMatchesIntegral) {
    FamilySpec s = flat(0.2, 64);
    s.kind = FamilyKind::WarpedTorus;
    s.delta = 0.3;
    const auto M = build_family(s);
    // ∫ ε w(x) dx over one period = ε; the trapezoid rule is exact for sin.
    EXPECT_NEAR(M.total_volume(), 0.2, 1e-13);
}

TEST(Family, TwistedDeterminantIsEpsilonSquared) {
    FamilySpec s = flat(0.1);
    s.kind = FamilyKind::TwistedTorus3;
    s.base_dim = 2;
    s.twist = 0.7;
    const auto M = build_family(s);
    for (std::size_t i = 0; i < M.size(); i += 97) EXPECT_NEAR(M.volume_element(i), 0.1, 1e-14);
}

TEST(Family, FiberUnderResolvedIsRejected) {
    FamilySpec s = flat(0.1, 32, 8);
    try {
        build_family(s);
        FAIL();
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("fiber under-resolved"), std::string::npos);
    }
}

TEST(Family, RejectsBadParameters) {
    FamilySpec s = flat(0.0);
    EXPECT_THROW(build_family(s), PreconditionError);
    s = flat(0.1);
    s.kind = FamilyKind::WarpedTorus;
    s.delta = 1.2;
    EXPECT_THROW(build_family(s), PreconditionError);
    EXPECT_THROW(family_kind_from_string("klein-bottle"), PreconditionError);
}

TEST(Family, MetricIsSymmetricPositiveDefinite) {
    FamilySpec s = flat(0.05);
    s.kind = FamilyKind::TwistedTorus3;
    s.base_dim = 2;
    s.twist = 1.5;
    const auto M = build_family(s);
    for (std::size_t i = 0; i < M.size(); i += 31) {
        const SmallMat& g = M.metric(i);
        EXPECT_LT((g - g.transpose()).norm(), 1e-15);
        EXPECT_GT(g.determinant(), 0.0);
    }
}

TEST(Christoffel, AnalyticMatchesNodeDifferences) {
    FamilySpec s = flat(0.3, 256);
    s.kind = FamilyKind::WarpedTorus;
    s.delta = 0.4;
    const auto M = build_family(s);
    for (std::size_t i = 0; i < M.size(); i += 53) {
        const auto a = M.christoffel(i);
        const auto f = M.christoffel_fd(i);
        for (int c = 0; c < 2; ++c) EXPECT_LT((a[c] - f[c]).norm(), 2e-3);
    }
}

TEST(Christoffel, WarpedClosedForm) {
    // Γ^x_yy = -ε² w w', Γ^y_xy = w'/w.
    FamilySpec s = flat(0.3, 64);
    s.kind = FamilyKind::WarpedTorus;
    s.delta = 0.4;
    const auto M = build_family(s);
    const double x = 0.3;
    const double w = 1 + 0.4 * std::sin(2 * std::numbers::pi * x);
    const double dw = 0.4 * 2 * std::numbers::pi * std::cos(2 * std::numbers::pi * x);
    const double pt[2] = {x, 0.1};
    const auto g = M.model()->christoffel(pt);
    EXPECT_NEAR(g[0](1, 1), -0.09 * w * dw, 1e-13);
    EXPECT_NEAR(g[1](0, 1), dw / w, 1e-13);
}

TEST(Ricci, FlatIsZeroWarpedIsPositive) {
    EXPECT_EQ(ricci_lower_parameter(build_family(flat(0.1))), 0.0);
    FamilySpec s = flat(0.1, 64);
    s.kind = FamilyKind::WarpedTorus;
    s.delta = 0.3;
    // Gaussian curvature of the warped product is -w''/w, most negative where w''/w peaks.
    const double expect = 0.3 * 4 * std::numbers::pi * std::numbers::pi / 0.7;
    EXPECT_NEAR(ricci_lower_parameter(build_family(s)), expect, 1e-3 * expect);
}

TEST(Geodesic, FlatBallRadiusAndVolume) {
    FamilySpec s = flat(1.0, 128, 128);
    const auto M = build_family(s);
    const double p[2] = {0.5, 0.5};
    const auto ball = geodesic_ball(M, M.nearest_node(p), 0.25);
    EXPECT_NEAR(ball.volume, std::numbers::pi * 0.0625, 0.06 * std::numbers::pi * 0.0625);
    for (std::size_t i : ball.members) {
        const SmallVec x = M.position(i);
        EXPECT_LE(std::hypot(x(0) - 0.5, x(1) - 0.5), 0.25 + 1e-12);
    }
    EXPECT_FALSE(ball.boundary.empty());
}

TEST(Geodesic, CutLocusIsRejected) {
    const auto M = build_family(flat(0.1));
    EXPECT_THROW(geodesic_ball(M, 0, 0.5), PreconditionError);
}

TEST(Geodesic, FiberDistanceScalesWithEpsilon) {
    const auto M = build_family(flat(0.1, 32, 32));
    const std::size_t src[1] = {0};
    const auto d = graph_distance(M, src, {}, 1.0);
    const int ij[2] = {0, 16};
    EXPECT_NEAR(d[M.grid().index(ij)], 0.05, 1e-12);
}
