#include <cmath>

#include "fiberlab/interpolation.hpp"

namespace fiberlab {

GridInterpolator::GridInterpolator(const DiscreteManifold& M) : M_(M) {
    if (!M.is_grid()) throw PreconditionError("interpolation needs a grid chart");
}

GridInterpolator::Cell GridInterpolator::locate(std::span<const double> x) const {
    const auto& G = M_.grid();
    const int m = G.dim();
    std::array<int, 3> base{0, 0, 0};
    std::array<double, 3> t{0, 0, 0};
    for (int a = 0; a < m; ++a) {
        const double s = x[a] / G.spacing(a);
        const double fl = std::floor(s);
        base[a] = static_cast<int>(fl);
        t[a] = s - fl;
    }
    Cell c;
    c.corners = 1 << m;
    for (int corner = 0; corner < c.corners; ++corner) {
        std::array<int, 3> idx = base;
        double w = 1.0;
        std::array<double, 3> dw{1.0, 1.0, 1.0};
        for (int a = 0; a < m; ++a) {
            const bool hi = (corner >> a) & 1;
            idx[a] += hi;
            const double fa = hi ? t[a] : 1.0 - t[a];
            const double da = (hi ? 1.0 : -1.0) / G.spacing(a);
            w *= fa;
            for (int b = 0; b < m; ++b) dw[b] *= (b == a) ? da : fa;
        }
        c.node[corner] = G.index(std::span<const int>(idx.data(), static_cast<std::size_t>(m)));
        c.weight[corner] = w;
        c.dweight[corner] = dw;
    }
    return c;
}

double GridInterpolator::value(const ScalarField& f, std::span<const double> x) const {
    const Cell c = locate(x);
    double v = 0.0;
    for (int k = 0; k < c.corners; ++k) v += c.weight[k] * f(static_cast<Eigen::Index>(c.node[k]));
    return v;
}

double GridInterpolator::value_and_partials(const ScalarField& f, std::span<const double> x, SmallVec& partials) const {
    const Cell c = locate(x);
    const int m = M_.dim();
    partials = SmallVec::Zero(m);
    double v = 0.0;
    for (int k = 0; k < c.corners; ++k) {
        const double fk = f(static_cast<Eigen::Index>(c.node[k]));
        v += c.weight[k] * fk;
        for (int a = 0; a < m; ++a) partials(a) += c.dweight[k][a] * fk;
    }
    return v;
}

SmallVec GridInterpolator::vector(const VectorField& X, std::span<const double> x) const {
    const Cell c = locate(x);
    SmallVec v = SmallVec::Zero(X.dim());
    for (int k = 0; k < c.corners; ++k) v += c.weight[k] * X.at(c.node[k]);
    return v;
}

bool GridInterpolator::inside(const NodeMask& mask, std::span<const double> x) const {
    const Cell c = locate(x);
    for (int k = 0; k < c.corners; ++k)
        if (!mask[c.node[k]]) return false;
    return true;
}

std::vector<std::size_t> GridInterpolator::corners(std::span<const double> x) const {
    const Cell c = locate(x);
    return {c.node.begin(), c.node.begin() + c.corners};
}

}  // namespace fiberlab
