#include "fiberlab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace fiberlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class FlatProductModel final : public MetricModel {
public:
    FlatProductModel(int k, double eps) : k_(k), eps_(eps) {}
    int dim() const override { return k_ + 1; }
    SmallMat metric(std::span<const double>) const override {
        SmallMat g = SmallMat::Identity(dim(), dim());
        g(k_, k_) = eps_ * eps_;
        return g;
    }
    SmallMat metric_derivative(std::span<const double>, int) const override {
        return SmallMat::Zero(dim(), dim());
    }

private:
    int k_;
    double eps_;
};

// g = dx^2 + eps^2 w(x)^2 dy^2
class WarpedModel final : public MetricModel {
public:
    WarpedModel(double eps, double delta) : eps_(eps), delta_(delta) {}
    int dim() const override { return 2; }
    SmallMat metric(std::span<const double> x) const override {
        const double w = warp_profile(delta_, x[0]);
        SmallMat g = SmallMat::Zero(2, 2);
        g(0, 0) = 1.0;
        g(1, 1) = eps_ * eps_ * w * w;
        return g;
    }
    SmallMat metric_derivative(std::span<const double> x, int axis) const override {
        SmallMat d = SmallMat::Zero(2, 2);
        if (axis == 0) {
            const double w = warp_profile(delta_, x[0]);
            const double dw = delta_ * kTwoPi * std::cos(kTwoPi * x[0]);
            d(1, 1) = 2.0 * eps_ * eps_ * w * dw;
        }
        return d;
    }

private:
    double eps_;
    double delta_;
};

// g = dx1^2 + dx2^2 + eps^2 (dy + A(x1) dx2)^2,  A = a sin(2π x1).
// The fibre circles keep constant length eps; the connection A twists them.
class TwistedModel final : public MetricModel {
public:
    TwistedModel(double eps, double twist) : eps_(eps), twist_(twist) {}
    int dim() const override { return 3; }
    SmallMat metric(std::span<const double> x) const override {
        const double a = twist_ * std::sin(kTwoPi * x[0]);
        const double e2 = eps_ * eps_;
        SmallMat g = SmallMat::Zero(3, 3);
        g(0, 0) = 1.0;
        g(1, 1) = 1.0 + e2 * a * a;
        g(1, 2) = g(2, 1) = e2 * a;
        g(2, 2) = e2;
        return g;
    }
    SmallMat metric_derivative(std::span<const double> x, int axis) const override {
        SmallMat d = SmallMat::Zero(3, 3);
        if (axis == 0) {
            const double a = twist_ * std::sin(kTwoPi * x[0]);
            const double da = twist_ * kTwoPi * std::cos(kTwoPi * x[0]);
            const double e2 = eps_ * eps_;
            d(1, 1) = 2.0 * e2 * a * da;
            d(1, 2) = d(2, 1) = e2 * da;
        }
        return d;
    }

private:
    double eps_;
    double twist_;
};

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12 && v > 0.5; }

}  // namespace

std::string to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::FlatProductTorus: return "flat-product-torus";
        case FamilyKind::WarpedTorus: return "warped-torus";
        case FamilyKind::TwistedTorus3: return "twisted-3-torus";
        case FamilyKind::ImportedMesh: return "imported-mesh";
    }
    return "unknown";
}

FamilyKind family_kind_from_string(const std::string& name) {
    for (auto k : {FamilyKind::FlatProductTorus, FamilyKind::WarpedTorus,
                   FamilyKind::TwistedTorus3, FamilyKind::ImportedMesh})
        if (to_string(k) == name) return k;
    throw PreconditionError("unknown family kind '" + name + "'");
}

double warp_profile(double delta, double x) { return 1.0 + delta * std::sin(kTwoPi * x); }

int FamilySpec::dim() const {
    switch (kind) {
        case FamilyKind::FlatProductTorus: return base_dim + 1;
        case FamilyKind::WarpedTorus: return 2;
        case FamilyKind::TwistedTorus3: return 3;
        case FamilyKind::ImportedMesh: return 2;
    }
    return 0;
}

void FamilySpec::validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw PreconditionError("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
    if (kind == FamilyKind::ImportedMesh) {
        if (mesh_path.empty()) throw PreconditionError("imported-mesh requires mesh_path");
        if (base_dim != 1) throw PreconditionError("imported meshes support base_dim = 1 only");
        return;
    }
    if (resolution.fiber_nodes < 16)
        throw PreconditionError("fiber under-resolved: " + std::to_string(resolution.fiber_nodes) +
                                " nodes along the fiber, need at least 16");
    if (resolution.base_per_unit < 4)
        throw PreconditionError("base resolution must be at least 4 nodes per unit length");
    if (!(base_length > 0.0)) throw PreconditionError("base_length must be positive");
    switch (kind) {
        case FamilyKind::FlatProductTorus:
            if (base_dim < 1 || base_dim > 2)
                throw PreconditionError("flat-product-torus supports base_dim 1 or 2");
            break;
        case FamilyKind::WarpedTorus:
            if (base_dim != 1) throw PreconditionError("warped-torus has base_dim 1");
            if (!(std::abs(delta) < 1.0)) throw PreconditionError("warp amplitude must satisfy |delta| < 1");
            if (!is_integer(base_length))
                throw PreconditionError("warped-torus needs an integer base_length (warp period is 1)");
            break;
        case FamilyKind::TwistedTorus3:
            if (base_dim != 2) throw PreconditionError("twisted-3-torus has base_dim 2");
            if (!is_integer(base_length))
                throw PreconditionError("twisted-3-torus needs an integer base_length");
            break;
        case FamilyKind::ImportedMesh: break;
    }
    if (base_dim >= dim()) throw PreconditionError("base dimension must be below manifold dimension");
}

std::string FamilySpec::canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind) << ";k=" << base_dim << ";eps=" << epsilon << ";delta=" << delta
       << ";twist=" << twist << ";L=" << base_length << ";res=" << resolution.base_per_unit << "x"
       << resolution.fiber_nodes << ";mesh=" << mesh_path;
    return os.str();
}

std::array<SmallMat, 3> christoffel_from_derivatives(const SmallMat& g,
                                                     const std::array<SmallMat, 3>& dg) {
    const int m = static_cast<int>(g.rows());
    const SmallMat ginv = g.inverse();
    std::array<SmallMat, 3> gamma;
    for (int c = 0; c < m; ++c) gamma[c] = SmallMat::Zero(m, m);
    // Γ^c_ab = ½ g^{cl} (∂_a g_lb + ∂_b g_la - ∂_l g_ab)
    for (int c = 0; c < m; ++c)
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                double s = 0.0;
                for (int l = 0; l < m; ++l)
                    s += ginv(c, l) * (dg[a](l, b) + dg[b](l, a) - dg[l](a, b));
                gamma[c](a, b) = gamma[c](b, a) = 0.5 * s;
            }
    return gamma;
}

std::array<SmallMat, 3> MetricModel::christoffel(std::span<const double> x) const {
    const int m = dim();
    std::array<SmallMat, 3> dg;
    for (int l = 0; l < m; ++l) dg[l] = metric_derivative(x, l);
    return christoffel_from_derivatives(metric(x), dg);
}

std::shared_ptr<const MetricModel> make_metric_model(const FamilySpec& spec) {
    switch (spec.kind) {
        case FamilyKind::FlatProductTorus:
            return std::make_shared<FlatProductModel>(spec.base_dim, spec.epsilon);
        case FamilyKind::WarpedTorus: return std::make_shared<WarpedModel>(spec.epsilon, spec.delta);
        case FamilyKind::TwistedTorus3: return std::make_shared<TwistedModel>(spec.epsilon, spec.twist);
        case FamilyKind::ImportedMesh: return nullptr;
    }
    return nullptr;
}

// --- PeriodicGrid -----------------------------------------------------------

std::size_t PeriodicGrid::size() const {
    std::size_t s = 1;
    for (int v : n) s *= static_cast<std::size_t>(v);
    return s;
}

double PeriodicGrid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= spacing(a);
    return v;
}

std::size_t PeriodicGrid::index(std::span<const int> ijk) const {
    std::size_t idx = 0;
    for (int a = dim() - 1; a >= 0; --a) {
        int v = ijk[a] % n[a];
        if (v < 0) v += n[a];
        idx = idx * static_cast<std::size_t>(n[a]) + static_cast<std::size_t>(v);
    }
    return idx;
}

std::array<int, 3> PeriodicGrid::multi_index(std::size_t i) const {
    std::array<int, 3> out{0, 0, 0};
    for (int a = 0; a < dim(); ++a) {
        out[a] = static_cast<int>(i % static_cast<std::size_t>(n[a]));
        i /= static_cast<std::size_t>(n[a]);
    }
    return out;
}

std::size_t PeriodicGrid::offset(std::size_t i, std::span<const int> steps) const {
    auto mi = multi_index(i);
    for (int a = 0; a < dim(); ++a) mi[a] += steps[a];
    return index(std::span<const int>(mi.data(), static_cast<std::size_t>(dim())));
}

std::size_t PeriodicGrid::shift(std::size_t i, int axis, int step) const {
    std::array<int, 3> s{0, 0, 0};
    s[axis] = step;
    return offset(i, std::span<const int>(s.data(), static_cast<std::size_t>(dim())));
}

SmallVec PeriodicGrid::position(std::size_t i) const {
    const auto mi = multi_index(i);
    SmallVec x(dim());
    for (int a = 0; a < dim(); ++a) x(a) = mi[a] * spacing(a);
    return x;
}

// --- DiscreteManifold -------------------------------------------------------

DiscreteManifold::DiscreteManifold(FamilySpec spec, PeriodicGrid grid,
                                   std::shared_ptr<const MetricModel> model)
    : spec_(std::move(spec)), dim_(grid.dim()), chart_(std::move(grid)), model_(std::move(model)) {
    const auto& G = std::get<PeriodicGrid>(chart_);
    const std::size_t n = G.size();
    metric_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SmallVec x = G.position(i);
        metric_[i] = model_->metric(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }
    finish_metric();
    weights_.resize(static_cast<Eigen::Index>(n));
    const double cell = G.cell_volume();
    for (std::size_t i = 0; i < n; ++i) weights_(static_cast<Eigen::Index>(i)) = sqrt_det_[i] * cell;
}

DiscreteManifold::DiscreteManifold(FamilySpec spec, TriMesh mesh)
    : spec_(std::move(spec)), dim_(2), chart_(std::move(mesh)) {
    const auto& T = std::get<TriMesh>(chart_);
    const std::size_t n = T.vertices.size();
    metric_.assign(n, SmallMat::Identity(2, 2));
    finish_metric();
    weights_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t f = 0; f < T.faces.size(); ++f) {
        const auto& t = T.faces[f];
        const double area =
            0.5 * (T.vertices[t[1]] - T.vertices[t[0]]).cross(T.vertices[t[2]] - T.vertices[t[0]]).norm();
        if (!(area > 0.0))
            throw Error("degenerate mesh face " + std::to_string(f) + " at vertex " + std::to_string(t[0]));
        for (int v : t) weights_(v) += area / 3.0;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(weights_(static_cast<Eigen::Index>(i)) > 0.0))
            throw Error("isolated mesh vertex " + std::to_string(i));
}

void DiscreteManifold::finish_metric() {
    const std::size_t n = metric_.size();
    inverse_.resize(n);
    sqrt_det_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SmallMat& g = metric_[i];
        Eigen::SelfAdjointEigenSolver<SmallMat> es(g, Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues().minCoeff() > 0.0))
            throw Error("metric is not positive definite at node " + std::to_string(i));
        inverse_[i] = g.inverse();
        sqrt_det_[i] = std::sqrt(g.determinant());
    }
}

double DiscreteManifold::total_volume() const { return weights_.sum(); }

SmallMat DiscreteManifold::metric_at(std::span<const double> x) const {
    if (model_) return model_->metric(x);
    return SmallMat::Identity(dim_, dim_);
}

std::array<SmallMat, 3> DiscreteManifold::christoffel(std::size_t i) const {
    if (model_) {
        const SmallVec x = position(i);
        return model_->christoffel(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }
    if (is_grid()) return christoffel_fd(i);
    std::array<SmallMat, 3> zero;
    for (int c = 0; c < dim_; ++c) zero[c] = SmallMat::Zero(dim_, dim_);
    return zero;
}

std::array<SmallMat, 3> DiscreteManifold::christoffel_fd(std::size_t i) const {
    const auto& G = grid();
    std::array<SmallMat, 3> dg;
    for (int l = 0; l < dim_; ++l) {
        const std::size_t ip = G.shift(i, l, +1), im = G.shift(i, l, -1);
        dg[l] = (metric_[ip] - metric_[im]) / (2.0 * G.spacing(l));
    }
    return christoffel_from_derivatives(metric_[i], dg);
}

SmallVec DiscreteManifold::position(std::size_t i) const {
    if (is_grid()) return grid().position(i);
    const auto& v = mesh().vertices[i];
    SmallVec x(3);
    x << v.x(), v.y(), v.z();
    return x;
}

SmallVec DiscreteManifold::wrapped_offset(std::span<const double> from, std::span<const double> to) const {
    SmallVec d(static_cast<Eigen::Index>(from.size()));
    for (std::size_t a = 0; a < from.size(); ++a) {
        double v = to[a] - from[a];
        if (is_grid()) {
            const double P = grid().period[a];
            v -= P * std::floor(v / P + 0.5);
        }
        d(static_cast<Eigen::Index>(a)) = v;
    }
    return d;
}

double DiscreteManifold::injectivity_limit() const {
    if (!is_grid()) return std::numeric_limits<double>::infinity();
    const auto& G = grid();
    double lim = std::numeric_limits<double>::infinity();
    for (int a = 0; a < base_dim(); ++a) {
        double gmin = std::numeric_limits<double>::infinity();
        for (const auto& g : metric_) gmin = std::min(gmin, g(a, a));
        lim = std::min(lim, 0.5 * G.period[a] * std::sqrt(gmin));
    }
    return lim;
}

std::size_t DiscreteManifold::nearest_node(std::span<const double> x) const {
    if (is_grid()) {
        const auto& G = grid();
        std::array<int, 3> mi{0, 0, 0};
        for (int a = 0; a < dim_; ++a) mi[a] = static_cast<int>(std::lround(x[a] / G.spacing(a)));
        return G.index(std::span<const int>(mi.data(), static_cast<std::size_t>(dim_)));
    }
    const auto& V = mesh().vertices;
    const Eigen::Vector3d p(x[0], x.size() > 1 ? x[1] : 0.0, x.size() > 2 ? x[2] : 0.0);
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < V.size(); ++i) {
        const double d = (V[i] - p).squaredNorm();
        if (d < bd) bd = d, best = i;
    }
    return best;
}

DiscreteManifold build_family(const FamilySpec& spec) {
    spec.validate();
    if (spec.kind == FamilyKind::ImportedMesh) {
        TriMesh mesh = read_off(spec.mesh_path);
        return DiscreteManifold(spec, std::move(mesh));
    }
    PeriodicGrid grid;
    const int m = spec.dim();
    const int k = spec.base_dim;
    for (int a = 0; a < m; ++a) {
        if (a < k) {
            grid.n.push_back(static_cast<int>(std::lround(spec.resolution.base_per_unit * spec.base_length)));
            grid.period.push_back(spec.base_length);
        } else {
            grid.n.push_back(spec.resolution.fiber_nodes);
            grid.period.push_back(1.0);
        }
    }
    return DiscreteManifold(spec, std::move(grid), make_metric_model(spec));
}

double ricci_lower_parameter(const DiscreteManifold& M) {
    if (!M.model() || M.dim() < 2) return 0.0;
    const MetricModel& model = *M.model();
    const int m = M.dim();
    const double h = 1e-5;
    double min_ric = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < M.size(); ++i) {
        SmallVec x = M.position(i);
        auto span_of = [](const SmallVec& v) {
            return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
        };
        const auto gamma = model.christoffel(span_of(x));
        std::array<std::array<SmallMat, 3>, 3> dgamma;  // dgamma[l][c] = ∂_l Γ^c
        for (int l = 0; l < m; ++l) {
            SmallVec xp = x, xm = x;
            xp(l) += h;
            xm(l) -= h;
            const auto gp = model.christoffel(span_of(xp));
            const auto gm = model.christoffel(span_of(xm));
            for (int c = 0; c < m; ++c) dgamma[l][c] = (gp[c] - gm[c]) / (2.0 * h);
        }
        // R_ij = ∂_k Γ^k_ij - ∂_j Γ^k_ik + Γ^k_kl Γ^l_ij - Γ^k_jl Γ^l_ik
        SmallMat ric = SmallMat::Zero(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double s = 0.0;
                for (int c = 0; c < m; ++c) {
                    s += dgamma[c][c](a, b) - dgamma[b][c](c, a);
                    for (int l = 0; l < m; ++l)
                        s += gamma[c](c, l) * gamma[l](a, b) - gamma[c](b, l) * gamma[l](c, a);
                }
                ric(a, b) = s;
            }
        ric = 0.5 * (ric + ric.transpose()).eval();
        Eigen::GeneralizedSelfAdjointEigenSolver<SmallMat> es(ric, M.metric(i), Eigen::EigenvaluesOnly);
        min_ric = std::min(min_ric, es.eigenvalues().minCoeff());
    }
    // Differencing noise on flat charts is far below this floor.
    if (min_ric > -1e-6) return 0.0;
    return -min_ric / (m - 1);
}

}  // namespace fiberlab
