#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <Eigen/Dense>

#include "fiberlab/fiber.hpp"
#include "fiberlab/interpolation.hpp"

namespace fiberlab {

namespace {

using EdgeKey = std::uint64_t;

struct Crossing {
    SmallVec point;  // chart point near node a (ambient point on meshes)
    std::size_t a = 0, b = 0;
};

struct Soup {
    std::unordered_map<EdgeKey, Crossing> crossing;
    std::vector<std::array<EdgeKey, 2>> segments;
    std::unordered_map<EdgeKey, std::vector<int>> incident;

    void add(EdgeKey e0, EdgeKey e1) {
        const int s = static_cast<int>(segments.size());
        segments.push_back({e0, e1});
        incident[e0].push_back(s);
        incident[e1].push_back(s);
    }
};

EdgeKey key_of(std::size_t i, std::size_t j, std::size_t n) {
    return static_cast<EdgeKey>(std::min(i, j)) * n + std::max(i, j);
}

std::span<const double> as_span(const SmallVec& v) {
    return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
}

// Registers the crossing on edge (i, j) if the level separates the two values.
bool edge_crossing(const DiscreteManifold& M, const ScalarField& f, double level, std::size_t i, std::size_t j,
                   Soup& soup, EdgeKey& key) {
    const double fi = f(static_cast<Eigen::Index>(i)) - level;
    const double fj = f(static_cast<Eigen::Index>(j)) - level;
    if ((fi >= 0.0) == (fj >= 0.0)) return false;
    key = key_of(i, j, M.size());
    if (!soup.crossing.count(key)) {
        const double t = fi / (fi - fj);
        const SmallVec xi = M.position(i);
        const SmallVec step = M.is_grid() ? M.wrapped_offset(as_span(xi), as_span(M.position(j)))
                                          : SmallVec(M.position(j) - xi);
        soup.crossing[key] = {xi + t * step, i, j};
    }
    return true;
}

void march_grid(const DiscreteManifold& M, const ScalarField& f, double level, const NodeMask& domain, Soup& soup) {
    const auto& G = M.grid();
    for (std::size_t n = 0; n < M.size(); ++n) {
        const std::size_t c[4] = {n, G.shift(n, 0, 1), G.offset(n, std::array<int, 2>{1, 1}), G.shift(n, 1, 1)};
        if (!(domain[c[0]] && domain[c[1]] && domain[c[2]] && domain[c[3]])) continue;
        std::vector<EdgeKey> hit;
        for (int e = 0; e < 4; ++e) {
            EdgeKey k = 0;
            if (edge_crossing(M, f, level, c[e], c[(e + 1) % 4], soup, k)) hit.push_back(k);
        }
        if (hit.size() == 2) {
            soup.add(hit[0], hit[1]);
        } else if (hit.size() == 4) {
            // Saddle cell: pair the crossings so that the centre value's side stays connected.
            double centre = 0.0;
            for (auto i : c) centre += 0.25 * f(static_cast<Eigen::Index>(i));
            const bool c0_high = f(static_cast<Eigen::Index>(c[0])) >= level;
            if ((centre >= level) == c0_high) {
                soup.add(hit[0], hit[1]);
                soup.add(hit[2], hit[3]);
            } else {
                soup.add(hit[3], hit[0]);
                soup.add(hit[1], hit[2]);
            }
        }
    }
}

void march_mesh(const DiscreteManifold& M, const ScalarField& f, double level, const NodeMask& domain, Soup& soup) {
    for (const auto& t : M.mesh().faces) {
        if (!(domain[t[0]] && domain[t[1]] && domain[t[2]])) continue;
        std::vector<EdgeKey> hit;
        for (int e = 0; e < 3; ++e) {
            EdgeKey k = 0;
            if (edge_crossing(M, f, level, static_cast<std::size_t>(t[e]), static_cast<std::size_t>(t[(e + 1) % 3]),
                              soup, k))
                hit.push_back(k);
        }
        if (hit.size() == 2) soup.add(hit[0], hit[1]);
    }
}

// Ordered edge sequence of the component containing `start`.
std::vector<EdgeKey> walk(const Soup& soup, EdgeKey start, bool& closed) {
    auto advance = [&](EdgeKey from, int via) {
        const auto& s = soup.segments[via];
        return s[0] == from ? s[1] : s[0];
    };
    auto trace = [&](EdgeKey e0, std::vector<EdgeKey>& out) {
        out.assign(1, e0);
        int prev = -1;
        EdgeKey cur = e0;
        for (;;) {
            const auto& inc = soup.incident.at(cur);
            int next = -1;
            for (int s : inc)
                if (s != prev) {
                    next = s;
                    break;
                }
            if (next < 0) return false;
            const EdgeKey nxt = advance(cur, next);
            if (nxt == e0) return true;
            out.push_back(nxt);
            prev = next;
            cur = nxt;
            if (out.size() > soup.segments.size() + 1) return false;
        }
    };
    std::vector<EdgeKey> seq;
    closed = trace(start, seq);
    if (!closed) {
        std::vector<EdgeKey> back;
        trace(seq.back(), back);
        seq = std::move(back);
    }
    return seq;
}

FiberTrace trace_curve_2d(const DiscreteManifold& M, const SplittingMap& phi, const RegularMask& reg, double level,
                          std::size_t near) {
    Soup soup;
    if (M.is_grid())
        march_grid(M, phi.components[0], level, phi.domain, soup);
    else
        march_mesh(M, phi.components[0], level, phi.domain, soup);
    if (soup.segments.empty()) throw PreconditionError("level " + std::to_string(level) + " is not attained by Φ");

    const SmallVec p = M.position(near);
    EdgeKey best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (const auto& [k, c] : soup.crossing) {
        if (!soup.incident.count(k)) continue;
        const SmallVec d = M.is_grid() ? M.wrapped_offset(as_span(p), as_span(c.point)) : SmallVec(c.point - p);
        const double dn = d.squaredNorm();
        if (dn < bd || (dn == bd && k < best)) bd = dn, best = k;
    }
    FiberTrace tr;
    tr.level = SmallVec::Constant(1, level);
    const auto seq = walk(soup, best, tr.closed);
    tr.regular = true;
    for (EdgeKey e : seq) {
        const Crossing& c = soup.crossing.at(e);
        if (!reg.regular[c.a] || !reg.regular[c.b]) tr.regular = false;
        if (tr.points.empty() || !M.is_grid())
            tr.points.push_back(c.point);
        else
            tr.points.push_back(tr.points.back() + M.wrapped_offset(as_span(tr.points.back()), as_span(c.point)));
    }
    if (M.is_grid()) {
        const GridInterpolator I(M);
        for (const auto& x : tr.points)
            tr.level_error = std::max(tr.level_error, std::abs(I.value(phi.components[0], as_span(x)) - level));
    }
    return tr;
}

// Φ and its chart Jacobian from the multilinear interpolant.
void evaluate(const GridInterpolator& I, const SplittingMap& phi, const SmallVec& x, Eigen::Vector2d& v,
              Eigen::Matrix<double, 2, 3>& D) {
    for (int a = 0; a < 2; ++a) {
        SmallVec d;
        v(a) = I.value_and_partials(phi.components[a], as_span(x), d);
        D.row(a) = d.transpose();
    }
}

bool project(const GridInterpolator& I, const SplittingMap& phi, const Eigen::Vector2d& level, SmallVec& x,
             double tol) {
    for (int it = 0; it < 20; ++it) {
        Eigen::Vector2d v;
        Eigen::Matrix<double, 2, 3> D;
        evaluate(I, phi, x, v, D);
        const Eigen::Vector2d r = v - level;
        if (r.norm() <= tol) return true;
        const Eigen::Vector2d y = (D * D.transpose()).ldlt().solve(r);
        const Eigen::Vector3d dx = D.transpose() * y;
        for (int a = 0; a < 3; ++a) x(a) -= dx(a);
    }
    return false;
}

SmallVec kernel_direction(const DiscreteManifold& M, const GridInterpolator& I, const SplittingMap& phi,
                          const SmallVec& x) {
    Eigen::Vector2d v;
    Eigen::Matrix<double, 2, 3> D;
    evaluate(I, phi, x, v, D);
    const Eigen::Vector3d t = Eigen::Vector3d(D.row(0).transpose()).cross(Eigen::Vector3d(D.row(1).transpose()));
    SmallVec T(3);
    T << t(0), t(1), t(2);
    const SmallMat g = M.metric_at(as_span(x));
    const double n = std::sqrt(T.dot(g * T));
    if (!(n > 0.0)) throw Error("fiber direction degenerates (singular point on the trace)");
    return T / n;
}

FiberTrace trace_curve_3d(const DiscreteManifold& M, const SplittingMap& phi, const RegularMask& reg,
                          const SmallVec& level, std::size_t near, const FiberOptions& opt) {
    const GridInterpolator I(M);
    const auto& G = M.grid();
    const Eigen::Vector2d lv(level(0), level(1));
    double step = opt.step;
    if (!(step > 0.0)) {
        const SmallMat g = M.metric(near);
        step = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) step = std::min(step, 0.5 * G.spacing(a) * std::sqrt(g(a, a)));
    }
    FiberTrace tr;
    tr.level = level;
    tr.regular = true;
    SmallVec x = M.position(near);
    if (!project(I, phi, lv, x, opt.level_tolerance * 1e-3)) throw Error("cannot project onto the fiber level");
    const SmallVec x0 = x;
    SmallVec prev_dir = kernel_direction(M, I, phi, x);
    double travelled = 0.0;
    tr.points.push_back(x);
    for (int s = 0; s < opt.max_steps; ++s) {
        if (!I.inside(phi.interior, as_span(x))) throw PreconditionError("fiber leaves the splitting-map domain");
        if (!I.inside(reg.regular, as_span(x))) tr.regular = false;
        SmallVec d1 = kernel_direction(M, I, phi, x);
        if (d1.dot(prev_dir) < 0) d1 = -d1;
        SmallVec mid = x + 0.5 * step * d1;
        SmallVec d2 = kernel_direction(M, I, phi, mid);
        if (d2.dot(d1) < 0) d2 = -d2;
        SmallVec xn = x + step * d2;
        if (!project(I, phi, lv, xn, opt.level_tolerance * 1e-3)) throw Error("fiber corrector did not converge");
        prev_dir = d2;
        const SmallVec dx = xn - x;
        travelled += std::sqrt(dx.dot(M.metric_at(as_span(SmallVec(x + 0.5 * dx))) * dx));
        x = xn;
        const SmallVec back = M.wrapped_offset(as_span(x), as_span(x0));
        const double gap = std::sqrt(back.dot(M.metric_at(as_span(x)) * back));
        if (travelled > 4.0 * step && gap < 0.75 * step) {
            tr.closed = true;
            break;
        }
        tr.points.push_back(x);
    }
    for (const auto& p : tr.points) {
        Eigen::Vector2d v;
        Eigen::Matrix<double, 2, 3> D;
        evaluate(I, phi, p, v, D);
        tr.level_error = std::max(tr.level_error, (v - lv).cwiseAbs().maxCoeff());
    }
    return tr;
}

}  // namespace

double polyline_length(const DiscreteManifold& M, const std::vector<SmallVec>& points, bool closed) {
    double len = 0.0;
    const std::size_t n = points.size();
    const std::size_t segs = closed ? n : (n ? n - 1 : 0);
    for (std::size_t s = 0; s < segs; ++s) {
        const SmallVec& a = points[s];
        SmallVec b = points[(s + 1) % n];
        if (M.is_grid()) {
            b = a + M.wrapped_offset(as_span(a), as_span(b));
            const SmallVec d = b - a;
            const SmallVec mid = a + 0.5 * d;
            len += std::sqrt(d.dot(M.metric_at(as_span(mid)) * d));
        } else {
            len += (b - a).norm();
        }
    }
    return len;
}

FiberTrace extract_fiber(const DiscreteManifold& M, const SplittingMap& phi, const RegularMask& reg,
                         const SmallVec& level, std::size_t near, const FiberOptions& opt) {
    const int m = M.dim(), k = phi.k();
    if (m - k != 1) throw PreconditionError("fiber extraction supports curve fibers (m - k = 1) only");
    if (level.size() != k) throw PreconditionError("level dimension does not match k");
    if (!phi.domain[near]) throw PreconditionError("start node lies outside the splitting-map domain");
    FiberTrace tr = (m == 2) ? trace_curve_2d(M, phi, reg, level(0), near) : trace_curve_3d(M, phi, reg, level, near, opt);
    tr.length = polyline_length(M, tr.points, tr.closed);
    tr.diameter = tr.closed ? 0.5 * tr.length : tr.length;
    return tr;
}

EpsilonEstimate epsilon_proxy(const DiscreteManifold& M, const GeodesicBall& ball, const SplittingMap& phi,
                              const RegularMask& reg, int samples,
                              const FiberOptions& opt) {
    if (samples < 1 || samples % 2 == 0) throw PreconditionError("fiber sample count must be odd");
    for (std::size_t i : ball.members)
        if (!phi.domain[i]) throw PreconditionError("ball leaves the splitting-map domain");
    const int k = phi.k();
    const SmallVec c = phi.value(ball.center);
    SmallVec lo = c, hi = c;
    for (std::size_t i : ball.members) {
        const SmallVec v = phi.value(i);
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const int half = samples / 2;
    auto axis_level = [&](int a, int j) {
        if (half == 0 || j == half) return c(a);
        if (j < half) return c(a) - 0.95 * (c(a) - lo(a)) * (half - j) / half;
        return c(a) + 0.95 * (hi(a) - c(a)) * (j - half) / half;
    };
    std::vector<SmallVec> levels;
    if (k == 1) {
        for (int j = 0; j < samples; ++j) levels.push_back(SmallVec::Constant(1, axis_level(0, j)));
    } else {
        for (int j0 = 0; j0 < samples; ++j0)
            for (int j1 = 0; j1 < samples; ++j1) {
                SmallVec v(2);
                v << axis_level(0, j0), axis_level(1, j1);
                levels.push_back(v);
            }
    }
    EpsilonEstimate est;
    for (const SmallVec& v : levels) {
        std::size_t near = ball.center;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i : ball.members) {
            const double d = (phi.value(i) - v).squaredNorm();
            if (d < bd) bd = d, near = i;
        }
        FiberTrace tr = extract_fiber(M, phi, reg, v, near, opt);
        if (tr.regular && tr.closed) est.max_diameter = std::max(est.max_diameter, tr.diameter);
        est.fibers.push_back(std::move(tr));
    }
    if (!(est.max_diameter > 0.0)) throw Error("no regular closed fiber found in Φ(B(p, r))");
    est.epsilon_hat = est.max_diameter / (2.0 * ball.radius);
    return est;
}

}  // namespace fiberlab
