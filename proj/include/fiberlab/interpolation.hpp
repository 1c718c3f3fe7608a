#pragma once

#include <span>
#include <vector>

#include "fiberlab/manifold.hpp"

namespace fiberlab {

/// Multilinear interpolation of nodal fields on a periodic grid.
class GridInterpolator {
public:
    explicit GridInterpolator(const DiscreteManifold& M);

    double value(const ScalarField& f, std::span<const double> x) const;
    /// Value and exact chart partial derivatives of the multilinear interpolant.
    double value_and_partials(const ScalarField& f, std::span<const double> x, SmallVec& partials) const;
    /// Interpolated contravariant vector field.
    SmallVec vector(const VectorField& X, std::span<const double> x) const;
    /// True when every corner of the containing cell is set in the mask.
    bool inside(const NodeMask& mask, std::span<const double> x) const;
    /// Corner nodes of the cell containing x.
    std::vector<std::size_t> corners(std::span<const double> x) const;

private:
    struct Cell {
        std::array<std::size_t, 8> node{};
        std::array<double, 8> weight{};
        std::array<std::array<double, 3>, 8> dweight{};
        int corners = 0;
    };
    Cell locate(std::span<const double> x) const;

    const DiscreteManifold& M_;
};

}  // namespace fiberlab
