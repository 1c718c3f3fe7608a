#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fiberlab {

// Node-local linear algebra never exceeds dimension 3, so these stay on the stack.
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

using ScalarField = Eigen::VectorXd;
using NodeMask = std::vector<char>;

/// Contravariant vector per node, stored row-wise (rows = nodes, cols = frame dimension).
struct VectorField {
    Eigen::MatrixXd c;

    int dim() const { return static_cast<int>(c.cols()); }
    std::size_t size() const { return static_cast<std::size_t>(c.rows()); }
    SmallVec at(std::size_t i) const { return c.row(static_cast<Eigen::Index>(i)).transpose(); }
    void set(std::size_t i, const SmallVec& v) { c.row(static_cast<Eigen::Index>(i)) = v.transpose(); }
};

/// Symmetric covariant 2-tensor per node, row-major m*m entries per row.
struct TensorField {
    int m = 0;
    Eigen::MatrixXd c;

    std::size_t size() const { return static_cast<std::size_t>(c.rows()); }
    SmallMat at(std::size_t i) const {
        SmallMat t(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) t(a, b) = c(static_cast<Eigen::Index>(i), a * m + b);
        return t;
    }
    void set(std::size_t i, const SmallMat& t) {
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) c(static_cast<Eigen::Index>(i), a * m + b) = t(a, b);
    }
};

/// Raised on any violated precondition or failed numerical stage.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller handed in arguments outside an operation's contract.
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace fiberlab
