#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "fiberlab/types.hpp"

namespace fiberlab {

enum class FamilyKind { FlatProductTorus, WarpedTorus, TwistedTorus3, ImportedMesh };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

/// Grid resolution: nodes per unit chart length along base axes, fixed node count
/// around each collapsed (fiber) axis.
struct Resolution {
    int base_per_unit = 128;
    int fiber_nodes = 32;
};

struct FamilySpec {
    FamilyKind kind = FamilyKind::FlatProductTorus;
    int base_dim = 1;          // k
    double epsilon = 0.1;      // fiber scale
    double delta = 0.0;        // warp amplitude
    double twist = 0.0;        // twist connection amplitude
    double base_length = 1.0;  // period of each base axis
    Resolution resolution;
    std::string mesh_path;     // imported-mesh only

    int dim() const;
    void validate() const;
    /// Stable textual form used for hashing and cache keys.
    std::string canonical() const;
};

/// Analytic metric on a periodic chart.  Christoffel symbols come from the
/// analytic first derivatives of the metric, never from node differences.
class MetricModel {
public:
    virtual ~MetricModel() = default;
    virtual int dim() const = 0;
    virtual SmallMat metric(std::span<const double> x) const = 0;
    /// Partial derivative of the metric along chart axis `axis`.
    virtual SmallMat metric_derivative(std::span<const double> x, int axis) const = 0;

    /// Gamma[c](a, b) = Γ^c_{ab}.
    std::array<SmallMat, 3> christoffel(std::span<const double> x) const;
};

std::array<SmallMat, 3> christoffel_from_derivatives(const SmallMat& g,
                                                     const std::array<SmallMat, 3>& dg);

struct PeriodicGrid {
    std::vector<int> n;
    std::vector<double> period;

    int dim() const { return static_cast<int>(n.size()); }
    std::size_t size() const;
    double spacing(int axis) const { return period[axis] / n[axis]; }
    double cell_volume() const;

    std::size_t index(std::span<const int> ijk) const;
    std::array<int, 3> multi_index(std::size_t i) const;
    /// Neighbour reached by integer offsets along each axis, with wrap-around.
    std::size_t offset(std::size_t i, std::span<const int> steps) const;
    std::size_t shift(std::size_t i, int axis, int step) const;
    SmallVec position(std::size_t i) const;
};

struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
    /// Orthonormal tangent frame (columns) per vertex.
    std::vector<Eigen::Matrix<double, 3, 2>> frames;
    std::vector<std::vector<int>> vertex_faces;
};

class DiscreteManifold {
public:
    DiscreteManifold(FamilySpec spec, PeriodicGrid grid, std::shared_ptr<const MetricModel> model);
    DiscreteManifold(FamilySpec spec, TriMesh mesh);

    int dim() const { return dim_; }
    int base_dim() const { return spec_.base_dim; }
    std::size_t size() const { return weights_.size(); }
    const FamilySpec& spec() const { return spec_; }

    bool is_grid() const { return std::holds_alternative<PeriodicGrid>(chart_); }
    const PeriodicGrid& grid() const { return std::get<PeriodicGrid>(chart_); }
    const TriMesh& mesh() const { return std::get<TriMesh>(chart_); }
    const MetricModel* model() const { return model_.get(); }

    const SmallMat& metric(std::size_t i) const { return metric_[i]; }
    const SmallMat& inverse_metric(std::size_t i) const { return inverse_[i]; }
    double volume_element(std::size_t i) const { return sqrt_det_[i]; }
    /// Integration weight (dual-cell volume) of node i.
    double weight(std::size_t i) const { return weights_[i]; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double total_volume() const;

    /// Metric at an arbitrary chart point: analytic when a model exists.
    SmallMat metric_at(std::span<const double> x) const;
    std::array<SmallMat, 3> christoffel(std::size_t i) const;
    /// Γ from centred differences of the nodal metric; the fallback when no
    /// analytic closure is available.
    std::array<SmallMat, 3> christoffel_fd(std::size_t i) const;

    SmallVec position(std::size_t i) const;
    /// Chart offset y - x wrapped into the fundamental domain of each periodic axis.
    SmallVec wrapped_offset(std::span<const double> from, std::span<const double> to) const;
    /// Half of the shortest base-axis loop: balls must stay below this radius.
    double injectivity_limit() const;
    std::size_t nearest_node(std::span<const double> x) const;

private:
    void finish_metric();

    FamilySpec spec_;
    int dim_ = 0;
    std::variant<PeriodicGrid, TriMesh> chart_;
    std::shared_ptr<const MetricModel> model_;
    std::vector<SmallMat> metric_;
    std::vector<SmallMat> inverse_;
    std::vector<double> sqrt_det_;
    Eigen::VectorXd weights_;
};

/// Construct one of the built-in collapsing families (or import an OFF mesh).
DiscreteManifold build_family(const FamilySpec& spec);

std::shared_ptr<const MetricModel> make_metric_model(const FamilySpec& spec);

/// Warp profile w(x) = 1 + δ sin(2πx) of the warped family.
double warp_profile(double delta, double x);

/// Lower bound λ_ric with Ric ≥ -(m-1) λ_ric g, from analytic Christoffels
/// differenced at the nodes.  Zero for flat charts and for meshes.
double ricci_lower_parameter(const DiscreteManifold& M);

// OFF mesh ingestion
TriMesh read_off(const std::string& path);
void write_off(const std::string& path, const std::vector<Eigen::Vector3d>& vertices,
               const std::vector<std::array<int, 3>>& faces);
void finalize_mesh(TriMesh& mesh);

struct GeodesicBall {
    std::size_t center = 0;
    double radius = 0.0;
    std::vector<std::size_t> members;
    std::vector<std::size_t> boundary;
    NodeMask mask;                 // per node membership
    std::vector<double> distance;  // per node, +inf beyond the search horizon
    double volume = 0.0;

    bool contains(std::size_t i) const { return mask[i] != 0; }
};

/// Multi-source shortest path over the node graph with metric edge lengths,
/// truncated at `horizon`.
std::vector<double> graph_distance(const DiscreteManifold& M,
                                   std::span<const std::size_t> sources,
                                   std::span<const double> source_offsets, double horizon);

GeodesicBall geodesic_ball(const DiscreteManifold& M, std::size_t center, double radius);

/// Box neighbours (3^m - 1 on grids, one-ring on meshes).
std::vector<std::size_t> stencil_neighbours(const DiscreteManifold& M, std::size_t i);

}  // namespace fiberlab
