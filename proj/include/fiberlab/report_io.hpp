#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fiberlab/pipeline.hpp"

namespace fiberlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "fiberlab.report/1";

/// Finite values as numbers, the others as "inf", "-inf" or "nan".
Json number(double v);

Json to_json(const Certificate& c);
Json to_json(const EstimateReport& r);
Json to_json(const FiberBoundReport& r);
Json to_json(const ModeResult& m);
Json to_json(const PointResult& p);
Json to_json(const SweepSummary& s);
Json to_json(const FlowResult& f);

/// Pretty-printed with a trailing newline.
void write_json(const std::string& path, const Json& j);
void write_text(const std::string& path, const std::string& text);

/// Columns: index, theta, residual.
void write_eigen_csv(std::ostream& out, const std::vector<EigenPair>& pairs);
/// Columns: epsilon, epsilonHat, psi, theta, K, lhs, rhs, margin, pass.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Columns: x (ε̂), y (LHS), y2 (RHS), epsilon, mode.
void write_plot_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Emitted files with checksums, the config hash and the run timestamps.
class RunManifest {
public:
    RunManifest(std::string root, const ExperimentConfig& config, std::string command);

    /// Records a file given relative to the root.
    void add(const std::string& relative);
    /// Writes manifest.json into the root.
    void write() const;

private:
    std::string root_;
    std::string command_;
    std::string config_hash_;
    std::string started_;
    std::vector<std::string> files_;
};

/// Checks every file listed in root/manifest.json against its checksum.
bool verify_manifest(const std::string& root, std::string* problem = nullptr);

}  // namespace fiberlab
