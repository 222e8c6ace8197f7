#pragma once

#include "mgcn/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mgcn {

/// Edge-graph shortest-path distances (Euclidean edge lengths) from one vertex.
Eigen::VectorXd geodesic_from(const TriMesh& mesh, int source);

struct CorrespondenceMap {
    std::vector<int> target; ///< per source vertex
    std::uint64_t source_hash = 0;
    std::uint64_t target_hash = 0;
};

/// For every row of A the L2-nearest row of B; ties go to the lowest index.
CorrespondenceMap nn_match(const Eigen::MatrixXd& descA, const Eigen::MatrixXd& descB);

struct GroundTruth {
    std::vector<int> direct;
    std::optional<std::vector<int>> symmetric;
};

/// Caches geodesic rows of a target mesh, normalized by sqrt(area).
class GeodesicOracle {
public:
    explicit GeodesicOracle(const TriMesh& target);

    /// Normalized geodesic distance between two target vertices.
    double distance(int a, int b);

    const TriMesh& mesh() const { return *m_mesh; }
    double normalization() const { return m_norm; }

private:
    const TriMesh* m_mesh;
    double m_norm;
    std::vector<Eigen::VectorXd> m_rows;
};

struct ErrorSummary {
    double direct = 0.0;
    std::optional<double> symmetric;
};

/// Per-source normalized errors against the direct map, and the symmetry-aware per-vertex minimum.
struct PointErrors {
    std::vector<double> direct;
    std::optional<std::vector<double>> symmetric;
};
PointErrors point_errors(const CorrespondenceMap& map, const GroundTruth& gt, GeodesicOracle& oracle);

/// Mean geodesic error / sqrt(target area). Symmetric value present iff gt.symmetric is.
ErrorSummary average_geodesic_error(const CorrespondenceMap& map, const GroundTruth& gt, const TriMesh& target);

/// Fraction of source vertices with normalized error <= r, per radius.
std::vector<double> cge_curve(const CorrespondenceMap& map, const GroundTruth& gt, const TriMesh& target,
    const std::vector<double>& radii);
std::vector<double> cge_curve(const std::vector<double>& errors, const std::vector<double>& radii);

///
/// For k = 1..kmax the fraction of source vertices whose ground-truth target is
/// among the k nearest target descriptors (equal distances ranked by index).
///
std::vector<double> cmc_curve(const Eigen::MatrixXd& descA, const Eigen::MatrixXd& descB,
    const std::vector<int>& gt, int kmax);

/// Fraction of i with map[i] == gt[i].
double exact_match_rate(const std::vector<int>& map, const std::vector<int>& gt);

/// Uniform radii 0, step, ..., max.
std::vector<double> radius_grid(double max_radius, int count);

struct EvalReport {
    ErrorSummary error;
    std::vector<double> radii;
    std::vector<double> cge_direct;
    std::optional<std::vector<double>> cge_symmetric;
    std::vector<double> cmc; ///< may be empty when descriptors are unavailable
    double exact_match = 0.0;
};

EvalReport evaluate(const CorrespondenceMap& map, const GroundTruth& gt, const TriMesh& target,
    const std::vector<double>& radii);

/// Curves as CSV tables plus a key = value summary block.
void write_report(const std::filesystem::path& directory, const EvalReport& report);
std::string report_summary(const EvalReport& report);

/// One 0-based index per line, '#' comments allowed.
std::vector<int> read_index_file(const std::filesystem::path& path);
void write_index_file(const std::filesystem::path& path, const std::vector<int>& indices, const std::string& header = {});

} // namespace mgcn
