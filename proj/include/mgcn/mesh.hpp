#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mgcn {

using RowMatrix3d = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using RowMatrix3i = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

///
/// Triangle mesh with validated connectivity.
///
/// Construction through make() enforces the invariants every downstream
/// operator relies on: indices in range, no repeated corner, no degenerate
/// triangle, edge-manifold and connected.
///
class TriMesh {
public:
    TriMesh() = default;

    /// Validates and builds a mesh. Throws ValidationError on violations.
    static TriMesh make(RowMatrix3d vertices, RowMatrix3i triangles,
        std::optional<std::vector<int>> labels = std::nullopt);

    const RowMatrix3d& vertices() const { return m_vertices; }
    const RowMatrix3i& triangles() const { return m_triangles; }
    const std::optional<std::vector<int>>& labels() const { return m_labels; }

    Eigen::Index num_vertices() const { return m_vertices.rows(); }
    Eigen::Index num_triangles() const { return m_triangles.rows(); }

    double surface_area() const;
    double triangle_area(Eigen::Index t) const;

    /// 64-bit FNV-1a hash over vertex and triangle buffers.
    std::uint64_t content_hash() const;

    /// Same connectivity, new vertex positions (revalidated).
    TriMesh with_vertices(RowMatrix3d vertices) const;

private:
    RowMatrix3d m_vertices;
    RowMatrix3i m_triangles;
    std::optional<std::vector<int>> m_labels;
};

/// Undirected edge list (i < j), sorted.
std::vector<std::pair<int, int>> unique_edges(const TriMesh& mesh);

/// Per-vertex lumped area and the total surface area.
struct MassDiagonal {
    Eigen::VectorXd area;
    double total = 0.0;
};

/// Barycentric lumping: each triangle gives one third of its area to each corner.
MassDiagonal lumped_areas(const TriMesh& mesh);

/// Symmetric sparse matrix in compressed column storage.
struct SparseSymMatrix {
    Eigen::SparseMatrix<double> matrix;

    Eigen::Index dim() const { return matrix.rows(); }
};

///
/// Cotangent Laplacian with the positive semidefinite sign convention:
/// L_ij = -(cot a_ij + cot b_ij)/2 for each edge, L_ii = -sum_j L_ij.
/// Boundary edges use their single opposite angle. Obtuse angles are kept.
///
SparseSymMatrix cotangent_laplacian(const TriMesh& mesh);

/// Sum over columns of f_i^T L f_i.
double dirichlet_energy(const SparseSymMatrix& L, const Eigen::MatrixXd& F);

/// Relabel vertices: new vertex i is old vertex perm[i].
TriMesh permute_vertices(const TriMesh& mesh, const std::vector<int>& perm);

} // namespace mgcn
