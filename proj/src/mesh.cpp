#include "mgcn/mesh.hpp"

#include "mgcn/error.hpp"
#include "mgcn/hash.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

namespace mgcn {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(Eigen::Index n)
        : m_parent(static_cast<std::size_t>(n))
    {
        std::iota(m_parent.begin(), m_parent.end(), 0);
    }

    int find(int x)
    {
        while (m_parent[x] != x) {
            m_parent[x] = m_parent[m_parent[x]];
            x = m_parent[x];
        }
        return x;
    }

    void unite(int a, int b) { m_parent[find(a)] = find(b); }

private:
    std::vector<int> m_parent;
};

double corner_area(const RowMatrix3d& V, const RowMatrix3i& F, Eigen::Index t)
{
    const Eigen::Vector3d a = V.row(F(t, 0));
    const Eigen::Vector3d b = V.row(F(t, 1));
    const Eigen::Vector3d c = V.row(F(t, 2));
    return 0.5 * (b - a).cross(c - a).norm();
}

void validate(const RowMatrix3d& V, const RowMatrix3i& F, const std::optional<std::vector<int>>& labels)
{
    const Eigen::Index n = V.rows();
    if (n == 0 || F.rows() == 0) {
        throw ValidationError("empty mesh");
    }
    if (!V.allFinite()) {
        throw ValidationError("non-finite vertex coordinate");
    }
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            if (F(t, c) < 0 || F(t, c) >= n) {
                throw ValidationError("triangle " + std::to_string(t) + " has out-of-range vertex index "
                    + std::to_string(F(t, c)));
            }
        }
        if (F(t, 0) == F(t, 1) || F(t, 1) == F(t, 2) || F(t, 0) == F(t, 2)) {
            throw ValidationError("degenerate triangle " + std::to_string(t) + ": repeated vertex index");
        }
    }

    double mean_area = 0.0;
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        mean_area += corner_area(V, F, t);
    }
    mean_area /= static_cast<double>(F.rows());
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        if (!(corner_area(V, F, t) >= 1e-12 * mean_area) || mean_area <= 0.0) {
            throw ValidationError("degenerate triangle " + std::to_string(t) + ": zero area");
        }
    }

    std::map<std::pair<int, int>, int> edge_count;
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            int i = F(t, c);
            int j = F(t, (c + 1) % 3);
            if (i > j) std::swap(i, j);
            if (++edge_count[{i, j}] > 2) {
                throw ValidationError("non-manifold edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
        }
    }

    DisjointSets sets(n);
    std::vector<char> referenced(static_cast<std::size_t>(n), 0);
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            referenced[F(t, c)] = 1;
        }
        sets.unite(F(t, 0), F(t, 1));
        sets.unite(F(t, 1), F(t, 2));
    }
    const int root = sets.find(0);
    for (Eigen::Index v = 0; v < n; ++v) {
        if (!referenced[v]) {
            throw ValidationError("disconnected mesh: vertex " + std::to_string(v) + " is not referenced");
        }
        if (sets.find(static_cast<int>(v)) != root) {
            throw ValidationError("disconnected mesh: more than one connected component");
        }
    }

    if (labels && static_cast<Eigen::Index>(labels->size()) != n) {
        throw ValidationError("label count does not match vertex count");
    }
}

} // namespace

TriMesh TriMesh::make(RowMatrix3d vertices, RowMatrix3i triangles, std::optional<std::vector<int>> labels)
{
    validate(vertices, triangles, labels);
    TriMesh mesh;
    mesh.m_vertices = std::move(vertices);
    mesh.m_triangles = std::move(triangles);
    mesh.m_labels = std::move(labels);
    return mesh;
}

double TriMesh::triangle_area(Eigen::Index t) const
{
    return corner_area(m_vertices, m_triangles, t);
}

double TriMesh::surface_area() const
{
    double total = 0.0;
    for (Eigen::Index t = 0; t < num_triangles(); ++t) {
        total += triangle_area(t);
    }
    return total;
}

std::uint64_t TriMesh::content_hash() const
{
    Fnv1a hash;
    hash.update_value(static_cast<std::uint64_t>(num_vertices()));
    hash.update_value(static_cast<std::uint64_t>(num_triangles()));
    hash.update(m_vertices.data(), sizeof(double) * static_cast<std::size_t>(m_vertices.size()));
    hash.update(m_triangles.data(), sizeof(int) * static_cast<std::size_t>(m_triangles.size()));
    return hash.digest();
}

TriMesh TriMesh::with_vertices(RowMatrix3d vertices) const
{
    return make(std::move(vertices), m_triangles, m_labels);
}

std::vector<std::pair<int, int>> unique_edges(const TriMesh& mesh)
{
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(3 * mesh.num_triangles()));
    const auto& F = mesh.triangles();
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            int i = F(t, c);
            int j = F(t, (c + 1) % 3);
            edges.emplace_back(std::min(i, j), std::max(i, j));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

MassDiagonal lumped_areas(const TriMesh& mesh)
{
    MassDiagonal mass;
    mass.area = Eigen::VectorXd::Zero(mesh.num_vertices());
    const auto& F = mesh.triangles();
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        const double third = mesh.triangle_area(t) / 3.0;
        for (int c = 0; c < 3; ++c) {
            mass.area[F(t, c)] += third;
        }
        mass.total += 3.0 * third;
    }
    return mass;
}

SparseSymMatrix cotangent_laplacian(const TriMesh& mesh)
{
    const auto& V = mesh.vertices();
    const auto& F = mesh.triangles();
    const Eigen::Index n = mesh.num_vertices();

    // Off-diagonal weights are accumulated per ordered edge in triangle order,
    // so (i,j) and (j,i) receive bitwise identical sums.
    std::vector<Eigen::Triplet<double>> off;
    off.reserve(static_cast<std::size_t>(6 * F.rows()));
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const int k = F(t, c);
            const int i = F(t, (c + 1) % 3);
            const int j = F(t, (c + 2) % 3);
            const Eigen::Vector3d u = V.row(i) - V.row(k);
            const Eigen::Vector3d w = V.row(j) - V.row(k);
            const double cot = u.dot(w) / u.cross(w).norm();
            off.emplace_back(i, j, -0.5 * cot);
            off.emplace_back(j, i, -0.5 * cot);
        }
    }
    Eigen::SparseMatrix<double> W(n, n);
    W.setFromTriplets(off.begin(), off.end());

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (Eigen::Index col = 0; col < W.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(W, col); it; ++it) {
            diag[it.row()] -= it.value();
        }
    }

    std::vector<Eigen::Triplet<double>> all;
    all.reserve(static_cast<std::size_t>(W.nonZeros() + n));
    for (Eigen::Index col = 0; col < W.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(W, col); it; ++it) {
            all.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        all.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
    }
    SparseSymMatrix L;
    L.matrix.resize(n, n);
    L.matrix.setFromTriplets(all.begin(), all.end());
    L.matrix.makeCompressed();
    return L;
}

double dirichlet_energy(const SparseSymMatrix& L, const Eigen::MatrixXd& F)
{
    if (F.rows() != L.dim()) {
        throw ValidationError("dirichlet_energy: function has " + std::to_string(F.rows())
            + " rows, Laplacian has dimension " + std::to_string(L.dim()));
    }
    const Eigen::MatrixXd LF = L.matrix * F;
    return (F.array() * LF.array()).sum();
}

TriMesh permute_vertices(const TriMesh& mesh, const std::vector<int>& perm)
{
    const Eigen::Index n = mesh.num_vertices();
    if (static_cast<Eigen::Index>(perm.size()) != n) {
        throw ValidationError("permutation size mismatch");
    }
    std::vector<int> inverse(perm.size(), -1);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] < 0 || perm[i] >= n || inverse[perm[i]] != -1) {
            throw ValidationError("not a permutation");
        }
        inverse[perm[i]] = static_cast<int>(i);
    }
    RowMatrix3d V(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        V.row(i) = mesh.vertices().row(perm[i]);
    }
    RowMatrix3i F = mesh.triangles();
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            F(t, c) = inverse[F(t, c)];
        }
    }
    std::optional<std::vector<int>> labels;
    if (mesh.labels()) {
        labels.emplace(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            (*labels)[i] = (*mesh.labels())[perm[i]];
        }
    }
    return TriMesh::make(std::move(V), std::move(F), std::move(labels));
}

} // namespace mgcn
