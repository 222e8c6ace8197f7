#pragma once

#include "mgcn/mesh.hpp"
#include "mgcn/shapes.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace mgcn::test {

inline TriMesh unit_triangle()
{
    RowMatrix3d V(3, 3);
    V << 0, 0, 0, 1, 0, 0, 0.5, std::sqrt(3.0) / 2.0, 0;
    RowMatrix3i F(1, 3);
    F << 0, 1, 2;
    return TriMesh::make(V, F);
}

/// Two triangles sharing an edge, lying along the x axis (a 1 x 2 strip).
inline TriMesh quad_strip()
{
    RowMatrix3d V(4, 3);
    V << 0, 0, 0, 2, 0, 0, 2, 1, 0, 0, 1, 0;
    RowMatrix3i F(2, 3);
    F << 0, 1, 2, 0, 2, 3;
    return TriMesh::make(V, F);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

inline RowMatrix3d rigid(const RowMatrix3d& V, const Eigen::Matrix3d& R, const Eigen::RowVector3d& t)
{
    RowMatrix3d out = (V * R.transpose()).rowwise() + t;
    return out;
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng)
{
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

/// Smooth, non-symmetric perturbation of the icosphere (an ellipsoid with a bump).
inline TriMesh lumpy_sphere(int subdivisions)
{
    const TriMesh s = shapes::icosphere(subdivisions);
    RowMatrix3d V = s.vertices();
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        const Eigen::RowVector3d p = V.row(i);
        const double bump = 1.0 + 0.25 * std::exp(-4.0 * (p - Eigen::RowVector3d(0.6, 0.5, 0.62)).squaredNorm());
        V.row(i) = Eigen::RowVector3d(1.4 * p.x(), 1.0 * p.y(), 0.75 * p.z()) * bump;
    }
    return s.with_vertices(V);
}

/// Scratch directory removed at scope exit.
class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        m_path = std::filesystem::temp_directory_path() / ("mgcn_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(m_path);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(m_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return m_path / name; }
    const std::filesystem::path& path() const { return m_path; }

private:
    std::filesystem::path m_path;
};

} // namespace mgcn::test
