#pragma once

#include "mgcn/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>

namespace mgcn {

///
/// First k solutions of L phi = lambda A phi.
///
/// Eigenvalues are ascending with lambda_0 clamped to 0; eigenvectors are
/// A-orthonormal and sign-normalized so that the entry of largest magnitude
/// is positive.
///
struct SpectralBasis {
    Eigen::VectorXd eigenvalues;  ///< k
    Eigen::MatrixXd eigenvectors; ///< N x k
    MassDiagonal mass;

    Eigen::Index size() const { return eigenvalues.size(); }
    Eigen::Index num_vertices() const { return eigenvectors.rows(); }
    double lambda_max() const { return eigenvalues[eigenvalues.size() - 1]; }
};

struct EigenOptions {
    /// Eigen-residual tolerance, relative to lambda_{k-1} * ||A phi||.
    double tolerance = 1e-8;
    /// Meshes up to this size use the dense solver.
    Eigen::Index dense_threshold = 512;
    /// Operator applications allowed per requested eigenpair.
    int iterations_per_pair = 50;
    std::uint64_t seed = 0x5eed;
};

/// Smallest k eigenpairs of the pencil (L, A). Throws ValidationError when
/// k is out of range and NumericalError when the solver does not converge.
SpectralBasis eig_generalized(const SparseSymMatrix& L, const MassDiagonal& A, Eigen::Index k,
    const EigenOptions& options = {});

/// Convenience: Laplacian, mass and eigensolve in one call.
SpectralBasis compute_basis(const TriMesh& mesh, Eigen::Index k, const EigenOptions& options = {});

/// sigma_j = f^T A phi_j for every column of F (result is k x F.cols()).
Eigen::MatrixXd project(const SpectralBasis& basis, const Eigen::MatrixXd& F);
Eigen::VectorXd project(const SpectralBasis& basis, const Eigen::VectorXd& f);

/// Phi * sigma.
Eigen::MatrixXd synthesize(const SpectralBasis& basis, const Eigen::MatrixXd& sigma);
Eigen::VectorXd synthesize(const SpectralBasis& basis, const Eigen::VectorXd& sigma);

/// max_j ||L phi_j - lambda_j A phi_j|| / ||A phi_j||.
double max_eigen_residual(const SparseSymMatrix& L, const SpectralBasis& basis);

/// Basis cache file: magic, version, mesh hash, k, eigenvalues, mass, eigenvectors.
void write_basis(const std::filesystem::path& path, const SpectralBasis& basis, std::uint64_t mesh_hash);

struct CachedBasis {
    SpectralBasis basis;
    std::uint64_t mesh_hash = 0;
};
CachedBasis read_basis(const std::filesystem::path& path);

} // namespace mgcn
