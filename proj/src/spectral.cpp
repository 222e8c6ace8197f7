#include "mgcn/spectral.hpp"

#include "mgcn/binary_io.hpp"
#include "mgcn/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

namespace mgcn {

namespace {

constexpr char kBasisMagic[9] = "MGCNBAS1";
constexpr std::uint32_t kBasisVersion = 1;

struct RawEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

RawEigen solve_dense(const SparseSymMatrix& L, const MassDiagonal& A, Eigen::Index k)
{
    const Eigen::VectorXd inv_sqrt = A.area.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd M = inv_sqrt.asDiagonal() * Eigen::MatrixXd(L.matrix) * inv_sqrt.asDiagonal();
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("dense eigensolver failed");
    }
    return {solver.eigenvalues().head(k), inv_sqrt.asDiagonal() * solver.eigenvectors().leftCols(k)};
}

///
/// Shift-invert block Krylov solver for the pencil (L, A).
///
/// The operator OP = (L + delta A)^{-1} A is self-adjoint in the A-inner
/// product, so block Lanczos with full A-reorthogonalization builds the
/// search space. Rayleigh-Ritz is done with L itself; when the space reaches
/// its capacity it is compressed to the best Ritz vectors and expansion
/// continues from the unconverged ones.
///
class ShiftInvertLanczos {
public:
    ShiftInvertLanczos(const SparseSymMatrix& L, const MassDiagonal& A, Eigen::Index k, const EigenOptions& opt)
        : m_L(L.matrix)
        , m_a(A.area)
        , m_k(k)
        , m_opt(opt)
        , m_rng(opt.seed)
    {
        m_n = m_L.rows();
        m_block = std::clamp<Eigen::Index>(k, 1, 12);
        m_capacity = std::min(m_n, std::max(2 * k + 4 * m_block, k + 40));
        m_V.resize(m_n, m_capacity);
        m_LV.resize(m_n, m_capacity);

        const double spectral_scale = m_L.diagonal().sum() / A.total;
        m_delta = 1e-6 * spectral_scale;
        Eigen::SparseMatrix<double> K = m_L;
        for (Eigen::Index i = 0; i < m_n; ++i) {
            K.coeffRef(i, i) += m_delta * m_a[i];
        }
        m_factor.compute(K);
        if (m_factor.info() != Eigen::Success) {
            throw NumericalError("factorization of the shifted Laplacian failed");
        }
        m_fallback_scale = spectral_scale;
    }

    RawEigen run()
    {
        const long budget = static_cast<long>(m_opt.iterations_per_pair) * static_cast<long>(m_k);
        long applications = 0;

        Eigen::MatrixXd start(m_n, m_block);
        fill_random(start);
        Eigen::Index block_begin = m_dim;
        append_block(start);
        Eigen::Index block_size = m_dim - block_begin;

        Eigen::Index next_rr = std::min(m_capacity, m_k + m_block);
        for (;;) {
            while (m_dim < next_rr && m_dim < m_capacity) {
                Eigen::MatrixXd W = m_factor.solve(m_a.asDiagonal() * m_V.middleCols(block_begin, block_size));
                applications += block_size;
                const Eigen::Index before = m_dim;
                const Eigen::Index room = std::min<Eigen::Index>(W.cols(), m_capacity - m_dim);
                append_block(W.leftCols(room));
                block_begin = before;
                block_size = m_dim - before;
                if (block_size == 0) break;
            }

            // Rayleigh-Ritz with L on the current search space.
            const auto V = m_V.leftCols(m_dim);
            const auto LV = m_LV.leftCols(m_dim);
            Eigen::MatrixXd H = V.transpose() * LV;
            H = 0.5 * (H + H.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(H);
            if (rr.info() != Eigen::Success) {
                throw NumericalError("Rayleigh-Ritz eigensolve failed");
            }
            const Eigen::Index keep = std::min(m_dim, m_k + m_block);
            const Eigen::MatrixXd S = rr.eigenvectors().leftCols(keep);
            const Eigen::VectorXd theta = rr.eigenvalues().head(keep);
            const Eigen::MatrixXd Y = V * S;
            const Eigen::MatrixXd LY = LV * S;

            const double lambda_ref = (m_k >= 2 && theta[m_k - 1] > 0.0) ? theta[m_k - 1] : m_fallback_scale;
            Eigen::Index first_unconverged = m_k;
            for (Eigen::Index j = 0; j < std::min(m_k, keep); ++j) {
                const Eigen::VectorXd Ay = m_a.cwiseProduct(Y.col(j));
                const double residual = (LY.col(j) - theta[j] * Ay).norm();
                if (residual > m_opt.tolerance * lambda_ref * Ay.norm()) {
                    first_unconverged = j;
                    break;
                }
            }
            if (keep >= m_k && (first_unconverged == m_k || m_dim == m_n)) {
                return {theta.head(m_k), Y.leftCols(m_k)};
            }
            if (applications >= budget) {
                throw NumericalError("eigensolver did not converge within " + std::to_string(budget)
                    + " operator applications (eigenpair " + std::to_string(first_unconverged) + ")");
            }

            if (m_dim >= m_capacity) {
                // Compress to the retained Ritz vectors and expand from the unconverged ones.
                m_V.leftCols(keep) = Y;
                m_LV.leftCols(keep) = LY;
                m_dim = keep;
                block_begin = std::min(first_unconverged, keep - 1);
                block_size = std::min(m_block, keep - block_begin);
                next_rr = m_capacity;
            } else {
                next_rr = std::min(m_capacity, m_dim + std::max(m_block, m_k / 2));
            }
        }
    }

private:
    void fill_random(Eigen::MatrixXd& M)
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            for (Eigen::Index i = 0; i < M.rows(); ++i) {
                M(i, j) = normal(m_rng);
            }
        }
    }

    double a_norm(const Eigen::VectorXd& x) const { return std::sqrt(x.dot(m_a.cwiseProduct(x))); }

    // A-orthogonalize each column against the current space (two passes of
    // classical Gram-Schmidt) and append it; nearly dependent columns are
    // replaced by random directions.
    void append_block(const Eigen::MatrixXd& W)
    {
        for (Eigen::Index c = 0; c < W.cols() && m_dim < m_capacity; ++c) {
            Eigen::VectorXd w = W.col(c);
            for (int attempt = 0; attempt < 4; ++attempt) {
                const double before = a_norm(w);
                for (int pass = 0; pass < 2; ++pass) {
                    if (m_dim > 0) {
                        const auto V = m_V.leftCols(m_dim);
                        const Eigen::VectorXd coeff = V.transpose() * m_a.cwiseProduct(w);
                        w -= V * coeff;
                    }
                }
                const double after = a_norm(w);
                if (after > 1e-10 * before && after > 0.0) {
                    w /= after;
                    m_V.col(m_dim) = w;
                    m_LV.col(m_dim) = m_L * w;
                    ++m_dim;
                    break;
                }
                Eigen::MatrixXd r(m_n, 1);
                fill_random(r);
                w = r.col(0);
            }
        }
    }

    const Eigen::SparseMatrix<double>& m_L;
    const Eigen::VectorXd& m_a;
    Eigen::Index m_k;
    EigenOptions m_opt;
    std::mt19937_64 m_rng;

    Eigen::Index m_n = 0;
    Eigen::Index m_block = 1;
    Eigen::Index m_capacity = 0;
    Eigen::Index m_dim = 0;
    Eigen::MatrixXd m_V;
    Eigen::MatrixXd m_LV;
    double m_delta = 0.0;
    double m_fallback_scale = 1.0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> m_factor;
};

void normalize_signs(Eigen::MatrixXd& vectors)
{
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        const double largest = vectors.col(j).cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            if (std::abs(vectors(i, j)) >= largest * (1.0 - 1e-9)) {
                if (vectors(i, j) < 0.0) vectors.col(j) *= -1.0;
                break;
            }
        }
    }
}

} // namespace

SpectralBasis eig_generalized(const SparseSymMatrix& L, const MassDiagonal& A, Eigen::Index k,
    const EigenOptions& options)
{
    const Eigen::Index n = L.dim();
    if (k < 1 || k > n) {
        throw ValidationError("eig_generalized: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n)
            + "]");
    }
    if (A.area.size() != n) {
        throw ValidationError("eig_generalized: mass diagonal size does not match the Laplacian");
    }
    if ((A.area.array() <= 0.0).any()) {
        throw ValidationError("eig_generalized: mass diagonal must be positive");
    }

    RawEigen raw;
    if (n <= options.dense_threshold || 4 * k >= n) {
        raw = solve_dense(L, A, k);
    } else {
        raw = ShiftInvertLanczos(L, A, k, options).run();
    }

    SpectralBasis basis;
    basis.eigenvalues = raw.values;
    basis.eigenvectors = std::move(raw.vectors);
    basis.mass = A;
    // The mesh is validated connected, so the kernel is one-dimensional.
    basis.eigenvalues[0] = 0.0;
    normalize_signs(basis.eigenvectors);
    return basis;
}

SpectralBasis compute_basis(const TriMesh& mesh, Eigen::Index k, const EigenOptions& options)
{
    return eig_generalized(cotangent_laplacian(mesh), lumped_areas(mesh), k, options);
}

Eigen::MatrixXd project(const SpectralBasis& basis, const Eigen::MatrixXd& F)
{
    if (F.rows() != basis.num_vertices()) {
        throw ValidationError("project: function has " + std::to_string(F.rows()) + " rows, basis has "
            + std::to_string(basis.num_vertices()) + " vertices");
    }
    return basis.eigenvectors.transpose() * (basis.mass.area.asDiagonal() * F);
}

Eigen::VectorXd project(const SpectralBasis& basis, const Eigen::VectorXd& f)
{
    return project(basis, Eigen::MatrixXd(f)).col(0);
}

Eigen::MatrixXd synthesize(const SpectralBasis& basis, const Eigen::MatrixXd& sigma)
{
    if (sigma.rows() != basis.size()) {
        throw ValidationError("synthesize: coefficient count " + std::to_string(sigma.rows())
            + " does not match basis size " + std::to_string(basis.size()));
    }
    return basis.eigenvectors * sigma;
}

Eigen::VectorXd synthesize(const SpectralBasis& basis, const Eigen::VectorXd& sigma)
{
    return synthesize(basis, Eigen::MatrixXd(sigma)).col(0);
}

double max_eigen_residual(const SparseSymMatrix& L, const SpectralBasis& basis)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < basis.size(); ++j) {
        const Eigen::VectorXd Aphi = basis.mass.area.cwiseProduct(basis.eigenvectors.col(j));
        const Eigen::VectorXd r = L.matrix * basis.eigenvectors.col(j) - basis.eigenvalues[j] * Aphi;
        worst = std::max(worst, r.norm() / Aphi.norm());
    }
    return worst;
}

void write_basis(const std::filesystem::path& path, const SpectralBasis& basis, std::uint64_t mesh_hash)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write basis file " + path.string());
    io::write_magic(out, kBasisMagic);
    io::write_pod(out, kBasisVersion);
    io::write_pod(out, mesh_hash);
    io::write_matrix(out, basis.eigenvalues);
    io::write_matrix(out, basis.mass.area);
    io::write_pod(out, basis.mass.total);
    io::write_matrix(out, basis.eigenvectors);
    if (!out) throw ValidationError("failed writing basis file " + path.string());
}

CachedBasis read_basis(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open basis file " + path.string());
    io::expect_magic(in, kBasisMagic, "basis");
    const auto version = io::read_pod<std::uint32_t>(in);
    if (version != kBasisVersion) throw ValidationError("unsupported basis file version");
    CachedBasis cached;
    cached.mesh_hash = io::read_pod<std::uint64_t>(in);
    cached.basis.eigenvalues = io::read_matrix(in).col(0);
    cached.basis.mass.area = io::read_matrix(in).col(0);
    cached.basis.mass.total = io::read_pod<double>(in);
    cached.basis.eigenvectors = io::read_matrix(in);
    if (cached.basis.eigenvectors.rows() != cached.basis.mass.area.size()
        || cached.basis.eigenvectors.cols() != cached.basis.eigenvalues.size()) {
        throw ValidationError("inconsistent basis file " + path.string());
    }
    return cached;
}

} // namespace mgcn
