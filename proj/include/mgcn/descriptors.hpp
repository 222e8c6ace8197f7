#pragma once

#include "mgcn/spectral.hpp"
#include "mgcn/wavelet.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>

namespace mgcn {

/// Which power of lambda weights the decomposed energy.
enum class EnergyWeighting {
    Lambda1, ///< diagnostic: totals add up to the Dirichlet energy
    Lambda2, ///< scale-invariant variant used by WEDS
};

///
/// Per-scale, per-vertex energy table: row m is eps_{t_m}(.), m = 0..K.
///
struct EnergyDecomposition {
    Eigen::MatrixXd table; ///< (K+1) x N
    EnergyWeighting weighting = EnergyWeighting::Lambda2;

    double total() const { return table.sum(); }
};

///
/// eps_{t_m}(v) = sum_{j>=1} lambda_j^p sum_i gamma_ij(t_m, v) omega_ij, where
/// gamma_ij(t_m, v) = W_i(t_m, v) g_m(lambda_j) phi_j(v) is the phi_j-component
/// of the wavelet atom at (t_m, v) and omega_ij = sum_{m,v} gamma_ij = G(lambda_j) sigma_ij.
/// X holds the coordinate functions (N x 3).
///
EnergyDecomposition energy_decomposition(const SpectralBasis& basis, const FilterBank& bank,
    const Eigen::MatrixXd& X, EnergyWeighting weighting = EnergyWeighting::Lambda2);

struct DescriptorMeta {
    std::string type;            ///< "weds", "hks", "wks", "mgcn", ...
    std::int64_t basis_size = 0; ///< k
    std::int64_t scale_count = 0;
    std::int64_t sample_count = 0; ///< d
    std::uint64_t bank_hash = 0;
    std::uint64_t mesh_hash = 0;
};

struct DescriptorField {
    Eigen::MatrixXd values; ///< N x d
    DescriptorMeta meta;

    Eigen::Index num_vertices() const { return values.rows(); }
    Eigen::Index dim() const { return values.cols(); }

    /// Throws NumericalError on NaN/Inf, ValidationError when d != sample_count.
    void validate() const;
};

///
/// Wavelet energy decomposition signature. `num` <= 1024 columns, built from
/// the scales select_scales(num), each contributing K+1 energies, then
/// uniformly strided down to exactly `num`.
///
DescriptorField weds(const TriMesh& mesh, const SpectralBasis& basis, const FilterBank& bank, int num);

/// Same, with a precomputed lambda^2 energy table.
DescriptorField weds(const SpectralBasis& basis, const FilterBank& bank, const EnergyDecomposition& energy, int num);

/// Heat kernel signature at `num` log-spaced times in [4 ln10 / lambda_max, 4 ln10 / lambda_1].
DescriptorField hks(const SpectralBasis& basis, int num);

/// Wave kernel signature with `num` energies spread over the log-spectrum.
DescriptorField wks(const SpectralBasis& basis, int num);

/// Indices floor(i * total / num), i = 0..num-1.
std::vector<Eigen::Index> stride_columns(Eigen::Index total, Eigen::Index num);

/// Resample columns to `num` by the same striding (repeating columns when num > d).
Eigen::MatrixXd resample_columns(const Eigen::MatrixXd& values, Eigen::Index num);

/// Max over entries of |a - b| / max(|a|_inf, tiny); used to report value drift.
double relative_drift(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

void write_descriptors(const std::filesystem::path& path, const DescriptorField& field);
DescriptorField read_descriptors(const std::filesystem::path& path);

/// CSV with a header row and 17 significant digits.
void write_descriptors_csv(const std::filesystem::path& path, const DescriptorField& field);

} // namespace mgcn
