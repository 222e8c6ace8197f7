#pragma once

#include "mgcn/spectral.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mgcn {

/// Constants of the Mexican-hat filter pair.
///   g(x)      = A x^2 exp(1 - x^2)
///   h(lambda) = B exp(-(C lambda / lambda_max)^3)
///   t_m       = exp(linspace(log(D / lambda_max), log(E / lambda_max), K))
struct FilterConstants {
    double A = 0.443;
    double B = 1.004;
    double C = 38.462;
    double D = 46.0;
    double E = 0.2;
};

/// Maximum allowed |G(lambda) - 1| for a usable bank.
inline constexpr double kFrameTolerance = 0.01;
inline constexpr int kDefaultScaleCount = 31;

class FilterBank {
public:
    FilterBank() = default;

    ///
    /// Builds a bank and checks the frame identity on the residual grid
    /// (`eigenvalues` plus 256 uniform samples on (0, lambda_max]).
    /// Throws NumericalError naming the worst eigenvalue when the residual
    /// exceeds the tolerance.
    ///
    static FilterBank build(double lambda_max, int num_scales = kDefaultScaleCount, const FilterConstants& c = {},
        const Eigen::VectorXd& eigenvalues = {}, double tolerance = kFrameTolerance);

    /// Same construction without the frame check.
    static FilterBank build_unchecked(double lambda_max, int num_scales, const FilterConstants& c);

    /// Filter value for index m: h(lambda) when m == 0, g(t_m lambda) otherwise.
    double g_of(int m, double lambda) const;

    /// G(lambda) = h^2 + sum_m g^2(t_m lambda).
    double frame_sum(double lambda) const;

    /// max |G - 1| over eigenvalues plus the uniform grid, and where it occurs.
    struct Residual {
        double value = 0.0;
        double at_lambda = 0.0;
    };
    Residual frame_residual(const Eigen::VectorXd& eigenvalues = {}) const;

    int num_scales() const { return static_cast<int>(m_scales.size()); }
    int num_filters() const { return num_scales() + 1; }
    double lambda_max() const { return m_lambda_max; }
    const std::vector<double>& scales() const { return m_scales; }
    const FilterConstants& constants() const { return m_constants; }

    /// Key-value text block: A, B, C, D, E, K, lambda_max.
    std::string to_text() const;
    static FilterBank from_text(const std::string& text);

    std::uint64_t hash() const;

private:
    FilterConstants m_constants;
    double m_lambda_max = 1.0;
    std::vector<double> m_scales;
};

///
/// Least-squares refit of A, B, C (D, E fixed) minimizing sum (G - 1)^2 over
/// the residual grid. Used when the stock constants miss tolerance on a
/// particular spectrum.
///
FilterConstants refit_constants(double lambda_max, int num_scales, const FilterConstants& start,
    const Eigen::VectorXd& eigenvalues = {});

///
/// Wavelet scale indices for an output dimension: floor(linspace(32, 1, n))
/// with its first and last entries removed, n = max(ceil(num / 32), 3) + 2.
///
std::vector<int> select_scales(int num);

/// Filter responses g_of(m, lambda_j) for all j (length k).
Eigen::VectorXd filter_response(const FilterBank& bank, int m, const Eigen::VectorXd& eigenvalues);

struct WaveletOptions {
    bool threshold = false;
    double epsilon = 1e-4;
};

///
/// N x N matrix whose column v is the wavelet psi_{t_m, v}
/// (the scaling function xi_v for m = 0):
///   column v = a(v) * sum_j g_of(m, lambda_j) phi_j(v) phi_j.
/// With thresholding, entries below epsilon * (column max |value|) are zeroed.
///
Eigen::MatrixXd wavelet_matrix(const SpectralBasis& basis, const FilterBank& bank, int m,
    const WaveletOptions& options = {});

/// Coefficient table of one function: (K+1) x N, row m holds W_f(t_m, .).
Eigen::MatrixXd wavelet_coeffs(const SpectralBasis& basis, const FilterBank& bank, const Eigen::VectorXd& f);

/// Inverse transform: sum_m sum_v a(v)^{-1} W_f(t_m, v) psi_{t_m, v}.
Eigen::VectorXd reconstruct(const SpectralBasis& basis, const FilterBank& bank, const Eigen::MatrixXd& coeffs);

/// L1-normalize every column. Throws ValidationError on a zero column.
Eigen::MatrixXd normalize_wavelet_columns(const Eigen::MatrixXd& psi);

} // namespace mgcn
