#include "mgcn/wavelet.hpp"

#include "mgcn/error.hpp"
#include "mgcn/hash.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace mgcn {

namespace {

std::vector<double> residual_grid(double lambda_max, const Eigen::VectorXd& eigenvalues)
{
    std::vector<double> grid(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
    for (int i = 1; i <= 256; ++i) {
        grid.push_back(lambda_max * i / 256.0);
    }
    return grid;
}

} // namespace

FilterBank FilterBank::build_unchecked(double lambda_max, int num_scales, const FilterConstants& c)
{
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw ValidationError("filter bank: lambda_max must be positive");
    }
    if (num_scales < 1) {
        throw ValidationError("filter bank: need at least one wavelet scale");
    }
    FilterBank bank;
    bank.m_constants = c;
    bank.m_lambda_max = lambda_max;
    const double lo = std::log(c.D / lambda_max);
    const double hi = std::log(c.E / lambda_max);
    bank.m_scales.resize(static_cast<std::size_t>(num_scales));
    for (int m = 0; m < num_scales; ++m) {
        const double x = num_scales == 1 ? lo : lo + (hi - lo) * m / (num_scales - 1.0);
        bank.m_scales[static_cast<std::size_t>(m)] = std::exp(x);
    }
    return bank;
}

FilterBank FilterBank::build(double lambda_max, int num_scales, const FilterConstants& c,
    const Eigen::VectorXd& eigenvalues, double tolerance)
{
    FilterBank bank = build_unchecked(lambda_max, num_scales, c);
    const Residual r = bank.frame_residual(eigenvalues);
    if (r.value > tolerance) {
        std::ostringstream msg;
        msg << "filter bank violates the frame identity: |G - 1| = " << r.value << " at lambda = " << r.at_lambda
            << " (tolerance " << tolerance << ")";
        throw NumericalError(msg.str());
    }
    return bank;
}

double FilterBank::g_of(int m, double lambda) const
{
    if (m < 0 || m > num_scales()) {
        throw ValidationError("filter index " + std::to_string(m) + " outside [0, " + std::to_string(num_scales())
            + "]");
    }
    if (m == 0) {
        const double x = m_constants.C * lambda / m_lambda_max;
        return m_constants.B * std::exp(-x * x * x);
    }
    const double x = m_scales[static_cast<std::size_t>(m - 1)] * lambda;
    return m_constants.A * x * x * std::exp(1.0 - x * x);
}

double FilterBank::frame_sum(double lambda) const
{
    double total = 0.0;
    for (int m = 0; m <= num_scales(); ++m) {
        const double g = g_of(m, lambda);
        total += g * g;
    }
    return total;
}

FilterBank::Residual FilterBank::frame_residual(const Eigen::VectorXd& eigenvalues) const
{
    Residual worst;
    for (const double lambda : residual_grid(m_lambda_max, eigenvalues)) {
        const double r = std::abs(frame_sum(lambda) - 1.0);
        if (r > worst.value) {
            worst = {r, lambda};
        }
    }
    return worst;
}

std::string FilterBank::to_text() const
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "A = " << m_constants.A << '\n';
    out << "B = " << m_constants.B << '\n';
    out << "C = " << m_constants.C << '\n';
    out << "D = " << m_constants.D << '\n';
    out << "E = " << m_constants.E << '\n';
    out << "K = " << num_scales() << '\n';
    out << "lambda_max = " << m_lambda_max << '\n';
    return out.str();
}

FilterBank FilterBank::from_text(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto get = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ValidationError(std::string("filter bank text lacks key '") + key + "'");
        return std::stod(it->second);
    };
    FilterConstants c{get("A"), get("B"), get("C"), get("D"), get("E")};
    return build_unchecked(get("lambda_max"), static_cast<int>(get("K")), c);
}

std::uint64_t FilterBank::hash() const
{
    Fnv1a h;
    h.update_value(m_constants.A);
    h.update_value(m_constants.B);
    h.update_value(m_constants.C);
    h.update_value(m_constants.D);
    h.update_value(m_constants.E);
    h.update_value(num_scales());
    h.update_value(m_lambda_max);
    return h.digest();
}

FilterConstants refit_constants(double lambda_max, int num_scales, const FilterConstants& start,
    const Eigen::VectorXd& eigenvalues)
{
    const std::vector<double> grid = residual_grid(lambda_max, eigenvalues);
    auto residuals = [&](const Eigen::Vector3d& p) {
        FilterConstants c = start;
        c.A = p[0];
        c.B = p[1];
        c.C = p[2];
        const FilterBank bank = FilterBank::build_unchecked(lambda_max, num_scales, c);
        Eigen::VectorXd r(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] = bank.frame_sum(grid[i]) - 1.0;
        }
        return r;
    };

    // Levenberg-Marquardt with a central-difference Jacobian.
    Eigen::Vector3d p(start.A, start.B, start.C);
    Eigen::VectorXd r = residuals(p);
    double cost = r.squaredNorm();
    double damping = 1e-3;
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::MatrixXd J(r.size(), 3);
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
            Eigen::Vector3d hi = p, lo = p;
            hi[k] += h;
            lo[k] -= h;
            J.col(k) = (residuals(hi) - residuals(lo)) / (2.0 * h);
        }
        const Eigen::Matrix3d JtJ = J.transpose() * J;
        const Eigen::Vector3d Jtr = J.transpose() * r;
        bool improved = false;
        for (int tries = 0; tries < 20 && !improved; ++tries) {
            Eigen::Matrix3d M = JtJ;
            M.diagonal() += damping * JtJ.diagonal().cwiseMax(1e-12);
            const Eigen::Vector3d step = M.ldlt().solve(-Jtr);
            const Eigen::Vector3d candidate = p + step;
            if ((candidate.array() <= 0.0).any()) {
                damping *= 10.0;
                continue;
            }
            const Eigen::VectorXd rc = residuals(candidate);
            const double c2 = rc.squaredNorm();
            if (c2 < cost) {
                const double gain = (cost - c2) / std::max(cost, 1e-300);
                p = candidate;
                r = rc;
                cost = c2;
                damping = std::max(damping / 10.0, 1e-12);
                improved = true;
                if (gain < 1e-12) iter = 200;
            } else {
                damping *= 10.0;
            }
        }
        if (!improved) break;
    }
    FilterConstants out = start;
    out.A = p[0];
    out.B = p[1];
    out.C = p[2];
    return out;
}

std::vector<int> select_scales(int num)
{
    if (num < 1) throw ValidationError("select_scales: output dimension must be at least 1");
    const int blocks = std::max((num + 31) / 32, 3);
    const int count = blocks + 2;
    // Matches numpy/MATLAB linspace: start + i * step, with the last point pinned to the stop value.
    const double step = (1.0 - 32.0) / (count - 1);
    std::vector<int> points(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double x = (i == count - 1) ? 1.0 : 32.0 + i * step;
        points[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(x));
    }
    return {points.begin() + 1, points.end() - 1};
}

Eigen::VectorXd filter_response(const FilterBank& bank, int m, const Eigen::VectorXd& eigenvalues)
{
    Eigen::VectorXd g(eigenvalues.size());
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
        g[j] = bank.g_of(m, eigenvalues[j]);
    }
    return g;
}

Eigen::MatrixXd wavelet_matrix(const SpectralBasis& basis, const FilterBank& bank, int m,
    const WaveletOptions& options)
{
    const Eigen::VectorXd g = filter_response(bank, m, basis.eigenvalues);
    const auto& Phi = basis.eigenvectors;
    // Psi = Phi diag(g) Phi^T diag(a); column v is the wavelet centred at v.
    Eigen::MatrixXd psi = (Phi * g.asDiagonal()) * Phi.transpose();
    psi = psi * basis.mass.area.asDiagonal();
    if (options.threshold) {
        for (Eigen::Index v = 0; v < psi.cols(); ++v) {
            const double cutoff = options.epsilon * psi.col(v).cwiseAbs().maxCoeff();
            psi.col(v) = psi.col(v).unaryExpr([cutoff](double x) { return std::abs(x) < cutoff ? 0.0 : x; });
        }
    }
    return psi;
}

Eigen::MatrixXd wavelet_coeffs(const SpectralBasis& basis, const FilterBank& bank, const Eigen::VectorXd& f)
{
    const Eigen::VectorXd sigma = project(basis, f);
    Eigen::MatrixXd W(bank.num_filters(), basis.num_vertices());
    for (int m = 0; m <= bank.num_scales(); ++m) {
        const Eigen::VectorXd g = filter_response(bank, m, basis.eigenvalues);
        W.row(m) = (basis.mass.area.cwiseProduct(basis.eigenvectors * g.cwiseProduct(sigma))).transpose();
    }
    return W;
}

Eigen::VectorXd reconstruct(const SpectralBasis& basis, const FilterBank& bank, const Eigen::MatrixXd& coeffs)
{
    if (coeffs.rows() != bank.num_filters() || coeffs.cols() != basis.num_vertices()) {
        throw ValidationError("reconstruct: coefficient table must be (K+1) x N");
    }
    // sum_v a(v)^{-1} W(m,v) psi_{m,v} = Phi diag(g_m) Phi^T W(m,.)^T
    Eigen::VectorXd spectral = Eigen::VectorXd::Zero(basis.size());
    for (int m = 0; m <= bank.num_scales(); ++m) {
        const Eigen::VectorXd g = filter_response(bank, m, basis.eigenvalues);
        spectral += g.cwiseProduct(basis.eigenvectors.transpose() * coeffs.row(m).transpose());
    }
    return basis.eigenvectors * spectral;
}

Eigen::MatrixXd normalize_wavelet_columns(const Eigen::MatrixXd& psi)
{
    Eigen::MatrixXd out = psi;
    for (Eigen::Index v = 0; v < psi.cols(); ++v) {
        const double l1 = psi.col(v).cwiseAbs().sum();
        if (!(l1 > 0.0)) {
            throw ValidationError("normalize_wavelet_columns: column " + std::to_string(v) + " is zero");
        }
        out.col(v) /= l1;
    }
    return out;
}

} // namespace mgcn
