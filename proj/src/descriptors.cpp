#include "mgcn/descriptors.hpp"

#include "mgcn/binary_io.hpp"
#include "mgcn/error.hpp"
#include "mgcn/hash.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace mgcn {

namespace {

constexpr char kDescriptorMagic[9] = "MGCNDSC1";
constexpr std::uint32_t kDescriptorVersion = 1;

void check_basis(const SpectralBasis& basis)
{
    if (basis.size() < 2) throw ValidationError("descriptor: basis needs at least two eigenpairs");
}

std::string meta_to_text(const DescriptorMeta& m)
{
    std::ostringstream out;
    out << "type=" << m.type << '\n'
        << "basis_size=" << m.basis_size << '\n'
        << "scale_count=" << m.scale_count << '\n'
        << "sample_count=" << m.sample_count << '\n'
        << "bank_hash=" << hash_hex(m.bank_hash) << '\n'
        << "mesh_hash=" << hash_hex(m.mesh_hash) << '\n';
    return out.str();
}

DescriptorMeta meta_from_text(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const char* key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ValidationError(std::string("descriptor file lacks metadata '") + key + "'");
        return it->second;
    };
    DescriptorMeta m;
    try {
        m.type = get("type");
        m.basis_size = std::stoll(get("basis_size"));
        m.scale_count = std::stoll(get("scale_count"));
        m.sample_count = std::stoll(get("sample_count"));
        m.bank_hash = std::stoull(get("bank_hash"), nullptr, 16);
        m.mesh_hash = std::stoull(get("mesh_hash"), nullptr, 16);
    } catch (const std::logic_error&) {
        throw ValidationError("malformed descriptor metadata");
    }
    return m;
}

} // namespace

EnergyDecomposition energy_decomposition(const SpectralBasis& basis, const FilterBank& bank,
    const Eigen::MatrixXd& X, EnergyWeighting weighting)
{
    if (X.rows() != basis.num_vertices()) {
        throw ValidationError("energy_decomposition: function has " + std::to_string(X.rows())
            + " rows, basis has " + std::to_string(basis.num_vertices()) + " vertices");
    }
    const Eigen::Index k = basis.size();
    const Eigen::Index n = basis.num_vertices();
    const int p = weighting == EnergyWeighting::Lambda1 ? 1 : 2;

    // Constants carry no Dirichlet energy; dropping the j = 0 component makes
    // every entry, not just the total, invariant to translating X.
    Eigen::MatrixXd sigma = project(basis, X); // k x c
    sigma.row(0).setZero();
    Eigen::VectorXd G(k);
    for (Eigen::Index j = 0; j < k; ++j) G[j] = bank.frame_sum(basis.eigenvalues[j]);
    const Eigen::MatrixXd omega = G.asDiagonal() * sigma;

    // lambda_j^p with the j = 0 term dropped
    Eigen::VectorXd weight = basis.eigenvalues.array().pow(p);
    weight[0] = 0.0;

    EnergyDecomposition out;
    out.weighting = weighting;
    out.table.resize(bank.num_filters(), n);
    for (int m = 0; m < bank.num_filters(); ++m) {
        const Eigen::VectorXd g = filter_response(bank, m, basis.eigenvalues);
        const Eigen::MatrixXd W = basis.mass.area.asDiagonal() * (basis.eigenvectors * (g.asDiagonal() * sigma));
        const Eigen::MatrixXd U
            = basis.eigenvectors * (weight.cwiseProduct(g).asDiagonal() * omega);
        out.table.row(m) = W.cwiseProduct(U).rowwise().sum().transpose();
    }
    return out;
}

void DescriptorField::validate() const
{
    if (!values.allFinite()) throw NumericalError("descriptor field contains NaN or Inf");
    if (meta.sample_count != values.cols()) {
        throw ValidationError("descriptor field has " + std::to_string(values.cols()) + " columns but declares "
            + std::to_string(meta.sample_count));
    }
}

std::vector<Eigen::Index> stride_columns(Eigen::Index total, Eigen::Index num)
{
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(num));
    for (Eigen::Index i = 0; i < num; ++i) idx[static_cast<std::size_t>(i)] = i * total / num;
    return idx;
}

Eigen::MatrixXd resample_columns(const Eigen::MatrixXd& values, Eigen::Index num)
{
    if (num < 1) throw ValidationError("resample_columns: target dimension must be positive");
    if (values.cols() == num) return values;
    const auto idx = stride_columns(values.cols(), num);
    Eigen::MatrixXd out(values.rows(), num);
    for (Eigen::Index i = 0; i < num; ++i) out.col(i) = values.col(idx[static_cast<std::size_t>(i)]);
    return out;
}

DescriptorField weds(const SpectralBasis& basis, const FilterBank& bank, const EnergyDecomposition& energy, int num)
{
    if (num < 1 || num > 1024) throw ValidationError("weds: dimension must be in [1, 1024], got " + std::to_string(num));
    check_basis(basis);
    const Eigen::Index n = basis.num_vertices();
    if (energy.table.cols() != n || energy.table.rows() != bank.num_filters()) {
        throw ValidationError("weds: energy table does not match basis and bank");
    }
    const std::vector<int> scales = select_scales(num);
    const Eigen::MatrixXd E = energy.table.transpose(); // N x (K+1)
    const Eigen::Index per_scale = E.cols();
    Eigen::MatrixXd cascade(n, per_scale * static_cast<Eigen::Index>(scales.size()));
    for (std::size_t s = 0; s < scales.size(); ++s) {
        const int m = scales[s];
        if (m > bank.num_scales()) throw ValidationError("weds: bank has too few scales for index " + std::to_string(m));
        const Eigen::VectorXd g = filter_response(bank, m, basis.eigenvalues);
        // Column v of the wavelet matrix up to the positive factor a(v), which min-max removes.
        Eigen::MatrixXd psi = basis.eigenvectors * g.asDiagonal() * basis.eigenvectors.transpose();
        for (Eigen::Index v = 0; v < n; ++v) {
            auto col = psi.col(v);
            const double lo = col.minCoeff();
            const double span = col.maxCoeff() - lo;
            if (span > 0.0) {
                col = (col.array() - lo) / span;
            } else {
                col.setConstant(0.5);
            }
        }
        cascade.middleCols(static_cast<Eigen::Index>(s) * per_scale, per_scale) = psi.transpose() * E;
    }

    DescriptorField field;
    field.values = resample_columns(cascade, num);
    field.meta.type = "weds";
    field.meta.basis_size = basis.size();
    field.meta.scale_count = static_cast<std::int64_t>(scales.size());
    field.meta.sample_count = num;
    field.meta.bank_hash = bank.hash();
    field.validate();
    return field;
}

DescriptorField weds(const TriMesh& mesh, const SpectralBasis& basis, const FilterBank& bank, int num)
{
    if (mesh.num_vertices() != basis.num_vertices()) throw ValidationError("weds: mesh and basis sizes differ");
    const Eigen::MatrixXd X = mesh.vertices();
    const EnergyDecomposition energy = energy_decomposition(basis, bank, X, EnergyWeighting::Lambda2);
    DescriptorField field = weds(basis, bank, energy, num);
    field.meta.mesh_hash = mesh.content_hash();
    return field;
}

DescriptorField hks(const SpectralBasis& basis, int num)
{
    if (num < 1) throw ValidationError("hks: dimension must be positive");
    check_basis(basis);
    const Eigen::Index k = basis.size();
    const double lambda_1 = basis.eigenvalues[1];
    const double lambda_k = basis.eigenvalues[k - 1];
    if (!(lambda_1 > 0.0)) throw NumericalError("hks: first non-zero eigenvalue is not positive");
    const double t_min = 4.0 * std::log(10.0) / lambda_k;
    const double t_max = 4.0 * std::log(10.0) / lambda_1;
    Eigen::MatrixXd coefs(k, num);
    for (int i = 0; i < num; ++i) {
        const double u = num == 1 ? 0.0 : static_cast<double>(i) / (num - 1);
        const double t = std::exp(std::log(t_min) + u * (std::log(t_max) - std::log(t_min)));
        coefs.col(i) = (-basis.eigenvalues.array() * t).exp().matrix();
    }
    DescriptorField field;
    field.values = basis.eigenvectors.array().square().matrix() * coefs;
    field.meta.type = "hks";
    field.meta.basis_size = k;
    field.meta.sample_count = num;
    field.validate();
    return field;
}

DescriptorField wks(const SpectralBasis& basis, int num)
{
    if (num < 1) throw ValidationError("wks: dimension must be positive");
    check_basis(basis);
    const Eigen::Index k = basis.size();
    const Eigen::VectorXd ev = basis.eigenvalues.tail(k - 1);
    if (!(ev[0] > 0.0)) throw NumericalError("wks: first non-zero eigenvalue is not positive");
    const Eigen::VectorXd log_ev = ev.array().log().matrix();
    double e_min = log_ev[0];
    double e_max = log_ev[log_ev.size() - 1];
    double sigma = 7.0 * (e_max - e_min) / num;
    if (!(sigma > 0.0)) sigma = 1.0;
    e_min += 2.0 * sigma;
    e_max -= 2.0 * sigma;
    Eigen::MatrixXd coefs(k - 1, num);
    for (int i = 0; i < num; ++i) {
        const double e = num == 1 ? e_min : e_min + (e_max - e_min) * i / (num - 1.0);
        coefs.col(i) = (-(log_ev.array() - e).square() / (2.0 * sigma * sigma)).exp().matrix();
    }
    const Eigen::VectorXd scaling = coefs.colwise().sum().transpose();
    DescriptorField field;
    field.values = basis.eigenvectors.rightCols(k - 1).array().square().matrix() * coefs;
    for (int i = 0; i < num; ++i) {
        if (scaling[i] > 0.0) field.values.col(i) /= scaling[i];
    }
    field.meta.type = "wks";
    field.meta.basis_size = k;
    field.meta.sample_count = num;
    field.validate();
    return field;
}

double relative_drift(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("relative_drift: shape mismatch");
    const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

void write_descriptors(const std::filesystem::path& path, const DescriptorField& field)
{
    field.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write descriptor file " + path.string());
    io::write_magic(out, kDescriptorMagic);
    io::write_pod(out, kDescriptorVersion);
    io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(field.values.rows()));
    io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(field.values.cols()));
    io::write_string(out, meta_to_text(field.meta));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = field.values;
    out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(sizeof(double) * rows.size()));
    if (!out) throw ValidationError("failed writing descriptor file " + path.string());
}

DescriptorField read_descriptors(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open descriptor file " + path.string());
    io::expect_magic(in, kDescriptorMagic, "descriptor");
    if (io::read_pod<std::uint32_t>(in) != kDescriptorVersion) {
        throw ValidationError("unsupported descriptor file version");
    }
    const auto n = io::read_pod<std::uint64_t>(in);
    const auto d = io::read_pod<std::uint64_t>(in);
    if (n > (1ull << 32) || d > (1ull << 20) || n * d > (1ull << 34)) {
        throw ValidationError("corrupt descriptor header");
    }
    DescriptorField field;
    field.meta = meta_from_text(io::read_string(in, 1u << 16));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
        static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(sizeof(double) * rows.size()));
    if (!in) throw ValidationError("descriptor file truncated: " + path.string());
    field.values = rows;
    field.validate();
    return field;
}

void write_descriptors_csv(const std::filesystem::path& path, const DescriptorField& field)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << std::setprecision(17);
    out << "vertex";
    for (Eigen::Index c = 0; c < field.values.cols(); ++c) out << ",d" << c;
    out << '\n';
    for (Eigen::Index r = 0; r < field.values.rows(); ++r) {
        out << r;
        for (Eigen::Index c = 0; c < field.values.cols(); ++c) out << ',' << field.values(r, c);
        out << '\n';
    }
}

} // namespace mgcn
