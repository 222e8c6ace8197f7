#include "mgcn/model.hpp"

#include "mgcn/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

namespace mgcn {

std::string to_string(OperatorKind kind)
{
    return kind == OperatorKind::Wavelet ? "wavelet" : "chebyshev";
}

OperatorKind operator_kind_from_string(const std::string& s)
{
    if (s == "wavelet") return OperatorKind::Wavelet;
    if (s == "chebyshev") return OperatorKind::Chebyshev;
    throw ValidationError("unknown operator kind '" + s + "'");
}

const Eigen::MatrixXd& OperatorSet::at(int index) const
{
    const auto it = ops.find(index);
    if (it == ops.end()) throw ValidationError("operator set lacks scale index " + std::to_string(index));
    return it->second;
}

OperatorSet wavelet_operators(const SpectralBasis& basis, const FilterBank& bank, const std::vector<int>& indices)
{
    OperatorSet set;
    set.kind = OperatorKind::Wavelet;
    for (const int m : indices) {
        if (set.ops.count(m)) continue;
        set.ops.emplace(m, normalize_wavelet_columns(wavelet_matrix(basis, bank, m)));
    }
    return set;
}

OperatorSet chebyshev_operators(const TriMesh& mesh, int orders)
{
    if (orders < 1) throw ValidationError("chebyshev_operators: need at least one order");
    const Eigen::Index n = mesh.num_vertices();
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : unique_edges(mesh)) {
        adj(i, j) = 1.0;
        adj(j, i) = 1.0;
    }
    const Eigen::VectorXd inv_sqrt_deg = adj.rowwise().sum().cwiseSqrt().cwiseInverse();
    // L_sym - I = -D^{-1/2} A D^{-1/2}; spectrum in [-1, 1].
    const Eigen::MatrixXd rescaled = -(inv_sqrt_deg.asDiagonal() * adj * inv_sqrt_deg.asDiagonal());

    OperatorSet set;
    set.kind = OperatorKind::Chebyshev;
    Eigen::MatrixXd prev = Eigen::MatrixXd::Identity(n, n);
    set.ops.emplace(0, prev);
    if (orders == 1) return set;
    Eigen::MatrixXd cur = rescaled;
    set.ops.emplace(1, cur);
    for (int m = 2; m < orders; ++m) {
        Eigen::MatrixXd next = 2.0 * rescaled * cur - prev;
        prev = std::move(cur);
        cur = std::move(next);
        set.ops.emplace(m, cur);
    }
    return set;
}

std::vector<int> default_layer_scales(OperatorKind kind, int count)
{
    if (count < 1) throw ValidationError("a layer needs at least one scale");
    std::vector<int> scales;
    if (kind == OperatorKind::Chebyshev) {
        for (int m = 0; m < count; ++m) scales.push_back(m);
        return scales;
    }
    if (count > 31) throw ValidationError("at most 31 wavelet scales per layer");
    scales = select_scales(32 * count);
    scales.resize(static_cast<std::size_t>(count));
    return scales;
}

Eigen::MatrixXd elu(const Eigen::MatrixXd& x)
{
    return x.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
}

Eigen::MatrixXd elu_derivative(const Eigen::MatrixXd& x)
{
    return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
}

MinMax column_range(const Eigen::MatrixXd& x)
{
    return {x.colwise().minCoeff(), x.colwise().maxCoeff()};
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& x, const MinMax& range)
{
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double span = range.hi[c] - range.lo[c];
        if (span > 0.0) {
            z.col(c) = (x.col(c).array() - range.lo[c]) / span;
        } else {
            z.col(c).setConstant(0.5);
        }
    }
    return z;
}

Eigen::MatrixXd minmax_backward(const Eigen::MatrixXd& dz, const MinMax& range)
{
    Eigen::MatrixXd dx(dz.rows(), dz.cols());
    for (Eigen::Index c = 0; c < dz.cols(); ++c) {
        const double span = range.hi[c] - range.lo[c];
        if (span > 0.0) {
            dx.col(c) = dz.col(c) / span;
        } else {
            dx.col(c).setZero();
        }
    }
    return dx;
}

MgconvLayer::MgconvLayer(int in, int out, std::vector<int> scales)
    : m_in(in)
    , m_out(out)
    , m_scales(std::move(scales))
{
    if (in < 1 || out < 1) throw ValidationError("MGCONV layer dimensions must be positive");
    if (m_scales.empty()) throw ValidationError("MGCONV layer needs at least one scale");
    m_weights.assign(m_scales.size(), Eigen::MatrixXd::Zero(in, out));
}

Eigen::MatrixXd MgconvLayer::forward(const Eigen::MatrixXd& X, const OperatorSet& ops, MgconvCache* cache,
    const MinMax* frozen) const
{
    if (X.cols() != m_in) {
        throw ValidationError("MGCONV expects " + std::to_string(m_in) + " input channels, got "
            + std::to_string(X.cols()));
    }
    if (X.rows() != ops.num_vertices()) throw ValidationError("MGCONV input rows do not match the operator size");
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.rows(), m_out);
    std::vector<Eigen::MatrixXd> projected;
    projected.reserve(m_scales.size());
    for (std::size_t s = 0; s < m_scales.size(); ++s) {
        Eigen::MatrixXd Y = ops.at(m_scales[s]).transpose() * X;
        S.noalias() += Y * m_weights[s];
        if (cache) projected.push_back(std::move(Y));
    }
    const Eigen::MatrixXd E = elu(S);
    const MinMax range = frozen ? *frozen : column_range(E);
    if (cache) {
        cache->input = X;
        cache->projected = std::move(projected);
        cache->pre = S;
        cache->range = range;
    }
    return minmax_normalize(E, range);
}

MgconvLayer::Grads MgconvLayer::backward(const MgconvCache& cache, const OperatorSet& ops, const Eigen::MatrixXd& dZ) const
{
    const Eigen::MatrixXd dS = minmax_backward(dZ, cache.range).cwiseProduct(elu_derivative(cache.pre));
    Grads g;
    g.dX = Eigen::MatrixXd::Zero(cache.input.rows(), m_in);
    g.dW.resize(m_scales.size());
    for (std::size_t s = 0; s < m_scales.size(); ++s) {
        g.dW[s] = cache.projected[s].transpose() * dS;
        g.dX.noalias() += ops.at(m_scales[s]) * (dS * m_weights[s].transpose());
    }
    return g;
}

FcLayer::FcLayer(int in, int out)
    : m_weight(Eigen::MatrixXd::Zero(in, out))
    , m_bias(Eigen::MatrixXd::Zero(1, out))
{
    if (in < 1 || out < 1) throw ValidationError("FC layer dimensions must be positive");
}

Eigen::MatrixXd FcLayer::forward(const Eigen::MatrixXd& X) const
{
    if (X.cols() != m_weight.rows()) throw ValidationError("FC layer input dimension mismatch");
    Eigen::MatrixXd Y = X * m_weight;
    Y.rowwise() += m_bias.row(0);
    return Y;
}

FcLayer::Grads FcLayer::backward(const Eigen::MatrixXd& X, const Eigen::MatrixXd& dY) const
{
    return {dY * m_weight.transpose(), X.transpose() * dY, dY.colwise().sum()};
}

Architecture Architecture::parse(const std::string& text)
{
    Architecture arch;
    std::string compact;
    for (const char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
    }
    if (compact.empty()) throw ValidationError("empty architecture string");
    static const std::regex conv_re(R"((?:(\d+)[xX*])?MGCONV(\d+)\((\d+)\))");
    static const std::regex fc_re(R"(FC(\d+))");
    std::stringstream ss(compact);
    std::string term;
    while (std::getline(ss, term, '+')) {
        std::smatch m;
        if (arch.fc) throw ValidationError("architecture: FC must be the last term");
        if (std::regex_match(term, m, conv_re)) {
            const int repeat = m[1].matched ? std::stoi(m[1].str()) : 1;
            const Conv conv{std::stoi(m[2].str()), std::stoi(m[3].str())};
            if (repeat < 1 || conv.out < 1 || conv.scales < 1) {
                throw ValidationError("architecture: non-positive size in '" + term + "'");
            }
            for (int r = 0; r < repeat; ++r) arch.convs.push_back(conv);
        } else if (std::regex_match(term, m, fc_re)) {
            arch.fc = std::stoi(m[1].str());
            if (*arch.fc < 1) throw ValidationError("architecture: non-positive FC size");
        } else {
            throw ValidationError("architecture: cannot parse term '" + term + "'");
        }
    }
    if (arch.convs.empty()) throw ValidationError("architecture needs at least one MGCONV layer");
    return arch;
}

std::string Architecture::to_string() const
{
    std::string out;
    for (const auto& c : convs) {
        if (!out.empty()) out += '+';
        out += "MGCONV" + std::to_string(c.out) + "(" + std::to_string(c.scales) + ")";
    }
    if (fc) out += "+FC" + std::to_string(*fc);
    return out;
}

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

void glorot(Eigen::MatrixXd& w, std::mt19937_64& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = limit * (2.0 * uniform01(rng) - 1.0);
    }
}

} // namespace

MgcnModel make_model_skeleton(const Architecture& arch, int input_dim, OperatorKind kind,
    std::vector<std::vector<int>> layer_scales, std::optional<int> head_classes)
{
    if (input_dim < 1) throw ValidationError("model input dimension must be positive");
    if (layer_scales.size() != arch.convs.size()) throw ValidationError("one scale list per MGCONV layer required");
    MgcnModel model;
    model.m_arch = arch;
    model.m_kind = kind;
    model.m_input_dim = input_dim;
    int in = input_dim;
    for (std::size_t l = 0; l < arch.convs.size(); ++l) {
        if (static_cast<int>(layer_scales[l].size()) != arch.convs[l].scales) {
            throw ValidationError("layer " + std::to_string(l) + " scale list does not match the architecture");
        }
        model.m_convs.emplace_back(in, arch.convs[l].out, std::move(layer_scales[l]));
        in = arch.convs[l].out;
    }
    if (arch.fc) model.m_fc.emplace(in, *arch.fc);
    if (head_classes) model.m_head.emplace(model.output_dim(), *head_classes);
    return model;
}

MgcnModel MgcnModel::create(const Architecture& arch, int input_dim, OperatorKind kind, std::mt19937_64& rng)
{
    std::vector<std::vector<int>> scales;
    for (const auto& c : arch.convs) scales.push_back(default_layer_scales(kind, c.scales));
    MgcnModel model = make_model_skeleton(arch, input_dim, kind, std::move(scales), std::nullopt);
    for (auto& layer : model.m_convs) {
        for (auto& w : layer.weights()) glorot(w, rng);
    }
    if (model.m_fc) glorot(model.m_fc->weight(), rng);
    return model;
}

void MgcnModel::add_head(int classes, std::mt19937_64& rng)
{
    m_head.emplace(output_dim(), classes);
    glorot(m_head->weight(), rng);
}

int MgcnModel::output_dim() const
{
    if (m_fc) return m_fc->out_dim();
    return m_convs.empty() ? m_input_dim : m_convs.back().out_dim();
}

std::vector<int> MgcnModel::required_scales() const
{
    std::vector<int> all;
    for (const auto& layer : m_convs) all.insert(all.end(), layer.scales().begin(), layer.scales().end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

Eigen::MatrixXd MgcnModel::forward(const Eigen::MatrixXd& X0, const OperatorSet& ops, ModelCache* cache) const
{
    if (X0.cols() != m_input_dim) {
        throw ValidationError("model expects " + std::to_string(m_input_dim) + "-dimensional input, got "
            + std::to_string(X0.cols()));
    }
    if (ops.kind != m_kind) throw ValidationError("operator set kind does not match the model");
    Eigen::MatrixXd x = X0;
    if (cache) {
        cache->input = X0;
        cache->convs.assign(m_convs.size(), {});
    }
    for (std::size_t l = 0; l < m_convs.size(); ++l) {
        x = m_convs[l].forward(x, ops, cache ? &cache->convs[l] : nullptr);
    }
    if (cache) cache->conv_out = x;
    if (m_fc) x = m_fc->forward(x);
    if (cache) cache->fc_out = x;
    return x;
}

Eigen::MatrixXd MgcnModel::logits(const Eigen::MatrixXd& X0, const OperatorSet& ops, ModelCache* cache) const
{
    if (!m_head) throw ValidationError("model has no classification head");
    return m_head->forward(forward(X0, ops, cache));
}

std::vector<Eigen::MatrixXd*> MgcnModel::parameters(bool include_head)
{
    std::vector<Eigen::MatrixXd*> p;
    for (auto& layer : m_convs) {
        for (auto& w : layer.weights()) p.push_back(&w);
    }
    if (m_fc) {
        p.push_back(&m_fc->weight());
        p.push_back(&m_fc->bias());
    }
    if (include_head && m_head) {
        p.push_back(&m_head->weight());
        p.push_back(&m_head->bias());
    }
    return p;
}

std::vector<const Eigen::MatrixXd*> MgcnModel::parameters(bool include_head) const
{
    auto p = const_cast<MgcnModel*>(this)->parameters(include_head);
    return {p.begin(), p.end()};
}

std::vector<Eigen::MatrixXd> MgcnModel::backward(const ModelCache& cache, const OperatorSet& ops,
    const Eigen::MatrixXd& dOut, bool through_head) const
{
    Eigen::MatrixXd d = dOut;
    Eigen::MatrixXd head_dW, head_db;
    if (through_head) {
        if (!m_head) throw ValidationError("model has no classification head");
        auto g = m_head->backward(cache.fc_out, d);
        head_dW = std::move(g.dW);
        head_db = std::move(g.db);
        d = std::move(g.dX);
    }
    Eigen::MatrixXd fc_dW, fc_db;
    if (m_fc) {
        auto g = m_fc->backward(cache.conv_out, d);
        fc_dW = std::move(g.dW);
        fc_db = std::move(g.db);
        d = std::move(g.dX);
    }
    std::vector<std::vector<Eigen::MatrixXd>> conv_grads(m_convs.size());
    for (std::size_t l = m_convs.size(); l-- > 0;) {
        auto g = m_convs[l].backward(cache.convs[l], ops, d);
        conv_grads[l] = std::move(g.dW);
        if (l > 0) d = std::move(g.dX);
    }
    std::vector<Eigen::MatrixXd> grads;
    for (auto& layer : conv_grads) {
        for (auto& w : layer) grads.push_back(std::move(w));
    }
    if (m_fc) {
        grads.push_back(std::move(fc_dW));
        grads.push_back(std::move(fc_db));
    }
    if (through_head) {
        grads.push_back(std::move(head_dW));
        grads.push_back(std::move(head_db));
    }
    return grads;
}

LossResult cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels)
{
    const Eigen::Index n = logits.rows();
    const Eigen::Index d = logits.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ValidationError("cross_entropy: one label per row required");
    if (n == 0) throw ValidationError("cross_entropy: empty batch");
    LossResult r;
    r.grad.resize(n, d);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= d) {
            throw ValidationError("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(d) + ")");
        }
        const double mx = logits.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
        const double z = e.sum();
        total += std::log(z) + mx - logits(i, y);
        r.grad.row(i) = e / z;
        r.grad(i, y) -= 1.0;
    }
    r.value = total / static_cast<double>(n);
    r.grad /= static_cast<double>(n);
    return r;
}

LossResult hardnet(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double margin)
{
    const Eigen::Index m = A.rows();
    if (m < 2) throw ValidationError("hardnet: need at least two pairs");
    if (B.rows() != m || B.cols() != A.cols()) throw ValidationError("hardnet: descriptor shapes differ");

    Eigen::MatrixXd D(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        D.col(j) = (A.rowwise() - B.row(j)).rowwise().norm();
    }

    LossResult r;
    r.grad = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    r.grad2 = Eigen::MatrixXd::Zero(B.rows(), B.cols());
    // d ||a_i - b_j|| accumulated with weight w into the gradients.
    auto add = [&](Eigen::Index i, Eigen::Index j, double w) {
        const double dist = D(i, j);
        if (dist <= 0.0) return;
        const Eigen::RowVectorXd u = (A.row(i) - B.row(j)) / dist;
        r.grad.row(i) += w * u;
        r.grad2.row(j) -= w * u;
    };
    double total = 0.0;
    const double scale = 1.0 / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double hardest = std::numeric_limits<double>::infinity();
        Eigen::Index hi = -1, hj = -1;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j == i) continue;
            if (D(i, j) < hardest) {
                hardest = D(i, j);
                hi = i;
                hj = j;
            }
            if (D(j, i) < hardest) {
                hardest = D(j, i);
                hi = j;
                hj = i;
            }
        }
        const double term = margin + D(i, i) - hardest;
        if (term > 0.0) {
            total += term;
            add(i, i, scale);
            add(hi, hj, -scale);
        }
    }
    r.value = total * scale;
    return r;
}

} // namespace mgcn
