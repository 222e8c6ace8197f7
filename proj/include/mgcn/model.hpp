#pragma once

#include "mgcn/mesh.hpp"
#include "mgcn/spectral.hpp"
#include "mgcn/wavelet.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mgcn {

/// How the per-scale vertex operators P_s of a convolution layer are built.
enum class OperatorKind {
    Wavelet,   ///< L1-normalized wavelet matrices
    Chebyshev, ///< T_m of the rescaled normalized graph Laplacian (baseline)
};

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& s);

///
/// Dense N x N operators keyed by scale index. A layer computes
/// sum_s P_s^T X W_s over its scale indices.
///
struct OperatorSet {
    OperatorKind kind = OperatorKind::Wavelet;
    std::map<int, Eigen::MatrixXd> ops;

    Eigen::Index num_vertices() const { return ops.empty() ? 0 : ops.begin()->second.rows(); }
    const Eigen::MatrixXd& at(int index) const;
};

/// P_m = normalize_wavelet_columns(wavelet_matrix(basis, bank, m)) for every m in `indices`.
OperatorSet wavelet_operators(const SpectralBasis& basis, const FilterBank& bank, const std::vector<int>& indices);

/// P_m = T_m(L_sym - I) for m = 0..orders-1, L_sym the normalized uniform graph Laplacian.
OperatorSet chebyshev_operators(const TriMesh& mesh, int orders);

/// Scale indices of an MGCONV layer: the wavelet set used by the 512-dim cascade (16 indices).
std::vector<int> default_layer_scales(OperatorKind kind, int count);

// ---------------------------------------------------------------------------
// Elementwise pieces, exposed for gradient checks.

Eigen::MatrixXd elu(const Eigen::MatrixXd& x);
/// d elu / dx evaluated at x.
Eigen::MatrixXd elu_derivative(const Eigen::MatrixXd& x);

/// Column-wise reference values of the min-max normalization.
struct MinMax {
    Eigen::RowVectorXd lo;
    Eigen::RowVectorXd hi;
};
MinMax column_range(const Eigen::MatrixXd& x);

/// (x - lo) / (hi - lo) per column; a constant column maps to 0.5.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& x, const MinMax& range);

/// Backward of minmax_normalize with lo/hi treated as constants (zero for constant columns).
Eigen::MatrixXd minmax_backward(const Eigen::MatrixXd& dz, const MinMax& range);

// ---------------------------------------------------------------------------

struct MgconvCache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> projected; ///< P_s^T X per scale
    Eigen::MatrixXd pre;                    ///< S
    MinMax range;
};

class MgconvLayer {
public:
    MgconvLayer() = default;
    MgconvLayer(int in, int out, std::vector<int> scales);

    int in_dim() const { return m_in; }
    int out_dim() const { return m_out; }
    const std::vector<int>& scales() const { return m_scales; }
    std::vector<Eigen::MatrixXd>& weights() { return m_weights; }
    const std::vector<Eigen::MatrixXd>& weights() const { return m_weights; }

    ///
    /// Z = Norm(ELU(sum_s P_s^T X W_s)). With `frozen`, the min-max uses the
    /// given reference values instead of the ones of this input.
    ///
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, const OperatorSet& ops, MgconvCache* cache = nullptr,
        const MinMax* frozen = nullptr) const;

    struct Grads {
        Eigen::MatrixXd dX;
        std::vector<Eigen::MatrixXd> dW;
    };
    Grads backward(const MgconvCache& cache, const OperatorSet& ops, const Eigen::MatrixXd& dZ) const;

private:
    int m_in = 0;
    int m_out = 0;
    std::vector<int> m_scales;
    std::vector<Eigen::MatrixXd> m_weights;
};

/// Per-vertex affine map Y = X W + b.
class FcLayer {
public:
    FcLayer() = default;
    FcLayer(int in, int out);

    int in_dim() const { return static_cast<int>(m_weight.rows()); }
    int out_dim() const { return static_cast<int>(m_weight.cols()); }
    Eigen::MatrixXd& weight() { return m_weight; }
    const Eigen::MatrixXd& weight() const { return m_weight; }
    Eigen::MatrixXd& bias() { return m_bias; }
    const Eigen::MatrixXd& bias() const { return m_bias; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;

    struct Grads {
        Eigen::MatrixXd dX;
        Eigen::MatrixXd dW;
        Eigen::MatrixXd db;
    };
    Grads backward(const Eigen::MatrixXd& X, const Eigen::MatrixXd& dY) const;

private:
    Eigen::MatrixXd m_weight; ///< in x out
    Eigen::MatrixXd m_bias;   ///< 1 x out
};

// ---------------------------------------------------------------------------

/// Parsed architecture: MGCONV<out>(<scales>) terms joined by '+', optional FC<out> tail.
/// A term may carry a repeat prefix, e.g. "5xMGCONV96(16)".
struct Architecture {
    struct Conv {
        int out = 0;
        int scales = 0;
        bool operator==(const Conv&) const = default;
    };
    std::vector<Conv> convs;
    std::optional<int> fc;

    static Architecture parse(const std::string& text);
    /// Canonical expanded form; parse(to_string()) reproduces the architecture.
    std::string to_string() const;
    bool operator==(const Architecture&) const = default;
};

inline constexpr const char* kDefaultArchitecture = "5xMGCONV96(16)+MGCONV128(16)+FC256";
inline constexpr int kDefaultInputDim = 128;

/// Deterministic uniform draw in [0, 1) from the 53 high bits of one engine output.
double uniform01(std::mt19937_64& rng);

struct ModelCache {
    Eigen::MatrixXd input;
    std::vector<MgconvCache> convs;
    Eigen::MatrixXd conv_out; ///< input of the FC layer
    Eigen::MatrixXd fc_out;   ///< input of the head
};

class MgcnModel {
public:
    MgcnModel() = default;

    ///
    /// Glorot-uniform weights, zero biases. Layer scale indices come from
    /// default_layer_scales(kind, count).
    ///
    static MgcnModel create(const Architecture& arch, int input_dim, OperatorKind kind, std::mt19937_64& rng);

    /// Adds (or replaces) a classification head FC(fc_out -> classes).
    void add_head(int classes, std::mt19937_64& rng);
    bool has_head() const { return m_head.has_value(); }

    const Architecture& architecture() const { return m_arch; }
    OperatorKind kind() const { return m_kind; }
    int input_dim() const { return m_input_dim; }
    int output_dim() const;
    std::vector<int> required_scales() const;

    std::vector<MgconvLayer>& convs() { return m_convs; }
    const std::vector<MgconvLayer>& convs() const { return m_convs; }
    std::optional<FcLayer>& fc() { return m_fc; }
    const std::optional<FcLayer>& fc() const { return m_fc; }
    std::optional<FcLayer>& head() { return m_head; }
    const std::optional<FcLayer>& head() const { return m_head; }

    /// Descriptors N x output_dim().
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X0, const OperatorSet& ops, ModelCache* cache = nullptr) const;

    /// Head logits (requires a head).
    Eigen::MatrixXd logits(const Eigen::MatrixXd& X0, const OperatorSet& ops, ModelCache* cache = nullptr) const;

    /// All trainable tensors: conv weights, FC weight and bias, then head weight and bias.
    std::vector<Eigen::MatrixXd*> parameters(bool include_head);
    std::vector<const Eigen::MatrixXd*> parameters(bool include_head) const;

    ///
    /// Gradients for parameters(include_head), given dL/d(descriptors) or,
    /// with `through_head`, dL/d(logits). Returned tensors align with parameters().
    ///
    std::vector<Eigen::MatrixXd> backward(const ModelCache& cache, const OperatorSet& ops, const Eigen::MatrixXd& dOut,
        bool through_head) const;

private:
    Architecture m_arch;
    OperatorKind m_kind = OperatorKind::Wavelet;
    int m_input_dim = kDefaultInputDim;
    std::vector<MgconvLayer> m_convs;
    std::optional<FcLayer> m_fc;
    std::optional<FcLayer> m_head;

    friend MgcnModel make_model_skeleton(const Architecture&, int, OperatorKind, std::vector<std::vector<int>>,
        std::optional<int>);
};

/// Zero-weight model with explicit per-layer scale indices and optional head size (used by checkpoint loading).
MgcnModel make_model_skeleton(const Architecture& arch, int input_dim, OperatorKind kind,
    std::vector<std::vector<int>> layer_scales, std::optional<int> head_classes);

// ---------------------------------------------------------------------------

struct LossResult {
    double value = 0.0;
    Eigen::MatrixXd grad;  ///< d loss / d first argument
    Eigen::MatrixXd grad2; ///< d loss / d second argument (pairwise losses)
};

/// Mean softmax cross-entropy. Throws ValidationError on a label outside [0, d).
LossResult cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

///
/// Hardest-in-batch triplet margin loss over M corresponding rows of A and B:
/// mean_i max(0, margin + D_ii - min_{j != i} min(D_ij, D_ji)).
///
LossResult hardnet(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double margin = 1.0);

} // namespace mgcn
