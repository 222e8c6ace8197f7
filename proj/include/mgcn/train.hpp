#pragma once

#include "mgcn/model.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <random>
#include <vector>

namespace mgcn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

/// Adam with decoupled weight decay: p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps).
class AdamW {
public:
    AdamW() = default;
    explicit AdamW(const AdamConfig& config)
        : m_config(config)
    {
    }

    void step(const std::vector<Eigen::MatrixXd*>& params, const std::vector<Eigen::MatrixXd>& grads);

    const AdamConfig& config() const { return m_config; }
    std::int64_t steps() const { return m_step; }
    std::vector<Eigen::MatrixXd>& first_moments() { return m_m; }
    std::vector<Eigen::MatrixXd>& second_moments() { return m_v; }
    void set_steps(std::int64_t t) { m_step = t; }

private:
    AdamConfig m_config;
    std::int64_t m_step = 0;
    std::vector<Eigen::MatrixXd> m_m;
    std::vector<Eigen::MatrixXd> m_v;
};

struct TrainConfig {
    int phase1_epochs = 200;
    AdamConfig phase1{1e-3, 0.9, 0.999, 1e-8, 1e-4};
    int phase2_epochs = 100;
    AdamConfig phase2{5e-4, 0.9, 0.999, 1e-8, 5e-5};
    double margin = 1.0;
    int pairs_per_step = 512;
    std::uint64_t seed = 0;
};

///
/// One training shape: operators for its mesh, the 128-dim input features,
/// and per-vertex labels (template vertex indices). Two shapes correspond at
/// vertices carrying equal labels.
///
struct TrainShape {
    const OperatorSet* ops = nullptr;
    Eigen::MatrixXd features;
    std::vector<int> labels;
};

struct TrainHistory {
    std::vector<double> phase1; ///< mean cross-entropy per epoch
    std::vector<double> phase2; ///< mean HardNet loss per epoch
};

struct TrainState {
    AdamW optimizer;
    std::mt19937_64 rng;
};

///
/// Two-phase training. Phase 1 attaches a classification head with
/// max(label) + 1 classes and minimizes cross-entropy; phase 2 minimizes
/// HardNet over sampled corresponding pairs of every shape pair. Deterministic
/// given config.seed.
///
TrainHistory train(MgcnModel& model, const std::vector<TrainShape>& dataset, const TrainConfig& config,
    TrainState* state = nullptr);

/// Fraction of vertices whose arg-max logit equals the label.
double classification_accuracy(const MgcnModel& model, const TrainShape& shape);

/// Extra fields stored next to the weights.
struct CheckpointInfo {
    std::int64_t basis_size = 0;
    std::string bank_text; ///< FilterBank::to_text() of the training constants (lambda_max informative only)
    std::string input_descriptor = "weds";
};

void save_checkpoint(const std::filesystem::path& path, const MgcnModel& model, const TrainState& state,
    const CheckpointInfo& info);

struct Checkpoint {
    MgcnModel model;
    TrainState state;
    CheckpointInfo info;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace mgcn
