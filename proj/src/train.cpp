#include "mgcn/train.hpp"

#include "mgcn/binary_io.hpp"
#include "mgcn/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace mgcn {

void AdamW::step(const std::vector<Eigen::MatrixXd*>& params, const std::vector<Eigen::MatrixXd>& grads)
{
    if (params.size() != grads.size()) throw ValidationError("AdamW: parameter and gradient counts differ");
    if (m_m.size() != params.size()) {
        m_m.clear();
        m_v.clear();
        for (const auto* p : params) {
            m_m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
            m_v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        }
        m_step = 0;
    }
    ++m_step;
    const auto& c = m_config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(m_step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(m_step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Eigen::MatrixXd& p = *params[i];
        const Eigen::MatrixXd& g = grads[i];
        if (g.rows() != p.rows() || g.cols() != p.cols()) throw ValidationError("AdamW: gradient shape mismatch");
        m_m[i] = c.beta1 * m_m[i] + (1.0 - c.beta1) * g;
        m_v[i] = c.beta2 * m_v[i] + (1.0 - c.beta2) * g.cwiseProduct(g);
        p *= 1.0 - c.lr * c.weight_decay;
        p.array() -= c.lr * (m_m[i].array() / bc1) / ((m_v[i].array() / bc2).sqrt() + c.eps);
    }
}

namespace {

// Fisher-Yates driven directly by the engine so the order is the same on every standard library.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

void check_shape(const MgcnModel& model, const TrainShape& s)
{
    if (!s.ops) throw ValidationError("training shape without operators");
    if (s.features.rows() != s.ops->num_vertices()) throw ValidationError("training features do not match the mesh");
    if (s.features.cols() != model.input_dim()) throw ValidationError("training features have the wrong dimension");
}

void add_grads(std::vector<Eigen::MatrixXd>& acc, std::vector<Eigen::MatrixXd>&& g)
{
    if (acc.empty()) {
        acc = std::move(g);
        return;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

} // namespace

TrainHistory train(MgcnModel& model, const std::vector<TrainShape>& dataset, const TrainConfig& config,
    TrainState* state)
{
    if (dataset.empty()) throw ValidationError("train: empty dataset");
    if (config.phase1_epochs < 0 || config.phase2_epochs < 0) throw ValidationError("train: negative epoch count");
    for (const auto& s : dataset) check_shape(model, s);

    TrainState local;
    TrainState& st = state ? *state : local;
    st.rng.seed(config.seed);
    TrainHistory history;

    if (config.phase1_epochs > 0) {
        int classes = 0;
        for (const auto& s : dataset) {
            if (static_cast<Eigen::Index>(s.labels.size()) != s.features.rows()) {
                throw ValidationError("train: phase 1 needs one label per vertex");
            }
            for (const int l : s.labels) {
                if (l < 0) throw ValidationError("train: negative label");
                classes = std::max(classes, l + 1);
            }
        }
        if (!model.has_head() || model.head()->out_dim() != classes) model.add_head(classes, st.rng);
        st.optimizer = AdamW(config.phase1);
        std::vector<std::size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < config.phase1_epochs; ++epoch) {
            shuffle(order, st.rng);
            double sum = 0.0;
            for (const std::size_t idx : order) {
                const TrainShape& s = dataset[idx];
                ModelCache cache;
                const Eigen::MatrixXd logits = model.logits(s.features, *s.ops, &cache);
                const LossResult loss = cross_entropy(logits, s.labels);
                sum += loss.value;
                st.optimizer.step(model.parameters(true), model.backward(cache, *s.ops, loss.grad, true));
            }
            history.phase1.push_back(sum / static_cast<double>(dataset.size()));
        }
    }

    if (config.phase2_epochs > 0) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            for (std::size_t j = i + 1; j < dataset.size(); ++j) pairs.emplace_back(i, j);
        }
        if (pairs.empty()) pairs.emplace_back(0, 0);
        st.optimizer = AdamW(config.phase2);
        for (int epoch = 0; epoch < config.phase2_epochs; ++epoch) {
            shuffle(pairs, st.rng);
            double sum = 0.0;
            for (const auto& [ia, ib] : pairs) {
                const TrainShape& a = dataset[ia];
                const TrainShape& b = dataset[ib];
                std::unordered_map<int, int> where;
                for (std::size_t v = 0; v < b.labels.size(); ++v) where.emplace(b.labels[v], static_cast<int>(v));
                std::vector<std::pair<int, int>> candidates;
                for (std::size_t v = 0; v < a.labels.size(); ++v) {
                    const auto it = where.find(a.labels[v]);
                    if (it != where.end()) candidates.emplace_back(static_cast<int>(v), it->second);
                }
                if (candidates.size() < 2) throw ValidationError("train: shape pair shares fewer than two labels");
                shuffle(candidates, st.rng);
                candidates.resize(std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(config.pairs_per_step)));

                ModelCache ca, cb;
                const Eigen::MatrixXd da = model.forward(a.features, *a.ops, &ca);
                const Eigen::MatrixXd db = model.forward(b.features, *b.ops, &cb);
                const auto m = static_cast<Eigen::Index>(candidates.size());
                Eigen::MatrixXd sa(m, da.cols()), sb(m, db.cols());
                for (Eigen::Index r = 0; r < m; ++r) {
                    sa.row(r) = da.row(candidates[static_cast<std::size_t>(r)].first);
                    sb.row(r) = db.row(candidates[static_cast<std::size_t>(r)].second);
                }
                const LossResult loss = hardnet(sa, sb, config.margin);
                sum += loss.value;
                Eigen::MatrixXd ga = Eigen::MatrixXd::Zero(da.rows(), da.cols());
                Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(db.rows(), db.cols());
                for (Eigen::Index r = 0; r < m; ++r) {
                    ga.row(candidates[static_cast<std::size_t>(r)].first) += loss.grad.row(r);
                    gb.row(candidates[static_cast<std::size_t>(r)].second) += loss.grad2.row(r);
                }
                std::vector<Eigen::MatrixXd> grads;
                add_grads(grads, model.backward(ca, *a.ops, ga, false));
                add_grads(grads, model.backward(cb, *b.ops, gb, false));
                st.optimizer.step(model.parameters(false), grads);
            }
            history.phase2.push_back(sum / static_cast<double>(pairs.size()));
        }
    }
    return history;
}

double classification_accuracy(const MgcnModel& model, const TrainShape& shape)
{
    const Eigen::MatrixXd logits = model.logits(shape.features, *shape.ops);
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        logits.row(i).maxCoeff(&best);
        if (best == shape.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

namespace {

constexpr char kCheckpointMagic[9] = "MGCNCKP1";
constexpr std::uint32_t kCheckpointVersion = 1;

void write_adam_config(std::ostream& out, const AdamConfig& c)
{
    io::write_pod(out, c.lr);
    io::write_pod(out, c.beta1);
    io::write_pod(out, c.beta2);
    io::write_pod(out, c.eps);
    io::write_pod(out, c.weight_decay);
}

AdamConfig read_adam_config(std::istream& in)
{
    AdamConfig c;
    c.lr = io::read_pod<double>(in);
    c.beta1 = io::read_pod<double>(in);
    c.beta2 = io::read_pod<double>(in);
    c.eps = io::read_pod<double>(in);
    c.weight_decay = io::read_pod<double>(in);
    return c;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const MgcnModel& model, const TrainState& state,
    const CheckpointInfo& info)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint " + path.string());
    io::write_magic(out, kCheckpointMagic);
    io::write_pod(out, kCheckpointVersion);
    io::write_string(out, model.architecture().to_string());
    io::write_string(out, to_string(model.kind()));
    io::write_pod<std::int64_t>(out, model.input_dim());
    for (const auto& layer : model.convs()) {
        io::write_pod<std::uint64_t>(out, layer.scales().size());
        for (const int s : layer.scales()) io::write_pod<std::int32_t>(out, s);
    }
    io::write_pod<std::int64_t>(out, model.has_head() ? model.head()->out_dim() : -1);
    for (const auto* p : model.parameters(true)) io::write_matrix(out, *p);

    auto& opt = const_cast<AdamW&>(state.optimizer);
    write_adam_config(out, opt.config());
    io::write_pod<std::int64_t>(out, opt.steps());
    io::write_pod<std::uint64_t>(out, opt.first_moments().size());
    for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
        io::write_matrix(out, opt.first_moments()[i]);
        io::write_matrix(out, opt.second_moments()[i]);
    }
    std::ostringstream rng_text;
    rng_text << state.rng;
    io::write_string(out, rng_text.str());

    io::write_pod(out, info.basis_size);
    io::write_string(out, info.bank_text);
    io::write_string(out, info.input_descriptor);
    if (!out) throw ValidationError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint " + path.string());
    io::expect_magic(in, kCheckpointMagic, "checkpoint");
    if (io::read_pod<std::uint32_t>(in) != kCheckpointVersion) throw ValidationError("unsupported checkpoint version");
    const Architecture arch = Architecture::parse(io::read_string(in, 1u << 16));
    const OperatorKind kind = operator_kind_from_string(io::read_string(in, 64));
    const auto input_dim = io::read_pod<std::int64_t>(in);
    std::vector<std::vector<int>> scales(arch.convs.size());
    for (auto& layer : scales) {
        const auto count = io::read_pod<std::uint64_t>(in);
        if (count > 1024) throw ValidationError("corrupt checkpoint scale list");
        for (std::uint64_t i = 0; i < count; ++i) layer.push_back(io::read_pod<std::int32_t>(in));
    }
    const auto head = io::read_pod<std::int64_t>(in);
    Checkpoint ckpt;
    ckpt.model = make_model_skeleton(arch, static_cast<int>(input_dim), kind, std::move(scales),
        head > 0 ? std::optional<int>(static_cast<int>(head)) : std::nullopt);
    for (auto* p : ckpt.model.parameters(true)) {
        Eigen::MatrixXd m = io::read_matrix(in);
        if (m.rows() != p->rows() || m.cols() != p->cols()) throw ValidationError("checkpoint weight shape mismatch");
        *p = std::move(m);
    }
    ckpt.state.optimizer = AdamW(read_adam_config(in));
    ckpt.state.optimizer.set_steps(io::read_pod<std::int64_t>(in));
    const auto moments = io::read_pod<std::uint64_t>(in);
    if (moments > 1u << 20) throw ValidationError("corrupt checkpoint optimizer state");
    for (std::uint64_t i = 0; i < moments; ++i) {
        ckpt.state.optimizer.first_moments().push_back(io::read_matrix(in));
        ckpt.state.optimizer.second_moments().push_back(io::read_matrix(in));
    }
    std::istringstream rng_text(io::read_string(in, 1u << 16));
    rng_text >> ckpt.state.rng;
    if (!rng_text) throw ValidationError("corrupt checkpoint rng state");
    ckpt.info.basis_size = io::read_pod<std::int64_t>(in);
    ckpt.info.bank_text = io::read_string(in, 1u << 16);
    ckpt.info.input_descriptor = io::read_string(in, 64);
    return ckpt;
}

} // namespace mgcn
