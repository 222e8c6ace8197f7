#include "commands.hpp"

#include "mgcn/config.hpp"
#include "mgcn/descriptors.hpp"
#include "mgcn/error.hpp"
#include "mgcn/evaluation.hpp"
#include "mgcn/hash.hpp"
#include "mgcn/mesh_io.hpp"
#include "mgcn/pipeline.hpp"
#include "mgcn/train.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>

namespace mgcn::cli {

namespace fs = std::filesystem;

int configure_threads()
{
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("MGCN_NUM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) threads = n;
    }
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    Eigen::setNbThreads(threads);
    return threads;
}

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

class Logger {
public:
    Logger(std::ostream& err, const bool& quiet)
        : m_err(err)
        , m_quiet(quiet)
    {
    }
    void operator()(const std::string& msg) const
    {
        if (!m_quiet) m_err << "mgcn: " << msg << '\n';
    }

private:
    std::ostream& m_err;
    const bool& m_quiet;
};

PipelineConfig load_config(const Globals& g)
{
    PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(g.config_path);
    if (g.seed) c.train.seed = *g.seed;
    return c;
}

void check_hash(std::uint64_t recorded, const TriMesh& mesh, const std::string& what)
{
    if (recorded != 0 && recorded != mesh.content_hash()) {
        throw ValidationError("stale " + what + ": it was computed for mesh " + hash_hex(recorded) + ", not "
            + hash_hex(mesh.content_hash()));
    }
}

// Basis from a cache file when one matches the mesh, otherwise computed (and cached if a path is given).
SpectralBasis basis_for(const TriMesh& mesh, Eigen::Index k, const std::string& cache, const Logger& log)
{
    if (!cache.empty() && fs::exists(cache)) {
        CachedBasis cached = read_basis(cache);
        check_hash(cached.mesh_hash, mesh, "basis cache " + cache);
        if (cached.basis.size() == k) {
            log("basis cache hit: " + cache);
            return std::move(cached.basis);
        }
        log("basis cache " + cache + " has k = " + std::to_string(cached.basis.size()) + ", recomputing");
    }
    SpectralBasis basis = compute_basis(mesh, k);
    if (!cache.empty()) {
        write_basis(cache, basis, mesh.content_hash());
        log("wrote basis cache " + cache);
    }
    return basis;
}

std::vector<Rgb> dissimilarity_colors(const Eigen::VectorXd& d)
{
    const double mx = d.maxCoeff();
    std::vector<Rgb> colors(static_cast<std::size_t>(d.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double t = mx > 0.0 ? d[i] / mx : 0.0;
        const auto r = static_cast<std::uint8_t>(std::lround(255.0 * t));
        const auto b = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
        colors[static_cast<std::size_t>(i)] = {r, 0, b};
    }
    return colors;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multiscale wavelet descriptors and graph convolution on triangle meshes", "mgcn"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "Pipeline config file (key = value with [sections])");
    app.add_option("--seed", g.seed, "Random seed (overrides the config)");
    app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");
    Logger log(err, g.quiet);

    // basis
    auto* basis_cmd = app.add_subcommand("basis", "Compute and cache the Laplace-Beltrami eigenbasis of a mesh");
    std::string basis_mesh, basis_out;
    std::optional<long long> basis_k;
    bool basis_force = false;
    basis_cmd->add_option("--mesh", basis_mesh, "Input mesh (OFF, OBJ or PLY)")->required();
    basis_cmd->add_option("--k", basis_k, "Number of eigenpairs");
    basis_cmd->add_option("--out", basis_out, "Cache file (default <output>/<mesh>.basis)");
    basis_cmd->add_flag("--force", basis_force, "Overwrite a cache computed for a different mesh");

    // descriptor
    auto* desc_cmd = app.add_subcommand("descriptor", "Compute a per-vertex descriptor field");
    std::string desc_mesh, desc_out, desc_basis, desc_csv;
    std::optional<std::string> desc_type;
    std::optional<int> desc_num;
    std::optional<long long> desc_k;
    desc_cmd->add_option("--mesh", desc_mesh, "Input mesh")->required();
    desc_cmd->add_option("--type", desc_type, "weds, hks or wks");
    desc_cmd->add_option("--num", desc_num, "Descriptor dimension");
    desc_cmd->add_option("--k", desc_k, "Basis size (clamped to the vertex count)");
    desc_cmd->add_option("--basis", desc_basis, "Basis cache to read or create");
    desc_cmd->add_option("--out", desc_out, "Output descriptor file")->required();
    desc_cmd->add_option("--csv", desc_csv, "Also export CSV");

    // match
    auto* match_cmd = app.add_subcommand("match", "Nearest-neighbor matching of two descriptor fields");
    std::string match_a, match_b, match_out;
    match_cmd->add_option("--a", match_a, "Source descriptor file")->required();
    match_cmd->add_option("--b", match_b, "Target descriptor file")->required();
    match_cmd->add_option("--out", match_out, "Correspondence file")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Geodesic error, CGE and CMC of a correspondence");
    std::string eval_corr, eval_gt, eval_target, eval_sym, eval_out, eval_da, eval_db;
    double eval_rmax = 0.25;
    int eval_rcount = 26;
    std::optional<int> eval_kmax;
    eval_cmd->add_option("--corr", eval_corr, "Predicted correspondence file")->required();
    eval_cmd->add_option("--gt", eval_gt, "Ground-truth correspondence file")->required();
    eval_cmd->add_option("--target", eval_target, "Target mesh")->required();
    eval_cmd->add_option("--symmetric", eval_sym, "Symmetric ground-truth file");
    eval_cmd->add_option("--desc-a", eval_da, "Source descriptors (enables CMC)");
    eval_cmd->add_option("--desc-b", eval_db, "Target descriptors (enables CMC)");
    eval_cmd->add_option("--kmax", eval_kmax, "Largest CMC rank");
    eval_cmd->add_option("--max-radius", eval_rmax, "Largest CGE radius (normalized units)");
    eval_cmd->add_option("--radii", eval_rcount, "Number of CGE radii");
    eval_cmd->add_option("--out", eval_out, "Report directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Two-phase training from a pipeline config");
    std::optional<std::string> train_output, train_ckpt, train_ops, train_arch;
    std::optional<int> train_e1, train_e2;
    train_cmd->add_option("--output", train_output, "Output directory");
    train_cmd->add_option("--checkpoint", train_ckpt, "Checkpoint path");
    train_cmd->add_option("--operators", train_ops, "wavelet or chebyshev");
    train_cmd->add_option("--architecture", train_arch, "Architecture string");
    train_cmd->add_option("--phase1-epochs", train_e1, "Cross-entropy epochs");
    train_cmd->add_option("--phase2-epochs", train_e2, "HardNet epochs");

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Learned descriptors for a mesh");
    std::string infer_ckpt, infer_mesh, infer_input, infer_out;
    infer_cmd->add_option("--checkpoint", infer_ckpt, "Trained checkpoint")->required();
    infer_cmd->add_option("--mesh", infer_mesh, "Input mesh")->required();
    infer_cmd->add_option("--input", infer_input, "Input descriptor file of the mesh")->required();
    infer_cmd->add_option("--out", infer_out, "Output descriptor file")->required();

    // dissimilarity
    auto* dis_cmd = app.add_subcommand("dissimilarity", "Color a mesh by descriptor distance to one vertex");
    std::string dis_desc, dis_mesh, dis_out;
    int dis_vertex = 0;
    dis_cmd->add_option("--desc", dis_desc, "Descriptor file")->required();
    dis_cmd->add_option("--mesh", dis_mesh, "Mesh")->required();
    dis_cmd->add_option("--vertex", dis_vertex, "Reference vertex")->required();
    dis_cmd->add_option("--out", dis_out, "Output PLY")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        const PipelineConfig config = load_config(g);

        if (*basis_cmd) {
            const TriMesh mesh = load_mesh(basis_mesh);
            const Eigen::Index k = basis_k ? static_cast<Eigen::Index>(*basis_k) : std::min(config.descriptor.k, mesh.num_vertices());
            if (basis_out.empty()) {
                fs::create_directories(config.output);
                basis_out = (fs::path(config.output) / (fs::path(basis_mesh).stem().string() + ".basis")).string();
            }
            if (fs::exists(basis_out)) {
                const CachedBasis cached = read_basis(basis_out);
                if (cached.mesh_hash != mesh.content_hash() && !basis_force) {
                    throw ValidationError("stale basis cache " + basis_out + " belongs to mesh " + hash_hex(cached.mesh_hash)
                        + "; rerun with --force to replace it");
                }
                if (cached.mesh_hash == mesh.content_hash() && cached.basis.size() == k) {
                    log("cache hit: " + basis_out);
                    out << basis_out << '\n';
                    return kSuccess;
                }
            }
            const SpectralBasis basis = compute_basis(mesh, k);
            write_basis(basis_out, basis, mesh.content_hash());
            log("wrote " + basis_out + " (k = " + std::to_string(k) + ", lambda_max = " + std::to_string(basis.lambda_max()) + ")");
            out << basis_out << '\n';
        } else if (*desc_cmd) {
            const TriMesh mesh = load_mesh(desc_mesh);
            DescriptorOptions opts = config.descriptor;
            if (desc_type) opts.type = *desc_type;
            if (desc_num) opts.num = *desc_num;
            if (desc_k) opts.k = static_cast<Eigen::Index>(*desc_k);
            if (opts.k < 2) throw ValidationError("basis size must be at least 2");
            if (opts.k > mesh.num_vertices()) {
                log("k = " + std::to_string(opts.k) + " exceeds the vertex count, using " + std::to_string(mesh.num_vertices()));
                opts.k = mesh.num_vertices();
            }
            const SpectralBasis basis = basis_for(mesh, opts.k, desc_basis, log);
            const DescriptorField field = compute_descriptor(mesh, basis, opts);
            write_descriptors(desc_out, field);
            if (!desc_csv.empty()) write_descriptors_csv(desc_csv, field);
            log("wrote " + desc_out + " (" + std::to_string(field.num_vertices()) + " x " + std::to_string(field.dim()) + ")");
        } else if (*match_cmd) {
            const DescriptorField a = read_descriptors(match_a);
            const DescriptorField b = read_descriptors(match_b);
            const CorrespondenceMap map = nn_match(a.values, b.values);
            write_index_file(match_out, map.target,
                "source " + hash_hex(a.meta.mesh_hash) + "\ntarget " + hash_hex(b.meta.mesh_hash));
            log("wrote " + match_out);
        } else if (*eval_cmd) {
            const TriMesh target = load_mesh(eval_target);
            CorrespondenceMap map;
            map.target = read_index_file(eval_corr);
            GroundTruth gt;
            gt.direct = read_index_file(eval_gt);
            if (!eval_sym.empty()) gt.symmetric = read_index_file(eval_sym);
            for (const int t : map.target) {
                if (t >= target.num_vertices()) throw ValidationError("correspondence index exceeds the target vertex count");
            }
            EvalReport report = evaluate(map, gt, target, radius_grid(eval_rmax, eval_rcount));
            if (!eval_da.empty() && !eval_db.empty()) {
                const DescriptorField a = read_descriptors(eval_da);
                const DescriptorField b = read_descriptors(eval_db);
                check_hash(b.meta.mesh_hash, target, "target descriptors");
                const int kmax = eval_kmax ? *eval_kmax : static_cast<int>(std::min<Eigen::Index>(100, b.num_vertices()));
                report.cmc = cmc_curve(a.values, b.values, gt.direct, kmax);
            }
            write_report(eval_out, report);
            out << report_summary(report);
        } else if (*train_cmd) {
            PipelineConfig c = config;
            if (train_output) c.output = *train_output;
            if (train_ckpt) c.checkpoint = *train_ckpt;
            if (train_ops) c.operators = *train_ops;
            if (train_arch) c.architecture = *train_arch;
            if (train_e1) c.train.phase1_epochs = *train_e1;
            if (train_e2) c.train.phase2_epochs = *train_e2;
            if (c.meshes.empty()) throw ValidationError("train: the config lists no meshes");
            if (c.labels.size() != c.meshes.size()) throw ValidationError("train: one labels file per mesh required");
            fs::create_directories(c.output);
            {
                std::ofstream manifest(fs::path(c.output) / "config.txt");
                manifest << c.to_text();
            }

            std::mt19937_64 rng(c.train.seed);
            MgcnModel model = MgcnModel::create(Architecture::parse(c.architecture), c.input_dim,
                operator_kind_from_string(c.operators), rng);
            std::vector<OperatorSet> ops;
            std::vector<TrainShape> dataset;
            ops.reserve(c.meshes.size());
            std::string bank_text;
            for (std::size_t i = 0; i < c.meshes.size(); ++i) {
                const TriMesh mesh = load_mesh(c.meshes[i]);
                DescriptorOptions opts = c.descriptor;
                opts.k = std::min(opts.k, mesh.num_vertices());
                const ShapeAnalysis a = analyze_shape(mesh, opts);
                if (bank_text.empty()) bank_text = a.bank.to_text();
                ops.push_back(operators_for(model, mesh, a.basis, a.bank));
                std::vector<int> labels = read_index_file(c.labels[i]);
                if (static_cast<Eigen::Index>(labels.size()) != mesh.num_vertices()) {
                    throw ValidationError("labels file " + c.labels[i] + " does not have one entry per vertex");
                }
                dataset.push_back({nullptr, network_input(a.descriptor, c.input_dim), std::move(labels)});
                log("prepared " + c.meshes[i] + " (" + std::to_string(mesh.num_vertices()) + " vertices)");
            }
            for (std::size_t i = 0; i < dataset.size(); ++i) dataset[i].ops = &ops[i];

            TrainState state;
            const TrainHistory history = train(model, dataset, c.train, &state);
            {
                std::ofstream h(fs::path(c.output) / "history.csv");
                h << std::setprecision(17) << "phase,epoch,loss\n";
                for (std::size_t e = 0; e < history.phase1.size(); ++e) h << "1," << e << ',' << history.phase1[e] << '\n';
                for (std::size_t e = 0; e < history.phase2.size(); ++e) h << "2," << e << ',' << history.phase2[e] << '\n';
            }
            CheckpointInfo info;
            info.basis_size = c.descriptor.k;
            info.bank_text = bank_text;
            info.input_descriptor = c.descriptor.type;
            const fs::path ckpt = c.checkpoint.empty() ? fs::path(c.output) / "model.ckpt" : fs::path(c.checkpoint);
            save_checkpoint(ckpt, model, state, info);
            log("wrote " + ckpt.string());
            out << ckpt.string() << '\n';
        } else if (*infer_cmd) {
            const Checkpoint ckpt = load_checkpoint(infer_ckpt);
            const TriMesh mesh = load_mesh(infer_mesh);
            const DescriptorField input = read_descriptors(infer_input);
            check_hash(input.meta.mesh_hash, mesh, "input descriptor " + infer_input);
            if (input.num_vertices() != mesh.num_vertices()) throw ValidationError("input descriptor does not match the mesh");
            if (input.meta.type != ckpt.info.input_descriptor) {
                throw ValidationError("checkpoint was trained on '" + ckpt.info.input_descriptor + "' inputs, got '"
                    + input.meta.type + "'");
            }
            const FilterBank trained = FilterBank::from_text(ckpt.info.bank_text);
            DescriptorOptions opts;
            opts.constants = trained.constants();
            opts.num_scales = trained.num_scales();
            const Eigen::Index k = std::min<Eigen::Index>(ckpt.info.basis_size, mesh.num_vertices());
            SpectralBasis basis;
            FilterBank bank;
            if (ckpt.model.kind() == OperatorKind::Wavelet) {
                basis = compute_basis(mesh, k);
                bank = bank_for(basis, opts);
            }
            const OperatorSet ops = operators_for(ckpt.model, mesh, basis, bank);
            DescriptorField learned;
            learned.values = ckpt.model.forward(network_input(input, ckpt.model.input_dim()), ops);
            learned.meta.type = "mgcn";
            learned.meta.basis_size = k;
            learned.meta.scale_count = static_cast<std::int64_t>(ckpt.model.required_scales().size());
            learned.meta.sample_count = learned.values.cols();
            learned.meta.bank_hash = bank.num_scales() > 0 ? bank.hash() : 0;
            learned.meta.mesh_hash = mesh.content_hash();
            write_descriptors(infer_out, learned);
            log("wrote " + infer_out);
        } else if (*dis_cmd) {
            const TriMesh mesh = load_mesh(dis_mesh);
            const DescriptorField field = read_descriptors(dis_desc);
            check_hash(field.meta.mesh_hash, mesh, "descriptor " + dis_desc);
            if (field.num_vertices() != mesh.num_vertices()) throw ValidationError("descriptor does not match the mesh");
            if (dis_vertex < 0 || dis_vertex >= mesh.num_vertices()) {
                throw ValidationError("reference vertex " + std::to_string(dis_vertex) + " out of range [0, "
                    + std::to_string(mesh.num_vertices()) + ")");
            }
            const Eigen::VectorXd d = (field.values.rowwise() - field.values.row(dis_vertex)).rowwise().norm();
            write_colored_ply(dis_out, mesh, dissimilarity_colors(d));
            log("wrote " + dis_out);
        }
    } catch (const NumericalError& e) {
        err << "mgcn: numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const ValidationError& e) {
        err << "mgcn: error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "mgcn: error: " << e.what() << '\n';
        return kDataError;
    }
    return kSuccess;
}

} // namespace mgcn::cli
