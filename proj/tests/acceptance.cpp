// Acceptance suite: one PASS/FAIL line per criterion, with the measured value,
// the pinned threshold and the wall time. Exit status is zero only when every
// failing criterion is listed in --known-failures.

#include "mgcn/descriptors.hpp"
#include "mgcn/evaluation.hpp"
#include "mgcn/mesh.hpp"
#include "mgcn/model.hpp"
#include "mgcn/pipeline.hpp"
#include "mgcn/shapes.hpp"
#include "mgcn/spectral.hpp"
#include "mgcn/train.hpp"
#include "mgcn/wavelet.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace mgcn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

std::string num(double v)
{
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

std::vector<int> identity(Eigen::Index n)
{
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// 1. Frame identity of the stock 31-scale bank.
Outcome frame_residual()
{
    double worst = 0.0;
    for (const double lmax : {1.0, 12.5, 85.0, 400.0, 3000.0}) {
        const FilterBank bank = FilterBank::build_unchecked(lmax, 31, {});
        worst = std::max(worst, bank.frame_residual().value);
        for (int i = 0; i <= 20000; ++i) worst = std::max(worst, std::abs(bank.frame_sum(lmax * i / 20000.0) - 1.0));
    }
    return {worst <= 0.01, "max |G - 1| = " + num(worst) + " (<= 0.01)"};
}

// 2. Dirichlet energy of the coordinates is twice the area; stable under refinement.
Outcome energy_identity()
{
    double worst = 0.0;
    for (const TriMesh& m : {test::unit_triangle(), test::quad_strip(), shapes::icosphere(3), test::lumpy_sphere(3),
             shapes::bent_bar(20, 10, {0.9, 1.1}), shapes::bent_bar(32, 16, {})}) {
        const double e = dirichlet_energy(cotangent_laplacian(m), m.vertices());
        worst = std::max(worst, std::abs(e / (2.0 * m.surface_area()) - 1.0));
    }
    const TriMesh a = shapes::icosphere(3);
    const TriMesh b = shapes::icosphere(4);
    const double ea = dirichlet_energy(cotangent_laplacian(a), a.vertices());
    const double eb = dirichlet_energy(cotangent_laplacian(b), b.vertices());
    const double drift = std::abs(ea - eb) / eb;
    return {worst <= 1e-8 && drift <= 0.01,
        "max |E/2A - 1| = " + num(worst) + " (<= 1e-8), tessellation drift " + num(drift) + " (<= 0.01)"};
}

// 3. Analysis/synthesis round trip of the coordinates with the full basis.
Outcome reconstruction()
{
    double worst = 0.0;
    for (const TriMesh& m : {test::unit_triangle(), shapes::bent_bar(12, 9, {0.5, 0.0}), test::lumpy_sphere(2),
             shapes::bent_bar(20, 10, {0.4, 0.6}), shapes::bent_bar(24, 20, {})}) {
        const SpectralBasis basis = compute_basis(m, m.num_vertices());
        const FilterBank bank = FilterBank::build(basis.lambda_max(), 31, {}, basis.eigenvalues);
        for (int c = 0; c < 3; ++c) {
            const Eigen::VectorXd f = m.vertices().col(c);
            if (f.norm() == 0.0) continue;
            const Eigen::VectorXd back = reconstruct(basis, bank, wavelet_coeffs(basis, bank, f));
            worst = std::max(worst, (back - f).norm() / f.norm());
        }
    }
    return {worst <= 0.02, "max relative L2 error = " + num(worst) + " (<= 0.02)"};
}

// 4. Low spectrum of the unit sphere.
Outcome sphere_spectrum()
{
    const TriMesh m = shapes::icosphere(4);
    const SpectralBasis b = compute_basis(m, 16);
    double worst = 0.0;
    bool bands_separate = true;
    Eigen::Index j = 1;
    for (int l = 1; l <= 3; ++l) {
        const double target = l * (l + 1.0);
        for (int k = 0; k < 2 * l + 1; ++k, ++j) worst = std::max(worst, std::abs(b.eigenvalues[j] / target - 1.0));
        // Every member of band l must lie closer to l(l+1) than to either neighbor band.
        for (Eigen::Index i = j - (2 * l + 1); i < j; ++i) {
            for (int other : {l - 1, l + 1}) {
                if (std::abs(b.eigenvalues[i] - other * (other + 1.0)) < std::abs(b.eigenvalues[i] - target)) bands_separate = false;
            }
        }
    }
    const bool zero = std::abs(b.eigenvalues[0]) < 1e-10;
    return {worst <= 0.05 && bands_separate && zero, std::to_string(m.num_vertices()) + " vertices, max band deviation "
            + num(worst) + " (<= 0.05), multiplicities 1,3,5,7 " + (bands_separate && zero ? "ok" : "wrong")};
}

// 5. Finite-difference checks of every differentiable operation, 20 trials each.
Outcome gradients()
{
    constexpr int trials = 20;
    std::mt19937_64 rng(5);
    double worst = 0.0;
    std::map<std::string, double> per_op;
    auto record = [&](const std::string& op, double err) {
        per_op[op] = std::max(per_op[op], err);
        worst = std::max(worst, err);
    };

    const TriMesh mesh = shapes::bent_bar(6, 8, {0.5, 0.2});
    const SpectralBasis basis = compute_basis(mesh, mesh.num_vertices());
    const FilterBank bank = FilterBank::build(basis.lambda_max(), 31, {}, basis.eigenvalues);
    const Eigen::Index n = mesh.num_vertices();
    for (const auto kind : {OperatorKind::Wavelet, OperatorKind::Chebyshev}) {
        const std::vector<int> scales = default_layer_scales(kind, 3);
        const OperatorSet ops =
            kind == OperatorKind::Chebyshev ? chebyshev_operators(mesh, 3) : wavelet_operators(basis, bank, scales);
        MgconvLayer layer(8, 4, scales);
        for (int t = 0; t < trials; ++t) {
            for (auto& w : layer.weights()) w = random_matrix(8, 4, rng, 0.5);
            const Eigen::MatrixXd X = random_matrix(n, 8, rng);
            const Eigen::MatrixXd R = random_matrix(n, 4, rng);
            MgconvCache cache;
            layer.forward(X, ops, &cache);
            const MinMax frozen = cache.range;
            const MgconvLayer::Grads g = layer.backward(cache, ops, R);
            record("mgconv", test::relative_error(g.dX, test::numeric_gradient([&](const Eigen::MatrixXd& x) {
                return layer.forward(x, ops, nullptr, &frozen).cwiseProduct(R).sum();
            }, X)));
            for (std::size_t s = 0; s < layer.weights().size(); ++s) {
                MgconvLayer probe = layer;
                record("mgconv", test::relative_error(g.dW[s], test::numeric_gradient([&](const Eigen::MatrixXd& w) {
                    probe.weights()[s] = w;
                    return probe.forward(X, ops, nullptr, &frozen).cwiseProduct(R).sum();
                }, layer.weights()[s])));
            }
        }
    }
    for (int t = 0; t < trials; ++t) {
        const Eigen::MatrixXd a = random_matrix(6, 5, rng);
        const Eigen::MatrixXd r = random_matrix(6, 5, rng);
        record("elu", test::relative_error(elu_derivative(a).cwiseProduct(r),
                          test::numeric_gradient([&](const Eigen::MatrixXd& z) { return elu(z).cwiseProduct(r).sum(); }, a)));
        const Eigen::MatrixXd b = random_matrix(7, 4, rng, 3.0);
        const MinMax fixed = column_range(b);
        const Eigen::MatrixXd q = random_matrix(7, 4, rng);
        record("norm", test::relative_error(minmax_backward(q, fixed), test::numeric_gradient([&](const Eigen::MatrixXd& y) {
            return minmax_normalize(y, fixed).cwiseProduct(q).sum();
        }, b)));
    }
    FcLayer fc(6, 3);
    for (int t = 0; t < trials; ++t) {
        fc.weight() = random_matrix(6, 3, rng);
        fc.bias() = random_matrix(1, 3, rng);
        const Eigen::MatrixXd X = random_matrix(9, 6, rng);
        const Eigen::MatrixXd R = random_matrix(9, 3, rng);
        const FcLayer::Grads g = fc.backward(X, R);
        FcLayer probe = fc;
        record("fc", test::relative_error(g.dX, test::numeric_gradient([&](const Eigen::MatrixXd& x) { return fc.forward(x).cwiseProduct(R).sum(); }, X)));
        record("fc", test::relative_error(g.dW, test::numeric_gradient([&](const Eigen::MatrixXd& w) {
            probe.weight() = w;
            return probe.forward(X).cwiseProduct(R).sum();
        }, fc.weight())));
        probe = fc;
        record("fc", test::relative_error(g.db, test::numeric_gradient([&](const Eigen::MatrixXd& bb) {
            probe.bias() = bb;
            return probe.forward(X).cwiseProduct(R).sum();
        }, fc.bias())));
    }
    std::uniform_int_distribution<int> label(0, 5);
    for (int t = 0; t < trials; ++t) {
        const Eigen::MatrixXd z = random_matrix(10, 6, rng, 3.0);
        std::vector<int> y(10);
        for (auto& v : y) v = label(rng);
        record("cross_entropy", test::relative_error(cross_entropy(z, y).grad,
                                    test::numeric_gradient([&](const Eigen::MatrixXd& x) { return cross_entropy(x, y).value; }, z)));
        const Eigen::MatrixXd a = random_matrix(12, 5, rng, 0.4);
        const Eigen::MatrixXd b = a + random_matrix(12, 5, rng, 0.2);
        const LossResult h = hardnet(a, b, 1.0);
        record("hardnet", test::relative_error(h.grad, test::numeric_gradient([&](const Eigen::MatrixXd& x) { return hardnet(x, b, 1.0).value; }, a)));
        record("hardnet", test::relative_error(h.grad2, test::numeric_gradient([&](const Eigen::MatrixXd& x) { return hardnet(a, x, 1.0).value; }, b)));
    }
    std::string detail = "max relative error " + num(worst) + " (<= 1e-4):";
    for (const auto& [op, e] : per_op) detail += " " + op + " " + num(e);
    return {worst <= 1e-4, detail};
}

// 6. Rigid motion, relabeling and sphere homogeneity.
Outcome invariances()
{
    std::mt19937_64 rng(6);
    DescriptorOptions opts;
    opts.k = 80;
    const TriMesh m = shapes::bent_bar(12, 9, {0.7, 1.0});
    const Eigen::MatrixXd base = analyze_shape(m, opts).descriptor.values;
    double rigid = 0.0;
    for (int t = 0; t < 5; ++t) {
        const TriMesh moved = m.with_vertices(test::rigid(m.vertices(), test::random_rotation(rng), {1.0, -2.0, 0.5}));
        rigid = std::max(rigid, relative_drift(base, analyze_shape(moved, opts).descriptor.values));
    }

    const TriMesh s = test::lumpy_sphere(2);
    opts.k = s.num_vertices();
    const auto perm = test::random_permutation(static_cast<int>(s.num_vertices()), rng);
    const Eigen::MatrixXd fa = analyze_shape(s, opts).descriptor.values;
    const Eigen::MatrixXd fb = analyze_shape(permute_vertices(s, perm), opts).descriptor.values;
    Eigen::MatrixXd relabeled(fa.rows(), fa.cols());
    for (Eigen::Index i = 0; i < fa.rows(); ++i) relabeled.row(i) = fa.row(perm[static_cast<std::size_t>(i)]);
    const double permutation = relative_drift(relabeled, fb);

    const SpectralBasis sphere = compute_basis(shapes::icosphere(4), 25);
    double spread = 0.0;
    for (const DescriptorField& f : {hks(sphere, 16), wks(sphere, 16)}) {
        for (Eigen::Index c = 0; c < f.dim(); ++c) {
            const auto col = f.values.col(c);
            spread = std::max(spread, (col.maxCoeff() - col.minCoeff()) / col.mean());
        }
    }
    return {rigid <= 1e-8 && permutation <= 1e-8 && spread <= 0.02,
        "rigid drift " + num(rigid) + " (<= 1e-8), permutation drift " + num(permutation) + " (<= 1e-8), HKS/WKS spread "
            + num(spread) + " (<= 0.02)"};
}

// Bent-bar benchmark shared by criteria 7 and 8.
struct Prepared {
    TriMesh mesh;
    ShapeAnalysis analysis;
    Eigen::MatrixXd input;
};

Prepared prepare(int rings, int segments, shapes::BendPose pose)
{
    DescriptorOptions opts;
    opts.k = 30;
    Prepared p;
    p.mesh = shapes::bent_bar(rings, segments, pose);
    p.analysis = analyze_shape(p.mesh, opts);
    p.input = network_input(p.analysis.descriptor, kDefaultInputDim);
    return p;
}

struct BarRun {
    double phase1_accuracy = 0.0;
    double held_out_a = 0.0; ///< exact-match rate, tessellation A
    double held_out_b = 0.0; ///< exact-match rate, tessellation B
    double seconds = 0.0;
    double degradation() const { return held_out_a > 0.0 ? (held_out_a - held_out_b) / held_out_a : 1.0; }
};

struct BarBenchmark {
    Prepared rest, posed, held_a, held_b;
    std::vector<int> gt_b;

    BarBenchmark()
        : rest(prepare(20, 10, {}))
        , posed(prepare(20, 10, {0.4, 0.6}))
        , held_a(prepare(20, 10, {0.2, 0.3}))
        , held_b(prepare(32, 16, {0.2, 0.3}))
        , gt_b(shapes::nearest_vertices(shapes::bent_bar(32, 16, {}).vertices(), rest.mesh.vertices()))
    {
    }

    BarRun run(OperatorKind kind) const
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(7);
        const MgcnModel init = MgcnModel::create(Architecture::parse(kDefaultArchitecture), kDefaultInputDim, kind, rng);
        auto ops = [&](const Prepared& p) { return operators_for(init, p.mesh, p.analysis.basis, p.analysis.bank); };
        const OperatorSet o_rest = ops(rest), o_posed = ops(posed), o_a = ops(held_a), o_b = ops(held_b);
        const std::vector<int> labels = identity(rest.mesh.num_vertices());
        const std::vector<TrainShape> data{{&o_rest, rest.input, labels}, {&o_posed, posed.input, labels}};

        TrainConfig cfg;
        cfg.phase1_epochs = 50;
        cfg.phase2_epochs = 25;
        cfg.seed = 1;
        BarRun r;
        {
            // Training is deterministic, so this is exactly the state the full run reaches after phase 1.
            TrainConfig first = cfg;
            first.phase2_epochs = 0;
            MgcnModel m = init;
            train(m, data, first);
            r.phase1_accuracy = 0.5 * (classification_accuracy(m, data[0]) + classification_accuracy(m, data[1]));
        }
        MgcnModel model = init;
        train(model, data, cfg);
        const Eigen::MatrixXd template_desc = model.forward(rest.input, o_rest);
        r.held_out_a = exact_match_rate(nn_match(model.forward(held_a.input, o_a), template_desc).target, labels);
        r.held_out_b = exact_match_rate(nn_match(model.forward(held_b.input, o_b), template_desc).target, gt_b);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }
};

const BarBenchmark& bar_benchmark()
{
    static const BarBenchmark b;
    return b;
}

std::optional<BarRun> g_wavelet_run;

const BarRun& wavelet_run()
{
    if (!g_wavelet_run) g_wavelet_run = bar_benchmark().run(OperatorKind::Wavelet);
    return *g_wavelet_run;
}

// 7. Desk-scale learning on the bent bar.
Outcome desk_learning()
{
    const BarRun& r = wavelet_run();
    return {r.phase1_accuracy >= 0.95 && r.held_out_a >= 0.8, "phase-1 accuracy " + num(r.phase1_accuracy)
            + " (>= 0.95), held-out exact match " + num(r.held_out_a) + " (>= 0.8)"};
}

// 8. Learned descriptors across tessellations: wavelet vs Chebyshev operators.
Outcome resolution_robustness()
{
    const BarRun& w = wavelet_run();
    const BarRun c = bar_benchmark().run(OperatorKind::Chebyshev);
    const bool pass = w.degradation() <= 0.3 && c.degradation() > 0.6 && w.held_out_b > c.held_out_b;
    return {pass, "MGCN A " + num(w.held_out_a) + " B " + num(w.held_out_b) + " degradation " + num(w.degradation())
            + " (<= 0.3); Chebyshev A " + num(c.held_out_a) + " B " + num(c.held_out_b) + " degradation "
            + num(c.degradation()) + " (> 0.6); MGCN B > Chebyshev B " + (w.held_out_b > c.held_out_b ? "yes" : "no")};
}

// 9. Evaluation metrics on maps with known answers.
Outcome metric_sanity()
{
    std::mt19937_64 rng(9);
    const TriMesh m = shapes::icosphere(2);
    const int n = static_cast<int>(m.num_vertices());
    const std::vector<int> id = identity(n);
    const std::vector<int> flip = shapes::nearest_vertices(-m.vertices(), m.vertices());
    const GroundTruth gt{id, flip};
    const std::vector<double> radii = radius_grid(0.25, 26);

    bool ok = true;
    const EvalReport ident = evaluate({id, 0, 0}, gt, m, radii);
    ok = ok && ident.error.direct == 0.0 && *ident.error.symmetric == 0.0 && ident.exact_match == 1.0;
    for (const double v : ident.cge_direct) ok = ok && v == 1.0;
    const Eigen::MatrixXd desc = random_matrix(n, 6, rng);
    ok = ok && cmc_curve(desc, desc, id, n).front() == 1.0;

    auto monotone = [](const std::vector<double>& v) { return std::is_sorted(v.begin(), v.end()); };
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < 20; ++t) {
        std::vector<int> map(static_cast<std::size_t>(n));
        for (auto& x : map) x = pick(rng);
        const EvalReport r = evaluate({map, 0, 0}, gt, m, radii);
        ok = ok && *r.error.symmetric <= r.error.direct && monotone(r.cge_direct) && monotone(*r.cge_symmetric);
        ok = ok && monotone(cmc_curve(random_matrix(n, 6, rng), desc, id, n));
    }
    return {ok, ok ? "identity zero error, CGE = 1, CMC(1) = 1; symmetric <= direct and monotone curves on 20 random maps"
                   : "a metric identity failed"};
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> check;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance suite"};
    std::vector<int> known;
    std::vector<int> only;
    app.add_option("--known-failures", known, "Criteria expected to fail (recorded, not fatal)")->delimiter(',');
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    const std::set<int> expected(known.begin(), known.end());
    const std::set<int> selected(only.begin(), only.end());

    const std::vector<Criterion> criteria = {
        {1, "frame residual", 1.0, frame_residual},
        {2, "energy identity", 5.0, energy_identity},
        {3, "reconstruction", 10.0, reconstruction},
        {4, "sphere spectrum", 30.0, sphere_spectrum},
        {5, "gradient suite", 60.0, gradients},
        {6, "descriptor invariances", 60.0, invariances},
        {7, "desk-scale learning", 600.0, desk_learning},
        {8, "resolution robustness", 1200.0, resolution_robustness},
        {9, "metric sanity", 5.0, metric_sanity},
    };

    int unexpected = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const bool reused = c.id == 8 && g_wavelet_run.has_value();
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // Criterion 8 reuses the wavelet training of criterion 7; charge it to both.
        if (reused) seconds += g_wavelet_run->seconds;
        const bool in_time = seconds < c.budget_seconds;
        const bool pass = o.pass && in_time;
        std::printf("[%s] %d %s: %s; %.2f s (< %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), seconds,
            c.budget_seconds, !pass && expected.count(c.id) ? " [known failure]" : "");
        std::fflush(stdout);
        if (!pass && !expected.count(c.id)) ++unexpected;
        if (pass && expected.count(c.id)) std::printf("note: criterion %d listed as a known failure but passed\n", c.id);
    }
    return unexpected == 0 ? 0 : 1;
}
