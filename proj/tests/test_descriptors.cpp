#include "mgcn/descriptors.hpp"
#include "mgcn/error.hpp"
#include "mgcn/evaluation.hpp"
#include "mgcn/pipeline.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <fstream>

using namespace mgcn;

namespace {

// sum_j G(lambda_j)^2 lambda_j^p |sigma_j|^2: the closed form of the decomposed total.
double energy_oracle(const SpectralBasis& b, const FilterBank& bank, const Eigen::MatrixXd& X, int p)
{
    const Eigen::MatrixXd sigma = project(b, X);
    double total = 0.0;
    for (Eigen::Index j = 1; j < b.size(); ++j) {
        const double G = bank.frame_sum(b.eigenvalues[j]);
        total += G * G * std::pow(b.eigenvalues[j], p) * sigma.row(j).squaredNorm();
    }
    return total;
}

double median(std::vector<double> v)
{
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
}

int exact_matches(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const CorrespondenceMap map = nn_match(a, b);
    int hits = 0;
    for (std::size_t i = 0; i < map.target.size(); ++i) hits += map.target[i] == static_cast<int>(i);
    return hits;
}

struct Analyzed {
    TriMesh mesh;
    SpectralBasis basis;
    FilterBank bank;
};

Analyzed analyze(const TriMesh& mesh, Eigen::Index k)
{
    SpectralBasis b = compute_basis(mesh, k);
    FilterBank bank = FilterBank::build(b.lambda_max(), 31, {}, b.eigenvalues);
    return {mesh, std::move(b), std::move(bank)};
}

} // namespace

TEST(EnergyDecomposition, ConstantsCarryNoEnergy)
{
    const Analyzed s = analyze(shapes::bent_bar(10, 8, {0.3, 0.1}), 40);
    const EnergyDecomposition e
        = energy_decomposition(s.basis, s.bank, Eigen::MatrixXd::Constant(s.basis.num_vertices(), 3, 1.7), EnergyWeighting::Lambda1);
    EXPECT_LT(e.table.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EnergyDecomposition, SingleEigenfunction)
{
    const Analyzed s = analyze(shapes::bent_bar(10, 8, {0.3, 0.1}), 40);
    for (const Eigen::Index j : {1, 7, 39}) {
        const Eigen::MatrixXd f = s.basis.eigenvectors.col(j);
        const double total = energy_decomposition(s.basis, s.bank, f, EnergyWeighting::Lambda1).total();
        const double G = s.bank.frame_sum(s.basis.eigenvalues[j]);
        EXPECT_NEAR(total, G * G * s.basis.eigenvalues[j], 1e-10 * s.basis.eigenvalues[j]);
        EXPECT_NEAR(total / s.basis.eigenvalues[j], 1.0, 0.0201);
    }
}

TEST(EnergyDecomposition, CoordinatesConserveDirichletEnergy)
{
    for (const TriMesh& m : {shapes::bent_bar(20, 10, {}), shapes::bent_bar(20, 10, {0.8, 0.3}), test::lumpy_sphere(2)}) {
        const Analyzed s = analyze(m, m.num_vertices());
        const Eigen::MatrixXd X = m.vertices();
        const double total = energy_decomposition(s.basis, s.bank, X, EnergyWeighting::Lambda1).total();
        EXPECT_NEAR(total, energy_oracle(s.basis, s.bank, X, 1), 1e-9 * total);
        const double E = dirichlet_energy(cotangent_laplacian(m), X);
        EXPECT_NEAR(E / (2.0 * m.surface_area()), 1.0, 1e-8);
        EXPECT_LT(std::abs(total - E) / E, 0.03);
    }
}

TEST(EnergyDecomposition, NearlyFullBasisStaysWithinThreePercent)
{
    const TriMesh m = shapes::bent_bar(20, 10, {0.5, 0.0});
    const Analyzed s = analyze(m, (9 * m.num_vertices() + 9) / 10);
    const Eigen::MatrixXd X = m.vertices();
    const double total = energy_decomposition(s.basis, s.bank, X, EnergyWeighting::Lambda1).total();
    const double E = dirichlet_energy(cotangent_laplacian(m), X);
    EXPECT_LT(std::abs(total - E) / E, 0.03);
}

TEST(EnergyDecomposition, RotationInvariant)
{
    std::mt19937_64 rng(17);
    const TriMesh m = shapes::bent_bar(12, 9, {0.6, 0.2});
    const Analyzed s = analyze(m, 60);
    const Eigen::MatrixXd X = m.vertices();
    for (const auto w : {EnergyWeighting::Lambda1, EnergyWeighting::Lambda2}) {
        const Eigen::MatrixXd base = energy_decomposition(s.basis, s.bank, X, w).table;
        for (int trial = 0; trial < 3; ++trial) {
            const Eigen::MatrixXd Y = test::rigid(m.vertices(), test::random_rotation(rng), {0.0, 0.0, 0.0});
            EXPECT_LT(relative_drift(base, energy_decomposition(s.basis, s.bank, Y, w).table), 1e-8);
        }
    }
}

TEST(EnergyDecomposition, SquaredWeightingIsScaleInvariant)
{
    const TriMesh m = shapes::bent_bar(12, 9, {0.6, 0.2});
    const TriMesh big = m.with_vertices(2.0 * m.vertices());
    const Analyzed a = analyze(m, 60);
    const Analyzed b = analyze(big, 60);
    const Eigen::MatrixXd ea = energy_decomposition(a.basis, a.bank, m.vertices(), EnergyWeighting::Lambda2).table;
    const Eigen::MatrixXd eb = energy_decomposition(b.basis, b.bank, big.vertices(), EnergyWeighting::Lambda2).table;
    EXPECT_LT(relative_drift(ea, eb), 1e-6);
    // With the first power of lambda the energy grows with the area instead.
    const double ta = energy_decomposition(a.basis, a.bank, m.vertices(), EnergyWeighting::Lambda1).total();
    const double tb = energy_decomposition(b.basis, b.bank, big.vertices(), EnergyWeighting::Lambda1).total();
    EXPECT_NEAR(tb / ta, 4.0, 1e-6);
}

TEST(EnergyDecomposition, RejectsMismatchedRows)
{
    const Analyzed s = analyze(test::unit_triangle(), 3);
    EXPECT_THROW(energy_decomposition(s.basis, s.bank, Eigen::MatrixXd::Zero(4, 3)), ValidationError);
}

TEST(Weds, ShapeMetadataAndTriangle)
{
    const Analyzed s = analyze(test::unit_triangle(), 3);
    const DescriptorField f = weds(s.mesh, s.basis, s.bank, 128);
    EXPECT_EQ(f.num_vertices(), 3);
    EXPECT_EQ(f.dim(), 128);
    EXPECT_TRUE(f.values.allFinite());
    EXPECT_EQ(f.meta.type, "weds");
    EXPECT_EQ(f.meta.sample_count, 128);
    EXPECT_EQ(f.meta.scale_count, 4);
    EXPECT_EQ(f.meta.bank_hash, s.bank.hash());
    EXPECT_EQ(f.meta.mesh_hash, s.mesh.content_hash());
    EXPECT_THROW(weds(s.mesh, s.basis, s.bank, 0), ValidationError);
    EXPECT_THROW(weds(s.mesh, s.basis, s.bank, 1025), ValidationError);
}

TEST(Weds, MatchesBlockOracle)
{
    const Analyzed s = analyze(shapes::bent_bar(8, 7, {0.4, 0.0}), 30);
    const int num = 64;
    const DescriptorField f = weds(s.mesh, s.basis, s.bank, num);
    const Eigen::MatrixXd E
        = energy_decomposition(s.basis, s.bank, s.mesh.vertices(), EnergyWeighting::Lambda2).table.transpose();
    const std::vector<int> scales = select_scales(num);
    const Eigen::Index total = 32 * static_cast<Eigen::Index>(scales.size());
    for (int c = 0; c < num; ++c) {
        const Eigen::Index src = c * total / num;
        const int m = scales[static_cast<std::size_t>(src / 32)];
        const Eigen::MatrixXd psi = wavelet_matrix(s.basis, s.bank, m);
        for (const Eigen::Index v : {0, 13, 40}) {
            const Eigen::VectorXd col = psi.col(v);
            const Eigen::VectorXd star = (col.array() - col.minCoeff()) / (col.maxCoeff() - col.minCoeff());
            const double expect = star.dot(E.col(src % 32));
            ASSERT_NEAR(f.values(v, c), expect, 1e-10 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST(Weds, RigidMotionInvariance)
{
    std::mt19937_64 rng(31);
    const TriMesh m = shapes::bent_bar(12, 9, {0.7, 1.0});
    const Analyzed s = analyze(m, 80);
    const DescriptorField base = weds(s.mesh, s.basis, s.bank, 128);
    for (int trial = 0; trial < 5; ++trial) {
        const TriMesh moved = m.with_vertices(test::rigid(m.vertices(), test::random_rotation(rng), {1.0, -2.0, 0.5}));
        const Analyzed t = analyze(moved, 80);
        EXPECT_LT(relative_drift(base.values, weds(t.mesh, t.basis, t.bank, 128).values), 1e-8);
        EXPECT_LT(relative_drift(hks(s.basis, 32).values, hks(t.basis, 32).values), 1e-8);
        EXPECT_LT(relative_drift(wks(s.basis, 32).values, wks(t.basis, 32).values), 1e-8);
    }
}

TEST(Weds, PermutationEquivariance)
{
    std::mt19937_64 rng(41);
    const TriMesh m = test::lumpy_sphere(2);
    const auto perm = test::random_permutation(static_cast<int>(m.num_vertices()), rng);
    const Analyzed a = analyze(m, m.num_vertices());
    const Analyzed b = analyze(permute_vertices(m, perm), m.num_vertices());
    const DescriptorField fa = weds(a.mesh, a.basis, a.bank, 128);
    const DescriptorField fb = weds(b.mesh, b.basis, b.bank, 128);
    Eigen::MatrixXd relabeled(fa.values.rows(), fa.values.cols());
    for (Eigen::Index i = 0; i < relabeled.rows(); ++i) relabeled.row(i) = fa.values.row(perm[static_cast<std::size_t>(i)]);
    EXPECT_LT(relative_drift(relabeled, fb.values), 1e-8);

    Eigen::MatrixXd h(fa.values.rows(), 16);
    const Eigen::MatrixXd ha = hks(a.basis, 16).values;
    for (Eigen::Index i = 0; i < h.rows(); ++i) h.row(i) = ha.row(perm[static_cast<std::size_t>(i)]);
    EXPECT_LT(relative_drift(h, hks(b.basis, 16).values), 1e-8);
}

TEST(Weds, AntipodesAgreeOnTheSphere)
{
    const TriMesh m = shapes::icosphere(2);
    const Analyzed s = analyze(m, m.num_vertices());
    const DescriptorField f = weds(s.mesh, s.basis, s.bank, 128);
    const RowMatrix3d flipped = -m.vertices();
    const std::vector<int> antipode = shapes::nearest_vertices(flipped, m.vertices());
    const double scale = f.values.cwiseAbs().maxCoeff();
    for (Eigen::Index v = 0; v < m.num_vertices(); v += 7) {
        const int w = antipode[static_cast<std::size_t>(v)];
        ASSERT_LT((m.vertices().row(w) + m.vertices().row(v)).norm(), 1e-12);
        EXPECT_LT((f.values.row(v) - f.values.row(w)).cwiseAbs().maxCoeff(), 1e-6 * scale);
    }
}

TEST(Weds, ScalingPreservesDistanceRanks)
{
    const TriMesh m = shapes::bent_bar(12, 9, {0.6, 0.2});
    const TriMesh big = m.with_vertices(2.0 * m.vertices());
    const Analyzed a = analyze(m, 80);
    const Analyzed b = analyze(big, 80);
    const Eigen::MatrixXd fa = weds(a.mesh, a.basis, a.bank, 128).values;
    const Eigen::MatrixXd fb = weds(b.mesh, b.basis, b.bank, 128).values;
    auto order = [](const Eigen::MatrixXd& f) {
        std::vector<double> d(static_cast<std::size_t>(f.rows()));
        for (Eigen::Index i = 0; i < f.rows(); ++i) d[static_cast<std::size_t>(i)] = (f.row(i) - f.row(0)).norm();
        std::vector<int> idx(d.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return d[static_cast<std::size_t>(x)] < d[static_cast<std::size_t>(y)]; });
        return idx;
    };
    EXPECT_EQ(order(fa), order(fb));
}

TEST(Weds, StableAcrossTessellations)
{
    // 642 and 2562 vertices of the same smooth surface. Both meshes use the
    // coarse mesh's bank: the filters are steep enough in lambda / lambda_max
    // that the few-percent drift of lambda_max between tessellations would
    // otherwise dominate the comparison.
    const TriMesh coarse = test::lumpy_sphere(3);
    const TriMesh fine = test::lumpy_sphere(4);
    const SpectralBasis a = compute_basis(coarse, 25);
    const SpectralBasis b = compute_basis(fine, 25);
    const FilterBank bank = FilterBank::build(a.lambda_max(), 31, {}, a.eigenvalues);
    const Eigen::MatrixXd fa = weds(coarse, a, bank, 128).values;
    const Eigen::MatrixXd fb = weds(fine, b, bank, 128).values;
    const std::vector<int> nearest = shapes::nearest_vertices(coarse.vertices(), fine.vertices());
    std::vector<double> discrepancy;
    std::vector<double> spread;
    for (Eigen::Index v = 0; v < fa.rows(); ++v) {
        discrepancy.push_back((fa.row(v) - fb.row(nearest[static_cast<std::size_t>(v)])).norm());
        for (Eigen::Index u = v + 1; u < fa.rows(); u += 5) spread.push_back((fa.row(v) - fa.row(u)).norm());
    }
    const double ratio = median(discrepancy) / median(spread);
    RecordProperty("median_ratio", std::to_string(ratio));
    EXPECT_LE(ratio, 0.15);
}

TEST(KernelSignatures, HomogeneousOnTheSphere)
{
    // 25 modes close the l = 4 band.
    const SpectralBasis b = compute_basis(shapes::icosphere(4), 25);
    for (const DescriptorField& f : {hks(b, 16), wks(b, 16)}) {
        for (Eigen::Index c = 0; c < f.dim(); ++c) {
            const double mean = f.values.col(c).mean();
            const double spread = f.values.col(c).maxCoeff() - f.values.col(c).minCoeff();
            EXPECT_LE(spread / mean, 0.02) << f.meta.type << " column " << c;
        }
    }
}

TEST(KernelSignatures, LongTimeHeatLimitIsConstant)
{
    const SpectralBasis b = compute_basis(shapes::bent_bar(10, 8, {0.5, 0.0}), 30);
    // Past the slowest decay only phi_0^2 = 1 / area survives.
    const double t = 60.0 * std::log(10.0) / b.eigenvalues[1];
    Eigen::VectorXd heat = Eigen::VectorXd::Zero(b.num_vertices());
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        heat += std::exp(-b.eigenvalues[j] * t) * b.eigenvectors.col(j).cwiseAbs2();
    }
    EXPECT_LT((heat.array() * b.mass.total - 1.0).abs().maxCoeff(), 1e-12);
    // The last hks column sits at 4 ln10 / lambda_1 and is already close to that limit.
    const Eigen::VectorXd last = hks(b, 8).values.col(7);
    EXPECT_LT((last.array() * b.mass.total - 1.0).abs().maxCoeff(), 0.5);
}

TEST(KernelSignatures, HksFirstColumnOracle)
{
    const SpectralBasis b = compute_basis(shapes::bent_bar(10, 8, {0.5, 0.0}), 30);
    const double t = 4.0 * std::log(10.0) / b.lambda_max();
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(b.num_vertices());
    for (Eigen::Index j = 0; j < b.size(); ++j) expect += std::exp(-b.eigenvalues[j] * t) * b.eigenvectors.col(j).cwiseAbs2();
    EXPECT_LT((hks(b, 5).values.col(0) - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.maxCoeff());
}

TEST(Weds, DiscriminatesPosesBetterThanHeat)
{
    // Identical tessellation, bent pose against the rest pose, ground truth = identity.
    for (const double angle : {0.1, 0.4, 0.8}) {
        const Analyzed a = analyze(shapes::bent_bar(20, 10, {}), 100);
        const Analyzed b = analyze(shapes::bent_bar(20, 10, {angle, 0.6}), 100);
        const int w = exact_matches(weds(a.mesh, a.basis, a.bank, 128).values, weds(b.mesh, b.basis, b.bank, 128).values);
        const int h = exact_matches(hks(a.basis, 128).values, hks(b.basis, 128).values);
        RecordProperty("weds_" + std::to_string(angle), w);
        RecordProperty("hks_" + std::to_string(angle), h);
        std::cout << "bend " << angle << ": weds " << w << "/202, hks " << h << "/202\n";
        EXPECT_GE(w, h);
    }
}

TEST(DescriptorFiles, BinaryAndCsvRoundTrip)
{
    test::TempDir dir;
    const Analyzed s = analyze(shapes::bent_bar(6, 5, {}), 20);
    const DescriptorField f = weds(s.mesh, s.basis, s.bank, 40);
    write_descriptors(dir / "d.bin", f);
    const DescriptorField back = read_descriptors(dir / "d.bin");
    EXPECT_EQ(back.values, f.values);
    EXPECT_EQ(back.meta.type, f.meta.type);
    EXPECT_EQ(back.meta.basis_size, f.meta.basis_size);
    EXPECT_EQ(back.meta.scale_count, f.meta.scale_count);
    EXPECT_EQ(back.meta.bank_hash, f.meta.bank_hash);
    EXPECT_EQ(back.meta.mesh_hash, f.meta.mesh_hash);

    write_descriptors_csv(dir / "d.csv", f);
    std::ifstream in(dir / "d.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header.substr(0, 12), "vertex,d0,d1");
    std::stringstream cells(row);
    std::string cell;
    std::getline(cells, cell, ',');
    EXPECT_EQ(cell, "0");
    std::getline(cells, cell, ',');
    EXPECT_EQ(std::stod(cell), f.values(0, 0));
}

TEST(DescriptorFiles, ValidationErrors)
{
    DescriptorField f;
    f.values = Eigen::MatrixXd::Ones(3, 4);
    f.meta.sample_count = 5;
    EXPECT_THROW(f.validate(), ValidationError);
    f.meta.sample_count = 4;
    f.values(1, 1) = std::nan("");
    EXPECT_THROW(f.validate(), NumericalError);
    test::TempDir dir;
    std::ofstream(dir / "bad.bin") << "MGCNDSC1";
    EXPECT_THROW(read_descriptors(dir / "bad.bin"), ValidationError);
}

TEST(ColumnStriding, IndicesAndRepeats)
{
    EXPECT_EQ(stride_columns(10, 5), (std::vector<Eigen::Index>{0, 2, 4, 6, 8}));
    EXPECT_EQ(stride_columns(4, 6), (std::vector<Eigen::Index>{0, 0, 1, 2, 2, 3}));
    Eigen::MatrixXd m(1, 3);
    m << 1, 2, 3;
    EXPECT_EQ(resample_columns(m, 3), m);
    const Eigen::MatrixXd up = resample_columns(m, 6);
    EXPECT_EQ(up(0, 1), 1.0);
    EXPECT_EQ(up(0, 5), 3.0);
    EXPECT_THROW(resample_columns(m, 0), ValidationError);
}
