#include "mgcn/evaluation.hpp"

#include "mgcn/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>

namespace mgcn {

Eigen::VectorXd geodesic_from(const TriMesh& mesh, int source)
{
    const auto n = mesh.num_vertices();
    if (source < 0 || source >= n) throw ValidationError("geodesic_from: source vertex out of range");
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
    const auto& V = mesh.vertices();
    for (const auto& [i, j] : unique_edges(mesh)) {
        const double w = (V.row(i) - V.row(j)).norm();
        adj[static_cast<std::size_t>(i)].emplace_back(j, w);
        adj[static_cast<std::size_t>(j)].emplace_back(i, w);
    }
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (d > dist[v]) continue;
        for (const auto& [u, w] : adj[static_cast<std::size_t>(v)]) {
            if (d + w < dist[u]) {
                dist[u] = d + w;
                queue.emplace(dist[u], u);
            }
        }
    }
    return dist;
}

CorrespondenceMap nn_match(const Eigen::MatrixXd& descA, const Eigen::MatrixXd& descB)
{
    if (descA.cols() != descB.cols()) throw ValidationError("nn_match: descriptor dimensions differ");
    if (descB.rows() == 0) throw ValidationError("nn_match: empty target descriptors");
    CorrespondenceMap map;
    map.target.resize(static_cast<std::size_t>(descA.rows()));
    for (Eigen::Index i = 0; i < descA.rows(); ++i) {
        const Eigen::VectorXd d = (descB.rowwise() - descA.row(i)).rowwise().squaredNorm();
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < d.size(); ++j) {
            if (d[j] < d[best]) best = j;
        }
        map.target[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return map;
}

GeodesicOracle::GeodesicOracle(const TriMesh& target)
    : m_mesh(&target)
    , m_norm(std::sqrt(target.surface_area()))
    , m_rows(static_cast<std::size_t>(target.num_vertices()))
{
}

double GeodesicOracle::distance(int a, int b)
{
    const auto n = m_mesh->num_vertices();
    if (a < 0 || a >= n || b < 0 || b >= n) throw ValidationError("vertex index outside the target mesh");
    if (a == b) return 0.0;
    auto& row = m_rows[static_cast<std::size_t>(b)];
    if (row.size() == 0) row = geodesic_from(*m_mesh, b) / m_norm;
    return row[a];
}

PointErrors point_errors(const CorrespondenceMap& map, const GroundTruth& gt, GeodesicOracle& oracle)
{
    if (map.target.size() != gt.direct.size()) throw ValidationError("map and ground truth differ in length");
    if (gt.symmetric && gt.symmetric->size() != gt.direct.size()) {
        throw ValidationError("symmetric ground truth has the wrong length");
    }
    PointErrors e;
    e.direct.resize(map.target.size());
    if (gt.symmetric) e.symmetric.emplace(map.target.size());
    for (std::size_t i = 0; i < map.target.size(); ++i) {
        e.direct[i] = oracle.distance(map.target[i], gt.direct[i]);
        if (gt.symmetric) (*e.symmetric)[i] = std::min(e.direct[i], oracle.distance(map.target[i], (*gt.symmetric)[i]));
    }
    return e;
}

namespace {

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (const double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace

ErrorSummary average_geodesic_error(const CorrespondenceMap& map, const GroundTruth& gt, const TriMesh& target)
{
    GeodesicOracle oracle(target);
    const PointErrors e = point_errors(map, gt, oracle);
    ErrorSummary s;
    s.direct = mean(e.direct);
    if (e.symmetric) s.symmetric = mean(*e.symmetric);
    return s;
}

std::vector<double> cge_curve(const std::vector<double>& errors, const std::vector<double>& radii)
{
    std::vector<double> curve;
    curve.reserve(radii.size());
    for (const double r : radii) {
        const auto hits = std::count_if(errors.begin(), errors.end(), [r](double e) { return e <= r; });
        curve.push_back(errors.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(errors.size()));
    }
    return curve;
}

std::vector<double> cge_curve(const CorrespondenceMap& map, const GroundTruth& gt, const TriMesh& target,
    const std::vector<double>& radii)
{
    GeodesicOracle oracle(target);
    return cge_curve(point_errors(map, gt, oracle).direct, radii);
}

std::vector<double> cmc_curve(const Eigen::MatrixXd& descA, const Eigen::MatrixXd& descB, const std::vector<int>& gt,
    int kmax)
{
    if (descA.cols() != descB.cols()) throw ValidationError("cmc_curve: descriptor dimensions differ");
    if (static_cast<Eigen::Index>(gt.size()) != descA.rows()) throw ValidationError("cmc_curve: ground truth length");
    if (kmax < 1 || kmax > descB.rows()) {
        throw ValidationError("cmc_curve: kmax must lie in [1, " + std::to_string(descB.rows()) + "]");
    }
    std::vector<Eigen::Index> hits(static_cast<std::size_t>(kmax) + 1, 0);
    for (Eigen::Index i = 0; i < descA.rows(); ++i) {
        const int g = gt[static_cast<std::size_t>(i)];
        if (g < 0 || g >= descB.rows()) throw ValidationError("cmc_curve: ground-truth index out of range");
        const Eigen::VectorXd d = (descB.rowwise() - descA.row(i)).rowwise().squaredNorm();
        const double dg = d[g];
        Eigen::Index rank = 1;
        for (Eigen::Index j = 0; j < d.size(); ++j) {
            if (d[j] < dg || (d[j] == dg && j < g)) ++rank;
        }
        if (rank <= kmax) ++hits[static_cast<std::size_t>(rank)];
    }
    std::vector<double> curve(static_cast<std::size_t>(kmax));
    Eigen::Index acc = 0;
    for (int k = 1; k <= kmax; ++k) {
        acc += hits[static_cast<std::size_t>(k)];
        curve[static_cast<std::size_t>(k - 1)] = static_cast<double>(acc) / static_cast<double>(descA.rows());
    }
    return curve;
}

double exact_match_rate(const std::vector<int>& map, const std::vector<int>& gt)
{
    if (map.size() != gt.size()) throw ValidationError("exact_match_rate: length mismatch");
    if (map.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < map.size(); ++i) hits += map[i] == gt[i];
    return static_cast<double>(hits) / static_cast<double>(map.size());
}

std::vector<double> radius_grid(double max_radius, int count)
{
    if (count < 2 || !(max_radius > 0.0)) throw ValidationError("radius_grid: need count >= 2 and a positive radius");
    std::vector<double> r(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) r[static_cast<std::size_t>(i)] = max_radius * i / (count - 1);
    return r;
}

EvalReport evaluate(const CorrespondenceMap& map, const GroundTruth& gt, const TriMesh& target,
    const std::vector<double>& radii)
{
    GeodesicOracle oracle(target);
    const PointErrors e = point_errors(map, gt, oracle);
    EvalReport r;
    r.error.direct = mean(e.direct);
    r.radii = radii;
    r.cge_direct = cge_curve(e.direct, radii);
    if (e.symmetric) {
        r.error.symmetric = mean(*e.symmetric);
        r.cge_symmetric = cge_curve(*e.symmetric, radii);
    }
    r.exact_match = exact_match_rate(map.target, gt.direct);
    return r;
}

std::string report_summary(const EvalReport& report)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "average_error = " << report.error.direct << '\n';
    out << "average_error_x1000 = " << report.error.direct * 1000.0 << '\n';
    if (report.error.symmetric) {
        out << "symmetric_error = " << *report.error.symmetric << '\n';
        out << "symmetric_error_x1000 = " << *report.error.symmetric * 1000.0 << '\n';
    }
    out << "exact_match = " << report.exact_match << '\n';
    if (!report.cmc.empty()) out << "cmc_1 = " << report.cmc.front() << '\n';
    return out.str();
}

void write_report(const std::filesystem::path& directory, const EvalReport& report)
{
    std::filesystem::create_directories(directory);
    {
        std::ofstream out(directory / "summary.txt");
        if (!out) throw ValidationError("cannot write report in " + directory.string());
        out << report_summary(report);
    }
    {
        std::ofstream out(directory / "cge.csv");
        out << std::setprecision(17) << "radius,direct" << (report.cge_symmetric ? ",symmetric" : "") << '\n';
        for (std::size_t i = 0; i < report.radii.size(); ++i) {
            out << report.radii[i] << ',' << report.cge_direct[i];
            if (report.cge_symmetric) out << ',' << (*report.cge_symmetric)[i];
            out << '\n';
        }
    }
    if (!report.cmc.empty()) {
        std::ofstream out(directory / "cmc.csv");
        out << std::setprecision(17) << "k,fraction\n";
        for (std::size_t k = 0; k < report.cmc.size(); ++k) out << k + 1 << ',' << report.cmc[k] << '\n';
    }
}

std::vector<int> read_index_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<int> indices;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        long long v = 0;
        std::string rest;
        if (!(ls >> v) || (ls >> rest) || v < 0 || v > std::numeric_limits<int>::max()) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected one non-negative index");
        }
        indices.push_back(static_cast<int>(v));
    }
    return indices;
}

void write_index_file(const std::filesystem::path& path, const std::vector<int>& indices, const std::string& header)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    if (!header.empty()) {
        std::istringstream hs(header);
        std::string line;
        while (std::getline(hs, line)) out << "# " << line << '\n';
    }
    for (const int i : indices) out << i << '\n';
}

} // namespace mgcn
