#include "mgcn/shapes.hpp"

#include "mgcn/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace mgcn::shapes {

TriMesh icosphere(int subdivisions, double radius)
{
    if (subdivisions < 0) throw ValidationError("icosphere: negative subdivision level");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (auto& v : verts) v.normalize();
    std::vector<Eigen::Vector3i> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::make_pair(std::min(a, b), std::max(a, b));
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back((verts[a] + verts[b]).normalized());
            const int id = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<Eigen::Vector3i> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.emplace_back(f[0], ab, ca);
            next.emplace_back(f[1], bc, ab);
            next.emplace_back(f[2], ca, bc);
            next.emplace_back(ab, bc, ca);
        }
        faces = std::move(next);
    }

    RowMatrix3d V(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) {
        V.row(static_cast<Eigen::Index>(i)) = radius * verts[i].transpose();
    }
    RowMatrix3i F(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) {
        F.row(static_cast<Eigen::Index>(i)) = faces[i].transpose();
    }
    return TriMesh::make(std::move(V), std::move(F));
}

namespace {

constexpr double kLength = 4.0;
constexpr double kRadius = 0.45;

// Cross-section radius of the tube at axial parameter u in [0,1] and angle theta.
double tube_radius(double u, double theta)
{
    const double envelope = std::pow(std::sin(std::numbers::pi * u), 0.45);
    const double taper = 1.0 + 0.45 * u;
    const double profile = 1.0 + 0.18 * std::cos(theta) + 0.1 * std::sin(2.0 * theta) + 0.06 * std::cos(3.0 * theta + 0.4);
    const double bulge = 1.0 + 0.25 * std::exp(-std::pow((u - 0.3) / 0.08, 2.0));
    return kRadius * envelope * taper * profile * bulge;
}

// The bar is rigid except for a joint on [kJointStart, kJointStart + kJointLength]
// along the axis, where the bend angle ramps up smoothly.
constexpr double kJointStart = 0.4 * kLength;
constexpr double kJointLength = 0.3 * kLength;

double bend_angle(double s, double total)
{
    const double x = std::clamp((s - kJointStart) / kJointLength, 0.0, 1.0);
    return total * x * x * (3.0 - 2.0 * x);
}

// Centerline point and in-plane normal at arc length s (bend plane = xy).
std::pair<Eigen::Vector2d, Eigen::Vector2d> centerline(double s, double total)
{
    Eigen::Vector2d c(std::min(s, kJointStart), 0.0);
    if (s > kJointStart) {
        const double upto = std::min(s, kJointStart + kJointLength);
        constexpr int steps = 256;
        const double h = (upto - kJointStart) / steps;
        for (int i = 0; i < steps; ++i) {
            const double a = bend_angle(kJointStart + (i + 0.5) * h, total);
            c += h * Eigen::Vector2d(std::cos(a), std::sin(a));
        }
        if (s > upto) c += (s - upto) * Eigen::Vector2d(std::cos(total), std::sin(total));
    }
    const double a = bend_angle(s, total);
    return {c, Eigen::Vector2d(-std::sin(a), std::cos(a))};
}

Eigen::Vector3d place(double u, double theta, const BendPose& pose)
{
    const double r = tube_radius(u, theta);
    const double y = r * std::cos(theta);
    const double z = r * std::sin(theta);
    // Rotate the cross-section frame so the bend happens in direction `pose.direction`.
    const double c = std::cos(pose.direction);
    const double sn = std::sin(pose.direction);
    const double along = c * y + sn * z;   // offset in the bend plane
    const double across = -sn * y + c * z; // offset normal to the bend plane
    const auto [center, normal] = centerline(u * kLength, pose.angle);
    const Eigen::Vector2d p = center + along * normal;
    // Undo the frame rotation around the x axis of the straight bar.
    return {p.x(), c * p.y() - sn * across, sn * p.y() + c * across};
}

} // namespace

TriMesh bent_bar(int rings, int segments, const BendPose& pose)
{
    if (rings < 2 || segments < 3) throw ValidationError("bent_bar: need at least 2 rings and 3 segments");
    const int n = rings * segments + 2;
    RowMatrix3d V(n, 3);
    V.row(0) = place(0.0, 0.0, pose).transpose();
    for (int i = 0; i < rings; ++i) {
        const double u = (i + 1.0) / (rings + 1.0);
        const double offset = (i % 2 == 0) ? 0.0 : 0.5;
        for (int j = 0; j < segments; ++j) {
            const double theta = 2.0 * std::numbers::pi * (j + offset) / segments;
            V.row(1 + i * segments + j) = place(u, theta, pose).transpose();
        }
    }
    V.row(n - 1) = place(1.0, 0.0, pose).transpose();

    std::vector<Eigen::Vector3i> faces;
    auto ring_vertex = [&](int i, int j) { return 1 + i * segments + ((j % segments) + segments) % segments; };
    for (int j = 0; j < segments; ++j) {
        faces.emplace_back(0, ring_vertex(0, j + 1), ring_vertex(0, j));
    }
    for (int i = 0; i + 1 < rings; ++i) {
        const bool odd = (i % 2) == 1;
        for (int j = 0; j < segments; ++j) {
            const int a = ring_vertex(i, j);
            const int b = ring_vertex(i, j + 1);
            // Staggered rings: the lower ring is shifted forward when i is odd.
            const int c = ring_vertex(i + 1, odd ? j + 1 : j);
            const int d = ring_vertex(i + 1, odd ? j : j - 1);
            faces.emplace_back(a, b, c);
            faces.emplace_back(a, c, d);
        }
    }
    for (int j = 0; j < segments; ++j) {
        faces.emplace_back(n - 1, ring_vertex(rings - 1, j), ring_vertex(rings - 1, j + 1));
    }

    RowMatrix3i F(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t t = 0; t < faces.size(); ++t) {
        F.row(static_cast<Eigen::Index>(t)) = faces[t].transpose();
    }
    return TriMesh::make(std::move(V), std::move(F));
}

std::vector<int> nearest_vertices(const RowMatrix3d& source, const RowMatrix3d& target)
{
    std::vector<int> result(static_cast<std::size_t>(source.rows()));
    for (Eigen::Index i = 0; i < source.rows(); ++i) {
        Eigen::Index best = 0;
        (target.rowwise() - source.row(i)).rowwise().squaredNorm().minCoeff(&best);
        result[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return result;
}

} // namespace mgcn::shapes
