#pragma once

#include "mgcn/mesh.hpp"

namespace mgcn::shapes {

/// Subdivided icosahedron projected to a sphere: 10 * 4^s + 2 vertices.
/// Vertices of level s are a prefix of the vertices of level s + 1.
TriMesh icosphere(int subdivisions, double radius = 1.0);

/// Bend at the bar's joint: total bend angle and the direction of the bend plane.
struct BendPose {
    double angle = 0.0;
    double direction = 0.0;
};

///
/// Closed, asymmetric tube ("bent bar") sampled on a ring grid with two pole
/// vertices: rings * segments + 2 vertices. The underlying smooth surface does
/// not depend on the sampling, so two tessellations describe the same shape.
/// Odd rings are rotated by half a segment.
///
TriMesh bent_bar(int rings, int segments, const BendPose& pose = {});

/// For each vertex of `source`, the vertex of `target` nearest in 3D.
std::vector<int> nearest_vertices(const RowMatrix3d& source, const RowMatrix3d& target);

} // namespace mgcn::shapes
