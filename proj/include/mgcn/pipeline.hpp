#pragma once

#include "mgcn/descriptors.hpp"
#include "mgcn/model.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mgcn {

struct DescriptorOptions {
    std::string type = "weds"; ///< weds, hks or wks
    Eigen::Index k = 300;      ///< clamped to the vertex count
    int num = 128;
    int num_scales = kDefaultScaleCount;
    FilterConstants constants;
    double frame_tolerance = kFrameTolerance;
};

/// Basis, filter bank and descriptor of one mesh.
struct ShapeAnalysis {
    SpectralBasis basis;
    FilterBank bank;
    DescriptorField descriptor;
};

/// Bank for a basis: lambda_max = largest eigenvalue, frame checked on the basis eigenvalues.
FilterBank bank_for(const SpectralBasis& basis, const DescriptorOptions& options);

ShapeAnalysis analyze_shape(const TriMesh& mesh, const DescriptorOptions& options);

DescriptorField compute_descriptor(const TriMesh& mesh, const SpectralBasis& basis, const DescriptorOptions& options);

///
/// Network input built from a descriptor field: columns resampled to
/// `input_dim` by uniform striding, then min-max normalized per column over
/// the shape's vertices (the same Norm the layers apply).
///
Eigen::MatrixXd network_input(const DescriptorField& field, int input_dim);

/// Operators a model needs on one mesh.
OperatorSet operators_for(const MgcnModel& model, const TriMesh& mesh, const SpectralBasis& basis,
    const FilterBank& bank);

} // namespace mgcn
