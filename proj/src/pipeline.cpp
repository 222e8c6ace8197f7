#include "mgcn/pipeline.hpp"

#include "mgcn/error.hpp"

#include <algorithm>

namespace mgcn {

FilterBank bank_for(const SpectralBasis& basis, const DescriptorOptions& options)
{
    return FilterBank::build(basis.lambda_max(), options.num_scales, options.constants, basis.eigenvalues,
        options.frame_tolerance);
}

DescriptorField compute_descriptor(const TriMesh& mesh, const SpectralBasis& basis, const DescriptorOptions& options)
{
    DescriptorField field;
    if (options.type == "weds") {
        field = weds(mesh, basis, bank_for(basis, options), options.num);
    } else if (options.type == "hks") {
        field = hks(basis, options.num);
    } else if (options.type == "wks") {
        field = wks(basis, options.num);
    } else {
        throw ValidationError("unknown descriptor type '" + options.type + "' (expected weds, hks or wks)");
    }
    field.meta.mesh_hash = mesh.content_hash();
    return field;
}

ShapeAnalysis analyze_shape(const TriMesh& mesh, const DescriptorOptions& options)
{
    if (options.k < 2) throw ValidationError("basis size must be at least 2");
    ShapeAnalysis a;
    a.basis = compute_basis(mesh, std::min<Eigen::Index>(options.k, mesh.num_vertices()));
    a.bank = bank_for(a.basis, options);
    a.descriptor = compute_descriptor(mesh, a.basis, options);
    return a;
}

Eigen::MatrixXd network_input(const DescriptorField& field, int input_dim)
{
    const Eigen::MatrixXd x = resample_columns(field.values, input_dim);
    return minmax_normalize(x, column_range(x));
}

OperatorSet operators_for(const MgcnModel& model, const TriMesh& mesh, const SpectralBasis& basis,
    const FilterBank& bank)
{
    if (model.kind() == OperatorKind::Chebyshev) {
        const auto scales = model.required_scales();
        return chebyshev_operators(mesh, scales.back() + 1);
    }
    return wavelet_operators(basis, bank, model.required_scales());
}

} // namespace mgcn
