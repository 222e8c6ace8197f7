#include "mgcn/descriptors.hpp"
#include "mgcn/error.hpp"
#include "mgcn/evaluation.hpp"
#include "mgcn/mesh.hpp"
#include "mgcn/mesh_io.hpp"
#include "mgcn/pipeline.hpp"
#include "mgcn/shapes.hpp"
#include "mgcn/spectral.hpp"
#include "mgcn/wavelet.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mgcn;

PYBIND11_MODULE(_mgcn, m)
{
    m.doc() = "Spectral wavelet descriptors on triangle meshes";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<TriMesh>(m, "TriMesh")
        .def(py::init(&TriMesh::make), py::arg("vertices"), py::arg("triangles"), py::arg("labels") = std::nullopt)
        .def_property_readonly("vertices", &TriMesh::vertices)
        .def_property_readonly("triangles", &TriMesh::triangles)
        .def_property_readonly("num_vertices", &TriMesh::num_vertices)
        .def_property_readonly("surface_area", &TriMesh::surface_area)
        .def_property_readonly("content_hash", &TriMesh::content_hash)
        .def("with_vertices", &TriMesh::with_vertices);

    m.def("load_mesh", [](const std::filesystem::path& p) { return load_mesh(p); }, py::arg("path"));
    m.def("write_off", &write_off, py::arg("path"), py::arg("mesh"));
    m.def("icosphere", &shapes::icosphere, py::arg("subdivisions"), py::arg("radius") = 1.0);
    m.def("bent_bar", [](int rings, int segments, double angle, double direction) {
        return shapes::bent_bar(rings, segments, {angle, direction});
    }, py::arg("rings"), py::arg("segments"), py::arg("angle") = 0.0, py::arg("direction") = 0.0);

    m.def("cotangent_laplacian", [](const TriMesh& mesh) { return Eigen::SparseMatrix<double>(cotangent_laplacian(mesh).matrix); },
        "Symmetric positive semidefinite cotangent Laplacian (scipy.sparse).");
    m.def("lumped_areas", [](const TriMesh& mesh) { return lumped_areas(mesh).area; });
    m.def("dirichlet_energy", [](const TriMesh& mesh, const Eigen::MatrixXd& F) {
        return dirichlet_energy(cotangent_laplacian(mesh), F);
    }, py::arg("mesh"), py::arg("functions"));

    py::class_<SpectralBasis>(m, "SpectralBasis")
        .def_readonly("eigenvalues", &SpectralBasis::eigenvalues)
        .def_readonly("eigenvectors", &SpectralBasis::eigenvectors)
        .def_property_readonly("area", [](const SpectralBasis& b) { return b.mass.area; })
        .def_property_readonly("lambda_max", &SpectralBasis::lambda_max)
        .def("__len__", &SpectralBasis::size);
    m.def("compute_basis", [](const TriMesh& mesh, Eigen::Index k) { return compute_basis(mesh, k); }, py::arg("mesh"), py::arg("k"));

    py::class_<FilterConstants>(m, "FilterConstants")
        .def(py::init<>())
        .def_readwrite("A", &FilterConstants::A)
        .def_readwrite("B", &FilterConstants::B)
        .def_readwrite("C", &FilterConstants::C)
        .def_readwrite("D", &FilterConstants::D)
        .def_readwrite("E", &FilterConstants::E);
    py::class_<FilterBank>(m, "FilterBank")
        .def_static("build", &FilterBank::build, py::arg("lambda_max"), py::arg("num_scales") = kDefaultScaleCount,
            py::arg("constants") = FilterConstants{}, py::arg("eigenvalues") = Eigen::VectorXd{},
            py::arg("tolerance") = kFrameTolerance)
        .def_static("build_unchecked", &FilterBank::build_unchecked)
        .def("frame_sum", &FilterBank::frame_sum)
        .def("frame_residual", [](const FilterBank& b) { return b.frame_residual().value; })
        .def_property_readonly("scales", &FilterBank::scales)
        .def_property_readonly("lambda_max", &FilterBank::lambda_max);

    m.def("wavelet_coeffs", &wavelet_coeffs, py::arg("basis"), py::arg("bank"), py::arg("f"));
    m.def("reconstruct", &reconstruct, py::arg("basis"), py::arg("bank"), py::arg("coeffs"));

    m.def("descriptor", [](const TriMesh& mesh, const std::string& type, Eigen::Index k, int num) {
        DescriptorOptions opts;
        opts.type = type;
        opts.k = k;
        opts.num = num;
        return analyze_shape(mesh, opts).descriptor.values;
    }, py::arg("mesh"), py::arg("type") = "weds", py::arg("k") = 300, py::arg("num") = 128,
        "Per-vertex descriptor matrix (N x num); k is clamped to the vertex count.");
    m.def("hks", [](const SpectralBasis& b, int num) { return hks(b, num).values; }, py::arg("basis"), py::arg("num"));
    m.def("wks", [](const SpectralBasis& b, int num) { return wks(b, num).values; }, py::arg("basis"), py::arg("num"));

    m.def("nn_match", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return nn_match(a, b).target; });
    m.def("geodesic_from", &geodesic_from, py::arg("mesh"), py::arg("source"));
    m.def("exact_match_rate", &exact_match_rate);
    m.def("average_geodesic_error", [](const std::vector<int>& map, const std::vector<int>& gt, const TriMesh& target) {
        return average_geodesic_error({map, 0, 0}, {gt, std::nullopt}, target).direct;
    }, py::arg("map"), py::arg("gt"), py::arg("target"));
}
