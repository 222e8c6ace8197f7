"""Python bindings for the mgcn mesh descriptor library."""

from ._mgcn import (
    FilterBank,
    FilterConstants,
    NumericalError,
    SpectralBasis,
    TriMesh,
    ValidationError,
    average_geodesic_error,
    bent_bar,
    compute_basis,
    cotangent_laplacian,
    descriptor,
    dirichlet_energy,
    exact_match_rate,
    geodesic_from,
    hks,
    icosphere,
    load_mesh,
    lumped_areas,
    nn_match,
    reconstruct,
    wavelet_coeffs,
    wks,
    write_off,
)

__all__ = [name for name in dir() if not name.startswith("_")]
