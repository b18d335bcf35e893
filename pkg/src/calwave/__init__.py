"""Generalized continuous wavelet transforms from matrix dilation groups."""

from .calderon import (
    CalderonReport,
    calderon_field,
    calderon_integral,
    classify,
    mollify,
    normalize_to_admissible,
    synthesize_nonunimodular,
    weak_admissibility_normalizer,
)
from .groups import (
    Axis,
    GroupElement,
    GroupModel,
    QuadratureRule,
    build_quadrature,
    builtin_group,
    dual_action,
    modular_G,
)
from .measure import (
    Disintegration,
    build_disintegration,
    build_mu_field,
    kappa_estimate,
    orbit_space_mass,
    phi_decomposition_identity,
    pseudo_image,
    verify_disintegration,
)
from .orbits import (
    OrbitReport,
    TransversalModel,
    builtin_transversal,
    orbit_measure_integral,
    probe_epsilon_stabilizer,
)
from .spectral import (
    BandMask,
    SpectralFunction,
    UniformGrid,
    evaluate_offgrid,
    l2_norm,
    load_spectral,
    mask_catalog,
    save_spectral,
)
from .transform import (
    Signal,
    WaveletCoefficients,
    analyze,
    coefficient_norm,
    freq_to_space,
    frequency_grid_of,
    roundtrip,
    space_to_freq,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
