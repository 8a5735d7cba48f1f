"""Scattering theory for one-dimensional discrete-time quantum walks.

Modules
-------
lattice
    Coins, coin fields, lattice states and one walk step.
free_walk
    The homogeneous background walk: spectrum, Green kernel, free resolvent.
scattering
    Interior matrix, scattering matrix routes, resonances, inverse problem.
oracles
    Independent reference computations used for verification.
cli
    The ``qwscatter`` command.
"""

from .errors import (
    DenominatorVanishes,
    EigenSolverFailure,
    FormMismatch,
    GridTooCoarse,
    InvalidQuasiEnergy,
    NoConvergence,
    NonPenetrable,
    NotOfForm,
    NotUnitary,
    NumericalFailure,
    QWScatterError,
    SolveSingular,
    ThresholdSingularity,
    ValidationError,
    WindowTooSmall,
)
from .free_walk import (
    GreenKernel,
    SpectralBands,
    apply_homogeneous,
    bstar_norm,
    contour_integral_I,
    dispersion_zeta,
    free_resolvent_apply,
    free_spectrum,
    green_defect_residual,
    green_free_limit,
    green_homogeneous,
    green_table,
    plane_wave,
    resolvent_asymptotics_check,
)
from .lattice import (
    Coin,
    CoinField,
    HomogeneousParams,
    PlaneWaveTail,
    StateWindow,
    apply_walk,
    coin_from_params,
    coin_to_params,
    is_valid_theta,
    load_field,
    make_coin,
    save_field,
)
from .scattering import (
    BoundaryState,
    InteriorMatrix,
    ScatteringMatrix,
    build_interior_matrix,
    eigenfunction_infinity,
    evolve_boundary,
    infer_barrier_distance,
    resonance_angles,
    smatrix_double_barrier,
    smatrix_via_dynamics,
    smatrix_via_interior,
    spectral_check,
    transfer_extend,
    transmission_floor,
)

__version__ = "0.1.0"
