"""Witten-deformation laboratory on flat tori.

Builds the deformed de Rham complex of a periodic cubical grid, computes
low-lying Witten Laplacian spectra across a deformation sweep, and certifies
the weak and strong Morse inequalities against exact model-operator oracles.
"""

__version__ = "0.1.0"

from .torus_complex import (
    TorusGrid,
    CellId,
    Cochain,
    MassMatrix,
    build_grid,
    enumerate_cells,
    coboundary,
    mass_matrix,
    sample_form,
    sup_norm,
)
from .morse_functions import (
    MorseFunctionSpec,
    CriticalPoint,
    MorseProfile,
    NotMorseError,
    make_morse_spec,
    preset_function,
    find_critical_points,
    critical_index,
    morse_counts,
)
from .witten_operators import (
    DeformedComplex,
    build_deformed_complex,
    deform_coboundary,
    adjoint_operator,
    witten_laplacian,
    bochner_laplacian,
    hessian_coupling_coefficient,
)
from .eigensolver import (
    SpectrumRequest,
    EigResult,
    GapAnalysis,
    smallest_eigs,
    dense_spectrum_oracle,
    count_below,
    kernel_dimension,
    detect_gap,
)
from .oscillator_oracle import (
    HermiteSequence,
    ModelOperatorSpec,
    ModelSpectrum,
    TrialFormSpec,
    hermite_polynomial,
    hermite_function,
    hermite_gram,
    oscillator_eigenvalues,
    model_spectrum,
    model_kernel,
    discretize_model,
    trial_form,
)
from .morse_verifier import (
    VerificationRun,
    InequalityReport,
    betti_numbers,
    check_inequalities,
    exactness_check,
    run_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
