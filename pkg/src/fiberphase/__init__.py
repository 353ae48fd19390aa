"""Geometric phase of polarized photons in coiled optical fibers."""

from .evolution import (
    EvolutionResult,
    WangKeijiParams,
    closed_form_state,
    closed_form_states,
    conditional_initial_state,
    hamiltonian_at,
    integrate,
    wang_keiji_decompose,
)
from .geometry import (
    EffectiveField,
    HelixPath,
    HelixSpec,
    PathSpec,
    SampledPath,
    check_motion_identity,
    effective_field,
    helix_gamma,
    helix_wavevector,
    ingest_path,
    initial_wavevector_check,
    read_path_file,
)
from .phases import (
    PhaseDecomposition,
    decompose,
    dynamical_phase,
    frame_phase,
    geometric_phase,
    helicity_expectation,
    pancharatnam_phase,
    solid_angle_phase,
)
from .spin import SpinRepresentation, StateVector, expm_antihermitian, make_spin, rotation_V

__version__ = "0.1.0"
