"""pwavelab: a desk-scale laboratory for p-wave superfluid chains.

Bogoliubov-de Gennes spectra and Majorana edge modes, self-consistent
pairing, microwave absorption spectra, full time-domain pulse dynamics,
and compilation of logical-qubit gates on registers of edge-mode qubits.
"""

from .bdg import (
    ChainSpec,
    BdGSolution,
    InvalidSpecError,
    NoEdgeModeError,
    build_bdg_matrix,
    chain_matrices,
    classify_reflection_symmetry,
    diagonalize,
    edge_mode_closed_form,
    harmonic_trap,
    local_density_of_states,
    multiwire_min_energy,
)
from .meanfield import (
    ConvergenceError,
    PairingError,
    effective_dipolar,
    effective_soc,
    effective_spin_lattice,
    pair_correlator,
    solve_selfconsistent_delta,
    solve_uniform_gap,
)
from .spectro import (
    BroadenedSpectrum,
    CBandSpec,
    CModes,
    SpectrumResult,
    absorption_spectrum,
    broaden,
    c_eigenmodes,
    convert_frequency,
    invert_frequency,
)
from .dynamics import (
    EvolutionResult,
    InitialState,
    PropagatorFrame,
    PulseSchedule,
    PulseStep,
    build_generator,
    edge_coherence,
    edge_occupation,
    evolve,
    fidelity,
    half_masks,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
