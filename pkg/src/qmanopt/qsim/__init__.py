"""Statevector backend: Pauli algebra, entangled frame states and measurements."""

from .frame import StatevectorFrame
from .pauli import (
    PauliString,
    PauliSum,
    label_to_masks,
    masks_to_label,
    pauli_decompose,
    pauli_expectation,
    pauli_to_matrix,
)
from .state import (
    EntangledState,
    apply_retraction_exact,
    apply_retraction_trotter,
    expectation,
    grassmann_dof_retract,
    is_horizontal,
    prepare_state,
    sample_expectation,
    subspace_matrix,
    system_density,
)

__all__ = [
    "EntangledState",
    "PauliString",
    "PauliSum",
    "StatevectorFrame",
    "apply_retraction_exact",
    "apply_retraction_trotter",
    "expectation",
    "grassmann_dof_retract",
    "is_horizontal",
    "label_to_masks",
    "masks_to_label",
    "pauli_decompose",
    "pauli_expectation",
    "pauli_to_matrix",
    "prepare_state",
    "sample_expectation",
    "subspace_matrix",
    "system_density",
]
