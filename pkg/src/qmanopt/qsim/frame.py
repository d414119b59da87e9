"""Frame protocol on top of an :class:`EntangledState`.

The optimizers only ever ask a point for ``X W X^T`` and ``X^T B X`` and
for a retraction, so a statevector frame can replace the dense
:class:`~qmanopt.manifold.StiefelPoint` without touching solver code.

In shot mode both measurements are reconstructed from sampled
expectation values of product strings ``Q (x) P`` (ancilla ``Q``, system
``P``): for a real state ``<Q (x) P> = Tr(Psi^T Q Psi P^T)`` and ``P^T =
(-1)^{n_Y} P``, which fixes the sign of every coefficient.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, ParameterError
from ..manifold import TangentAction, retraction_generators
from .pauli import PauliSum, pauli_decompose, pauli_expectation, popcount
from .state import (
    EntangledState,
    apply_retraction_exact,
    apply_retraction_trotter,
    prepare_state,
    subspace_matrix,
    system_density,
)


class StatevectorFrame:
    """A Stiefel point held as an entangled statevector.

    ``trotter_steps = 0`` uses exact exponentials for the retraction,
    otherwise the second-order product formula with that many steps.
    ``shots`` switches measurements to finite-shot estimates drawn from
    ``rng`` (a ``numpy.random.Generator`` or a seed).
    """

    def __init__(self, state, trotter_steps=0, shots=None, rng=None, max_terms=None):
        if not isinstance(state, EntangledState):
            state = prepare_state(state)
        if trotter_steps < 0:
            raise ParameterError("trotter_steps must be >= 0")
        if shots is not None and (int(shots) != shots or shots < 1):
            raise ParameterError(f"shots must be a positive integer, got {shots}")
        self.state = state
        self.trotter_steps = int(trotter_steps)
        self.shots = None if shots is None else int(shots)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.max_terms = max_terms

    @property
    def n(self):
        return self.state.n

    @property
    def p(self):
        return self.state.p

    @property
    def matrix(self):
        """Dense frame read back from the amplitudes (reporting only)."""
        return self.state.frame()

    def _spawn(self, state):
        return StatevectorFrame(state, self.trotter_steps, self.shots, self.rng, self.max_terms)

    def projector(self, weights=None):
        if weights is not None:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (self.p, self.p):
                raise DimensionError(f"weights must be {self.p}x{self.p}, got {weights.shape}")
        if self.shots is None:
            return system_density(self.state, weights)
        W = np.eye(self.p) if weights is None else weights
        return self._sampled_projector(W)

    def compress(self, B):
        B = np.asarray(B, dtype=float)
        if B.shape != (self.n, self.n):
            raise DimensionError(f"operator must be {self.n}x{self.n}, got {B.shape}")
        if self.shots is None:
            return subspace_matrix(self.state, B)
        return self._sampled_compress(B)

    def retract(self, act, t=1.0, alpha=0.0):
        L, A = retraction_generators(self, act, alpha)
        act = TangentAction(L, A)
        if self.trotter_steps:
            state = apply_retraction_trotter(self.state, act, t, self.trotter_steps, self.max_terms)
        else:
            state = apply_retraction_exact(self.state, act, t)
        return self._spawn(state)

    def left_multiply(self, U):
        """Frame ``U X``, i.e. ``I (x) U`` on the statevector."""
        U = np.asarray(U, dtype=float)
        if U.shape != (self.n, self.n):
            raise DimensionError(f"U must be {self.n}x{self.n}, got {U.shape}")
        return self._spawn(prepare_state(U @ self.matrix))

    def select_columns(self, indices):
        return self._spawn(prepare_state(self.matrix[:, list(indices)]))

    # -- shot mode -------------------------------------------------------

    def _sample(self, x, z):
        """One finite-shot estimate of a unit Pauli string on the full register."""
        if x == 0 and z == 0:
            return 1.0
        exact = float(pauli_expectation(self.state.amplitudes, x, z).real)
        prob = min(max(0.5 * (1.0 + exact), 0.0), 1.0)
        return 2.0 * self.rng.binomial(self.shots, prob) / self.shots - 1.0

    def _sampled_projector(self, W):
        st = self.state
        qs = st.system_qubits
        Wpad = np.zeros((st.anc_dim, st.anc_dim))
        Wpad[: self.p, : self.p] = W
        wq = pauli_decompose(Wpad, tol=1e-14)
        out = PauliSum(qs)
        for (xq, zq), cq in sorted(wq.terms.items()):
            for xp in range(st.n):
                for zp in range(st.n):
                    est = self._sample((xq << qs) | xp, (zq << qs) | zp)
                    sign = -1.0 if popcount(xp & zp) & 1 else 1.0
                    out._add(xp, zp, cq * sign * est / st.n)
        return self.p * np.real(out.to_matrix())

    def _sampled_compress(self, B):
        st = self.state
        qs, qa = st.system_qubits, st.ancilla_qubits
        bp = pauli_decompose(B, tol=1e-14)
        out = PauliSum(qa)
        for (xp, zp), cp in sorted(bp.terms.items()):
            sign = -1.0 if popcount(xp & zp) & 1 else 1.0
            for xq in range(st.anc_dim):
                for zq in range(st.anc_dim):
                    est = self._sample((xq << qs) | xp, (zq << qs) | zp)
                    out._add(xq, zq, cp * sign * est / st.anc_dim)
        C = np.real(out.to_matrix())
        return self.p * C[: self.p, : self.p]

    def __repr__(self):
        mode = "exact" if self.shots is None else f"shots={self.shots}"
        return f"StatevectorFrame(n={self.n}, p={self.p}, {mode}, trotter_steps={self.trotter_steps})"
