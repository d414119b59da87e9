"""Entangled frame state and the measurement and retraction formulas.

A frame ``X`` (``n x p``, ``n = 2^qs``) is stored as the unit vector

    |Psi> = p^{-1/2} sum_k |k> |x_k> = p^{-1/2} vec(X)

on an ancilla register of ``anc_dim`` (next power of two >= p) states
followed by the system register.  Ancilla branches ``k >= p`` hold zeros.
With ``Psi`` the amplitudes reshaped to ``(anc_dim, n)`` (so ``Psi = X^T /
sqrt(p)`` on the populated rows):

    <Psi| K (x) B |Psi> = Tr(K X^T B X) / p
    X K X^T             = p Psi^T K Psi
    X^T B X             = p Psi B Psi^T
    exp(A) (x) exp(L)   : Psi -> exp(A) Psi exp(L)^T

The last line is the retraction ``exp(L) X exp(-A)`` in vectorized form.
"""

from __future__ import annotations

import numpy as np

from .. import linalg
from ..errors import DimensionError, ParameterError, RepresentationError
from ..manifold import StiefelPoint, TangentAction
from .pauli import PauliSum, num_qubits, parity, pauli_decompose, pauli_expectation, popcount

NORM_TOL = 1e-12


def _next_pow2(p):
    return 1 << max(0, (int(p) - 1).bit_length())


class EntangledState:
    """Immutable statevector of a frame; see the module docstring."""

    __slots__ = ("n", "p", "anc_dim", "_amps")

    def __init__(self, amplitudes, n, p):
        amps = np.asarray(amplitudes)
        num_qubits(n)
        anc_dim = _next_pow2(p)
        if amps.shape != (anc_dim * n,):
            raise DimensionError(f"expected {anc_dim * n} amplitudes for n={n}, p={p}, got {amps.shape}")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_TOL:
            raise RepresentationError(f"state norm {nrm!r} differs from 1")
        if np.any(amps.reshape(anc_dim, n)[p:]):
            raise RepresentationError("padded ancilla branches must be zero")
        amps = amps.copy()
        amps.setflags(write=False)
        self.n, self.p, self.anc_dim, self._amps = int(n), int(p), anc_dim, amps

    @property
    def amplitudes(self):
        return self._amps

    @property
    def psi(self):
        """Amplitudes as an ``anc_dim x n`` matrix (ancilla index slow)."""
        return self._amps.reshape(self.anc_dim, self.n)

    @property
    def system_qubits(self):
        return num_qubits(self.n)

    @property
    def ancilla_qubits(self):
        return num_qubits(self.anc_dim)

    @property
    def qubits(self):
        return self.system_qubits + self.ancilla_qubits

    def frame(self):
        """Recover ``X = sqrt(p) Psi^T`` from the populated branches."""
        X = np.sqrt(self.p) * self.psi[: self.p].T
        return np.real_if_close(X, tol=1000)

    def __repr__(self):
        return f"EntangledState(n={self.n}, p={self.p}, anc_dim={self.anc_dim})"


def _from_psi(psi, n, p):
    if np.iscomplexobj(psi) and np.max(np.abs(psi.imag), initial=0.0) <= 1e-12:
        psi = psi.real
    psi = np.array(psi)
    psi[p:] = 0.0
    # re-normalize away rounding; drift beyond NORM_TOL is still reported
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-9:
        raise RepresentationError(f"evolution lost unitarity: norm {nrm!r}")
    return EntangledState((psi / nrm).reshape(-1), n, p)


def prepare_state(X):
    """``p^{-1/2} vec(X)`` padded onto a power-of-two ancilla register."""
    X = X.matrix if isinstance(X, StiefelPoint) else StiefelPoint(X).matrix
    n, p = X.shape
    try:
        num_qubits(n)
    except RepresentationError:
        raise RepresentationError(f"statevector backend needs n a power of two, got n={n}") from None
    psi = np.zeros((_next_pow2(p), n))
    psi[:p] = X.T / np.sqrt(p)
    return EntangledState(psi.reshape(-1), n, p)


def _ancilla_operator(state, K):
    """Dense ancilla operator padded from ``p x p`` to ``anc_dim`` if needed."""
    if K is None:
        return None
    if isinstance(K, PauliSum):
        if K.qubits != state.ancilla_qubits:
            raise DimensionError(f"ancilla operator on {K.qubits} qubits, register has {state.ancilla_qubits}")
        return K.to_matrix()
    K = np.asarray(K)
    if K.shape == (state.anc_dim, state.anc_dim):
        return K
    if K.shape != (state.p, state.p):
        raise DimensionError(f"ancilla operator must be {state.p}x{state.p}, got {K.shape}")
    Kp = np.zeros((state.anc_dim, state.anc_dim), dtype=K.dtype)
    Kp[: state.p, : state.p] = K
    return Kp


def _system_operator(state, B):
    if isinstance(B, PauliSum):
        if B.qubits != state.system_qubits:
            raise DimensionError(f"system operator on {B.qubits} qubits, register has {state.system_qubits}")
        return B.to_matrix()
    B = np.asarray(B)
    if B.shape != (state.n, state.n):
        raise DimensionError(f"system operator must be {state.n}x{state.n}, got {B.shape}")
    return B


def expectation(state, K_op=None, B_op=None):
    """``<Psi| K (x) B |Psi>``; either factor defaults to the identity."""
    psi = state.psi
    K = _ancilla_operator(state, K_op)
    Kpsi = psi if K is None else K @ psi
    if B_op is not None:
        Kpsi = Kpsi @ _system_operator(state, B_op).T
    val = np.vdot(psi, Kpsi)
    return float(val.real) if abs(val.imag) <= 1e-12 * max(1.0, abs(val)) else complex(val)


def system_density(state, K=None):
    """``X K X^T`` (``X X^T`` without ``K``) by contracting the ancilla."""
    psi = state.psi
    Kd = _ancilla_operator(state, K)
    inner = psi if Kd is None else Kd @ psi
    out = state.p * (psi.T @ inner)
    return np.real_if_close(out, tol=1000)


def subspace_matrix(state, B):
    """``X^T B X`` by contracting the system register."""
    psi = state.psi
    Bd = _system_operator(state, B)
    out = state.p * (psi @ Bd @ psi.T)[: state.p, : state.p]
    return np.real_if_close(out, tol=1000)


def _check_action(state, act):
    if act.L.shape != (state.n, state.n) or act.A.shape != (state.p, state.p):
        raise DimensionError(
            f"action of shape ({act.L.shape}, {act.A.shape}) does not match n={state.n}, p={state.p}"
        )


def _apply_right(state, psi, A, t):
    """Ancilla factor ``exp(tA)`` as a direct sum with the identity on padding."""
    if not np.any(A):
        return psi
    out = psi.copy()
    out[: state.p] = linalg.expm_skew(A, t) @ psi[: state.p]
    return out


def apply_retraction_exact(state, act, t=1.0):
    """State of ``exp(tL) X exp(-tA)`` via ``exp(tA) (x) exp(tL)``."""
    _check_action(state, act)
    if t == 0.0:
        return state
    psi = state.psi @ linalg.expm_skew(act.L, t).T
    psi = _apply_right(state, psi, act.A, t)
    return _from_psi(psi, state.n, state.p)


def _term_rotation(psi, x, z, coeff, theta):
    """``exp(theta * coeff * P)`` on the system index of ``psi``.

    ``coeff`` of a real skew generator is purely imaginary on strings with
    an odd number of Y factors, so ``coeff * P`` is a real skew matrix that
    squares to ``-|coeff|^2``: the exponential is
    ``cos(b) I + sin(b) (i P)`` with ``b = theta * Im(coeff)``.
    """
    b = theta * coeff.imag
    ny = popcount(x & z)
    y = np.arange(psi.shape[1])
    # (i P) acting on the basis: i^{ny+1} (-1)^{|z&y|} |y^x>
    phase = (1j ** ((ny + 1) % 4)).real
    sign = (1 - 2 * parity(y & z)) * phase
    # psi rows are states over y; (iP psi)[y ^ x] = sign[y] psi[y]
    iP = np.empty_like(psi)
    iP[:, y ^ x] = psi * sign
    return np.cos(b) * psi + np.sin(b) * iP


def trotter_terms(L, max_terms=None, tol=1e-14):
    """Pauli terms of a real skew generator as ``[(x, z, coeff), ...]``."""
    ps = pauli_decompose(L, tol=tol)
    terms = []
    for (x, z), c in sorted(ps.terms.items()):
        if abs(c.real) > 1e-10 * max(1.0, abs(c)):
            raise ParameterError("generator is not real skew-symmetric (real Pauli coefficient found)")
        terms.append((x, z, c))
    if max_terms is not None and len(terms) > max_terms:
        raise ParameterError(f"generator has {len(terms)} Pauli terms, budget is {max_terms}")
    return terms


def apply_retraction_trotter(state, act, t=1.0, steps=1, max_terms=None):
    """Second-order Trotterized retraction.

    Each step applies the Pauli rotations of ``L`` forward and then backward
    with half the step (symmetric splitting).  The ancilla factor
    ``exp(tA)`` is applied exactly on the populated branches.
    """
    _check_action(state, act)
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    if t == 0.0:
        return state
    terms = trotter_terms(act.L, max_terms)
    psi = np.array(state.psi, dtype=float)
    half = 0.5 * t / steps
    for _ in range(steps):
        for x, z, c in terms:
            psi = _term_rotation(psi, x, z, c, half)
        for x, z, c in reversed(terms):
            psi = _term_rotation(psi, x, z, c, half)
    psi = _apply_right(state, psi, act.A, t)
    return _from_psi(psi, state.n, state.p)


def is_horizontal(state, O, tol=1e-10):
    """True when ``O X`` already lies in the Grassmann tangent space (``X^T O X = 0``)."""
    return float(np.max(np.abs(subspace_matrix(state, O)), initial=0.0)) <= tol


def grassmann_dof_retract(state, O, t=1.0):
    """Retract along ``P^Gr(O X)`` with ``exp(tA') (x) exp(tO)``, ``A' = X^T O X``.

    ``A'`` is measured from the state, so the right factor cancels the
    vertical part of ``O X`` without knowing ``X``.
    """
    O = linalg.as_skew(O, tol=1e-10, name="O")
    A = linalg.skew(subspace_matrix(state, O))
    return apply_retraction_exact(state, TangentAction(O, A), t)


def _full_observable(state, obs):
    if obs.qubits == state.qubits:
        return obs
    if obs.qubits == state.system_qubits:
        return PauliSum.identity(state.ancilla_qubits).tensor(obs)
    raise DimensionError(
        f"observable on {obs.qubits} qubits; register has {state.system_qubits} system"
        f" + {state.ancilla_qubits} ancilla qubits"
    )


def sample_expectation(state, obs, shots=None, seed=None):
    """Finite-shot estimate of ``<Psi|obs|Psi>`` and its standard error.

    ``obs`` acts on the full register or on the system register only (then
    extended by the ancilla identity).  Every non-identity string is
    measured with ``shots`` single-shot +/-1 outcomes drawn from its exact
    outcome probabilities.  ``shots=None`` returns the exact value with a
    zero standard error.
    """
    obs = _full_observable(state, obs)
    if not obs.is_hermitian():
        raise ParameterError("observable must have real coefficients")
    amps = state.amplitudes
    exact = {k: float(pauli_expectation(amps, *k).real) for k in obs.terms}
    if shots is None:
        return float(sum(c.real * exact[k] for k, c in obs.terms.items())), 0.0
    if int(shots) != shots or shots < 1:
        raise ParameterError(f"shots must be a positive integer, got {shots}")
    shots = int(shots)
    rng = np.random.default_rng(seed)
    estimate, var = 0.0, 0.0
    for k in sorted(obs.terms):
        c = obs.terms[k].real
        if k == (0, 0):
            estimate += c
            continue
        prob = min(max(0.5 * (1.0 + exact[k]), 0.0), 1.0)
        plus = rng.binomial(shots, prob)
        mean = 2.0 * plus / shots - 1.0
        estimate += c * mean
        if shots > 1:
            var += c * c * (1.0 - mean * mean) / (shots - 1)
    return float(estimate), float(np.sqrt(var))
