"""Pauli strings and sums over ``q`` qubits.

A string is stored as a pair of bit masks ``(x, z)`` and realizes the
operator ``i^{|x & z|} X^x Z^z`` so that ``Y = iXZ``.  Character ``j`` of a
label such as ``"XIZ"`` acts on qubit ``j``, which is bit ``q - 1 - j`` of a
computational basis index (big-endian, matching ``numpy.kron`` order).

On a basis state the string acts as

    P |y> = i^{|x & z|} (-1)^{|z & y|} |y ^ x>.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, ParameterError, ParseError, RepresentationError

DENSE_QUBIT_CAP = 12

_CHAR_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_CHAR = {v: k for k, v in _CHAR_BITS.items()}
_IPOW = (1, 1j, -1, -1j)


def popcount(a):
    """Bit counts of an integer or integer array."""
    if isinstance(a, (int, np.integer)):
        return int(a).bit_count()
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        out += a & 1
        a = a >> 1
    return out


def parity(a):
    return popcount(a) & 1


def num_qubits(dim):
    """``q`` with ``2**q == dim``; raises ``RepresentationError`` otherwise."""
    dim = int(dim)
    if dim < 1 or dim & (dim - 1):
        raise RepresentationError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def label_to_masks(label):
    label = label.strip().upper()
    q = len(label)
    x = z = 0
    for j, ch in enumerate(label):
        try:
            bx, bz = _CHAR_BITS[ch]
        except KeyError:
            raise ParameterError(f"invalid Pauli character {ch!r} in {label!r}") from None
        bit = q - 1 - j
        x |= bx << bit
        z |= bz << bit
    return q, x, z


def masks_to_label(q, x, z):
    return "".join(_BITS_CHAR[((x >> (q - 1 - j)) & 1, (z >> (q - 1 - j)) & 1)] for j in range(q))


@dataclass(frozen=True)
class PauliString:
    qubits: int
    x: int
    z: int
    coeff: complex = 1.0

    @classmethod
    def from_label(cls, label, coeff=1.0):
        q, x, z = label_to_masks(label)
        return cls(q, x, z, complex(coeff))

    @property
    def label(self):
        return masks_to_label(self.qubits, self.x, self.z)

    @property
    def y_count(self):
        return popcount(self.x & self.z)

    def to_matrix(self):
        return PauliSum(self.qubits, {(self.x, self.z): self.coeff}).to_matrix()

    def __repr__(self):
        return f"PauliString({self.coeff!r} {self.label})"


def _mul_masks(x1, z1, x2, z2):
    """Product of unit strings: returns ``(phase, x, z)``."""
    x, z = x1 ^ x2, z1 ^ z2
    # (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{|z1 & x2|} X^x Z^z, plus the i^{|x&z|} normalizations
    k = popcount(x1 & z1) + popcount(x2 & z2) - popcount(x & z) + 2 * popcount(z1 & x2)
    return _IPOW[k % 4], x, z


class PauliSum:
    """Weighted sum of Pauli strings with duplicate strings merged."""

    def __init__(self, qubits, terms=None):
        if qubits < 0:
            raise DimensionError("qubit count must be non-negative")
        self.qubits = int(qubits)
        self.terms = {}
        limit = 1 << self.qubits
        for (x, z), c in (terms or {}).items():
            if not (0 <= x < limit and 0 <= z < limit):
                raise DimensionError(f"masks ({x}, {z}) exceed {qubits} qubits")
            self._add(int(x), int(z), complex(c))

    def _add(self, x, z, c):
        self.terms[(x, z)] = self.terms.get((x, z), 0.0) + c

    @classmethod
    def identity(cls, qubits, coeff=1.0):
        return cls(qubits, {(0, 0): coeff})

    @classmethod
    def from_strings(cls, strings, qubits=None):
        strings = list(strings)
        if qubits is None:
            if not strings:
                raise ParameterError("cannot infer the qubit count of an empty sum")
            qubits = strings[0].qubits
        out = cls(qubits)
        for s in strings:
            if s.qubits != qubits:
                raise DimensionError(f"string on {s.qubits} qubits in a {qubits}-qubit sum")
            out._add(s.x, s.z, complex(s.coeff))
        return out

    @classmethod
    def from_labels(cls, pairs):
        """Build from ``[(coeff, "XZI"), ...]``."""
        return cls.from_strings(PauliString.from_label(lbl, c) for c, lbl in pairs)

    def strings(self):
        return [PauliString(self.qubits, x, z, c) for (x, z), c in self.terms.items()]

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.strings())

    def _check(self, other):
        if self.qubits != other.qubits:
            raise DimensionError(f"qubit counts differ: {self.qubits} vs {other.qubits}")

    def __add__(self, other):
        self._check(other)
        out = PauliSum(self.qubits, self.terms)
        for (x, z), c in other.terms.items():
            out._add(x, z, c)
        return out

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        return PauliSum(self.qubits, {k: c * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        out = PauliSum(self.qubits)
        for (x1, z1), c1 in self.terms.items():
            for (x2, z2), c2 in other.terms.items():
                phase, x, z = _mul_masks(x1, z1, x2, z2)
                out._add(x, z, phase * c1 * c2)
        return out

    def tensor(self, other):
        """``self ⊗ other``; ``self`` occupies the leading (high) qubits."""
        q = other.qubits
        terms = {}
        for (x1, z1), c1 in self.terms.items():
            for (x2, z2), c2 in other.terms.items():
                key = ((x1 << q) | x2, (z1 << q) | z2)
                terms[key] = terms.get(key, 0.0) + c1 * c2
        return PauliSum(self.qubits + q, terms)

    def simplify(self, tol=1e-12):
        """Drop near-zero terms and snap tiny real or imaginary parts to zero."""
        out = PauliSum(self.qubits)
        for k, c in self.terms.items():
            re_, im = c.real, c.imag
            re_ = 0.0 if abs(re_) <= tol else re_
            im = 0.0 if abs(im) <= tol else im
            if re_ or im:
                out.terms[k] = complex(re_, im)
        return out

    def is_hermitian(self, tol=1e-12):
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def coefficient(self, label):
        q, x, z = label_to_masks(label)
        if q != self.qubits:
            raise DimensionError(f"label {label!r} has {q} qubits, sum has {self.qubits}")
        return self.terms.get((x, z), 0.0)

    def allclose(self, other, tol=1e-12):
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol for k in keys)

    def apply(self, vec):
        """Action on a state vector (or on the columns of a matrix)."""
        vec = np.asarray(vec)
        dim = 1 << self.qubits
        if vec.shape[0] != dim:
            raise DimensionError(f"vector of length {vec.shape[0]} on {self.qubits} qubits")
        y = np.arange(dim)
        out = np.zeros(vec.shape, dtype=complex)
        for (x, z), c in self.terms.items():
            sign = 1 - 2 * parity(y & z)
            phase = c * _IPOW[popcount(x & z) % 4]
            amp = phase * sign
            out[y ^ x] += amp.reshape((-1,) + (1,) * (vec.ndim - 1)) * vec
        return out

    def to_matrix(self, cap=DENSE_QUBIT_CAP):
        """Dense matrix; real when every entry is real to 1e-12."""
        if self.qubits > cap:
            raise ParameterError(f"{self.qubits} qubits exceeds the dense cap of {cap}")
        dim = 1 << self.qubits
        y = np.arange(dim)
        M = np.zeros((dim, dim), dtype=complex)
        for (x, z), c in self.terms.items():
            sign = 1 - 2 * parity(y & z)
            M[y ^ x, y] += c * _IPOW[popcount(x & z) % 4] * sign
        if np.max(np.abs(M.imag), initial=0.0) <= 1e-12:
            return M.real.copy()
        return M

    def to_text(self):
        lines = []
        for s in sorted(self.strings(), key=lambda s: s.label):
            c = s.coeff
            coeff = repr(c.real) if c.imag == 0 else f"{c.real!r}{c.imag:+.17g}j"
            lines.append(f"{coeff} {s.label}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        """Parse ``<coefficient> <label>`` lines; ``#`` starts a comment."""
        strings = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected '<coefficient> <string>', got {raw.strip()!r}", lineno)
            try:
                coeff = complex(parts[0].replace("i", "j"))
            except ValueError:
                raise ParseError(f"bad coefficient {parts[0]!r}", lineno) from None
            if not re.fullmatch(r"[IXYZixyz]+", parts[1]):
                raise ParseError(f"bad Pauli string {parts[1]!r}", lineno)
            s = PauliString.from_label(parts[1], coeff)
            if strings and s.qubits != strings[0].qubits:
                raise ParseError(f"string has {s.qubits} qubits, expected {strings[0].qubits}", lineno)
            strings.append(s)
        if not strings:
            raise ParseError("no Pauli terms found", 0)
        return cls.from_strings(strings)

    def __repr__(self):
        return f"PauliSum(qubits={self.qubits}, terms={len(self.terms)})"


def _fwht(a, axis=-1):
    """Unnormalized Walsh-Hadamard transform along ``axis`` (length 2**q)."""
    a = np.moveaxis(np.array(a, dtype=complex), axis, -1)
    shape = a.shape
    n = shape[-1]
    h = 1
    while h < n:
        a = a.reshape(shape[:-1] + (n // (2 * h), 2, h))
        lo, hi = a[..., 0, :].copy(), a[..., 1, :].copy()
        a[..., 0, :] = lo + hi
        a[..., 1, :] = lo - hi
        a = a.reshape(shape)
        h *= 2
    return np.moveaxis(a, -1, axis)


def pauli_decompose(M, tol=0.0):
    """Coefficients ``a_P = Tr(P M) / 2^q`` of a ``2^q x 2^q`` matrix.

    Uses one Walsh-Hadamard transform per X-mask, so the cost is
    ``O(q 4^q)``.  Terms with ``|a_P| <= tol`` are dropped.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    q = num_qubits(M.shape[0])
    dim = M.shape[0]
    y = np.arange(dim)
    # V[x, y] = M[y ^ x, y]
    V = M[y[None, :] ^ y[:, None], y[None, :]]
    W = _fwht(V, axis=1) / dim
    terms = {}
    for x in range(dim):
        for z in np.nonzero(np.abs(W[x]) > tol)[0]:
            z = int(z)
            terms[(x, z)] = W[x, z] * _IPOW[(-popcount(x & z)) % 4]
    return PauliSum(q, terms)


def pauli_to_matrix(ps, cap=DENSE_QUBIT_CAP):
    return ps.to_matrix(cap=cap)


def pauli_expectation(state, x, z):
    """``<psi| P |psi>`` for the unit-coefficient string with masks ``(x, z)``."""
    state = np.asarray(state)
    y = np.arange(state.size)
    sign = 1 - 2 * parity(y & z)
    val = np.vdot(state[y ^ x], sign * state) * _IPOW[popcount(x & z) % 4]
    return val
