"""Molecular Hamiltonians: FCIDUMP I/O, Jordan-Wigner assembly, symmetry sectors.

Conventions
-----------
* Two-electron integrals are in chemists' notation ``(pq|rs)`` and enter as

      H = E_core + sum h_pq a+_ps a_qs + 1/2 sum (pq|rs) a+_ps a+_rt a_st a_qs

  summed over spatial orbitals and spins ``s, t``.
* Spin orbitals are blocked: qubit ``j`` holds spatial orbital ``j`` with
  spin alpha for ``j < m`` and orbital ``j - m`` with spin beta otherwise.
* Jordan-Wigner: ``a_j = 1/2 (X_j + i Y_j) Z_0 ... Z_{j-1}``; ``|1>`` is an
  occupied spin orbital.  Qubit ``j`` is bit ``q - 1 - j`` of a basis index.
"""

from __future__ import annotations

import itertools
import math
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import linalg
from .errors import DimensionError, ParameterError, ParseError, SymmetryError
from .manifold import StiefelPoint
from .qsim.pauli import DENSE_QUBIT_CAP, PauliSum, num_qubits, popcount

# ---------------------------------------------------------------- FCIDUMP


@dataclass
class FcidumpData:
    norb: int
    nelec: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    orbsym: list = field(default_factory=list)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eEdD][-+]?\d+)?"


def _parse_header(header, first_line):
    body = re.sub(r"^\s*&FCI", "", header, flags=re.IGNORECASE)
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.IGNORECASE)
    keys = {}
    parts = re.split(r"([A-Za-z_][A-Za-z0-9_]*)\s*=", body)
    # parts = [prefix, key1, value1, key2, value2, ...]
    for key, raw in zip(parts[1::2], parts[2::2]):
        vals = [v for v in re.split(r"[,\s]+", raw.strip()) if v]
        try:
            keys[key.upper()] = [int(v) for v in vals]
        except ValueError:
            raise ParseError(f"non-integer value for header key {key}: {raw.strip()!r}", first_line) from None
    missing = [k for k in ("NORB", "NELEC") if k not in keys]
    if missing:
        raise ParseError(f"header is missing {', '.join(missing)}", first_line)
    for k in ("NORB", "NELEC", "MS2"):
        if k in keys and len(keys[k]) != 1:
            raise ParseError(f"header key {k} needs one value, got {keys[k]}", first_line)
    return keys


def parse_fcidump(text):
    """Parse FCIDUMP text into :class:`FcidumpData`.

    Two-body lines fill all 8 index permutations and one-body lines both
    triangles.  ``e i 0 0 0`` orbital-energy lines are accepted and
    ignored.  MS2 defaults to 0 when absent.
    """
    lines = text.splitlines()
    start = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if start is None or not lines[start].lstrip().upper().startswith("&FCI"):
        raise ParseError("missing '&FCI' header", (start or 0) + 1)
    end = None
    for i in range(start, len(lines)):
        if re.search(r"(&END|^\s*/\s*$|/\s*$)", lines[i], flags=re.IGNORECASE):
            end = i
            break
    if end is None:
        raise ParseError("header is not terminated by '&END' or '/'", start + 1)
    keys = _parse_header(" ".join(lines[start : end + 1]), start + 1)
    norb, nelec = keys["NORB"][0], keys["NELEC"][0]
    ms2 = keys.get("MS2", [0])[0]
    if norb < 1 or nelec < 0 or nelec > 2 * norb:
        raise ParseError(f"inconsistent header NORB={norb}, NELEC={nelec}", start + 1)
    orbsym = keys.get("ORBSYM", [])
    h = np.zeros((norb, norb))
    g = np.zeros((norb,) * 4)
    ecore = 0.0
    for lineno in range(end + 2, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 5 or not re.fullmatch(_NUM, toks[0]):
            raise ParseError(f"expected 'value i j k l', got {line!r}", lineno)
        try:
            val = float(toks[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(t) for t in toks[1:])
        except ValueError:
            raise ParseError(f"malformed integral line {line!r}", lineno) from None
        if any(not 0 <= idx <= norb for idx in (i, j, k, l)):
            raise ParseError(f"orbital index out of range 1..{norb} in {line!r}", lineno)
        if i and j and k and l:
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((i, j, k, l), (k, l, i, j)):
                g[a, b, c, d] = g[b, a, c, d] = g[a, b, d, c] = g[b, a, d, c] = val
        elif i and j and not k and not l:
            h[i - 1, j - 1] = h[j - 1, i - 1] = val
        elif not (i or j or k or l):
            ecore = val
        elif i and not (j or k or l):
            continue
        else:
            raise ParseError(f"unsupported index pattern in {line!r}", lineno)
    return FcidumpData(norb, nelec, ms2, ecore, h, g, orbsym)


def read_fcidump(path):
    with open(path) as fh:
        return parse_fcidump(fh.read())


def write_fcidump(data, tol=0.0):
    """FCIDUMP text with one line per symmetry-unique integral."""
    m = data.norb
    out = [f"&FCI NORB={m},NELEC={data.nelec},MS2={data.ms2},"]
    if data.orbsym:
        out.append(" ORBSYM=" + ",".join(str(s) for s in data.orbsym) + ",")
    out.append("&END")
    for i, j, k, l in itertools.product(range(m), repeat=4):
        if i >= j and k >= l and (i * (i + 1) // 2 + j) >= (k * (k + 1) // 2 + l):
            v = data.two_body[i, j, k, l]
            if abs(v) > tol:
                out.append(f"{float(v)!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(m):
        for j in range(i + 1):
            v = data.one_body[i, j]
            if abs(v) > tol:
                out.append(f"{float(v)!r} {i + 1} {j + 1} 0 0")
    out.append(f"{float(data.core_energy)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


def bundled_fixture(name="h2_sto3g.fcidump"):
    """Path of a FCIDUMP file shipped with the package."""
    return os.path.join(os.path.dirname(__file__), "data", name)


# ----------------------------------------------------------- Jordan-Wigner


@lru_cache(maxsize=None)
def _ladder(qubits, j, dagger):
    """Annihilation (or creation) operator on spin orbital ``j``."""
    if not 0 <= j < qubits:
        raise DimensionError(f"spin orbital {j} outside 0..{qubits - 1}")
    tail = "Z" * j
    rest = "I" * (qubits - j - 1)
    sgn = -1j if dagger else 1j
    return PauliSum.from_labels([(0.5, tail + "X" + rest), (0.5 * sgn, tail + "Y" + rest)])


def annihilation(qubits, j):
    return _ladder(qubits, j, False)


def creation(qubits, j):
    return _ladder(qubits, j, True)


def number_operator(qubits, orbitals=None):
    """``sum_j n_j = sum_j (I - Z_j) / 2`` over the listed spin orbitals."""
    orbitals = range(qubits) if orbitals is None else orbitals
    out = PauliSum(qubits)
    for j in orbitals:
        out = out + PauliSum.from_labels([(0.5, "I" * qubits), (-0.5, "I" * j + "Z" + "I" * (qubits - j - 1))])
    return out.simplify()


def sz_operator(norb):
    """``2 S_z = N_alpha - N_beta`` for the blocked spin-orbital layout."""
    q = 2 * norb
    return (number_operator(q, range(norb)) - number_operator(q, range(norb, q))).simplify()


def build_jw_hamiltonian(data, tol=1e-14):
    """Qubit Hamiltonian on ``2 * norb`` qubits."""
    m = data.norb
    q = 2 * m
    h, g = data.one_body, data.two_body
    H = PauliSum.identity(q, data.core_energy)
    spins = (0, m)
    for s in spins:
        for p_, r in itertools.product(range(m), repeat=2):
            if abs(h[p_, r]) > tol:
                H = H + h[p_, r] * (creation(q, s + p_) @ annihilation(q, s + r))
    for s, t in itertools.product(spins, repeat=2):
        for p_, q_, r, u in itertools.product(range(m), repeat=4):
            v = g[p_, q_, r, u]
            if abs(v) <= tol or (s == t and (p_ == r or q_ == u)):
                continue
            term = creation(q, s + p_) @ creation(q, t + r) @ annihilation(q, t + u) @ annihilation(q, s + q_)
            H = H + (0.5 * v) * term
    return H.simplify()


def pauli_to_matrix(ps, cap=DENSE_QUBIT_CAP):
    """Dense realization of a Pauli sum (real when the sum is)."""
    return ps.to_matrix(cap=cap)


# ----------------------------------------------------------------- sectors


@dataclass(frozen=True)
class SectorBasis:
    qubits: int
    indices: tuple
    n_electrons: int
    sz_twice: int | None

    @property
    def dim(self):
        return len(self.indices)


def _spin_counts(idx, norb):
    lo = (1 << norb) - 1
    return popcount(idx >> norb), popcount(idx & lo)


def sector_basis(qubits, n_electrons, sz_twice=None):
    """Basis indices with fixed particle number (and ``2 S_z`` when given)."""
    if not 0 <= n_electrons <= qubits:
        raise ParameterError(f"n_electrons={n_electrons} outside 0..{qubits}")
    idx = np.arange(1 << qubits)
    keep = popcount(idx) == n_electrons
    if sz_twice is not None:
        if qubits % 2:
            raise ParameterError("S_z sectors need an even number of qubits (alpha and beta blocks)")
        na, nb = _spin_counts(idx, qubits // 2)
        keep &= (na - nb) == sz_twice
    return SectorBasis(qubits, tuple(int(i) for i in idx[keep]), n_electrons, sz_twice)


def sector_dimension(norb, n_electrons, sz_twice):
    """``C(m, N_alpha) C(m, N_beta)`` for the blocked layout."""
    if (n_electrons + sz_twice) % 2:
        return 0
    na, nb = (n_electrons + sz_twice) // 2, (n_electrons - sz_twice) // 2
    if min(na, nb) < 0:
        return 0
    return math.comb(norb, na) * math.comb(norb, nb)


def sector_project(H, n_electrons, sz_twice=None, tol=1e-8):
    """Restrict a number-conserving ``2^q`` matrix to a symmetry sector."""
    H = linalg.as_symmetric(H, tol=1e-10, name="H")
    q = num_qubits(H.shape[0])
    idx = np.arange(H.shape[0])
    counts = popcount(idx)
    leak = np.max(np.abs(H[counts[:, None] != counts[None, :]]), initial=0.0)
    if leak > tol:
        raise SymmetryError(f"H does not conserve particle number: max coupling {leak:.3e}")
    if sz_twice is not None and q % 2 == 0:
        na, nb = _spin_counts(idx, q // 2)
        sz = na - nb
        leak = np.max(np.abs(H[sz[:, None] != sz[None, :]]), initial=0.0)
        if leak > tol:
            raise SymmetryError(f"H does not conserve S_z: max coupling {leak:.3e}")
    basis = sector_basis(q, n_electrons, sz_twice)
    sel = np.array(basis.indices, dtype=int)
    return basis, H[np.ix_(sel, sel)]


def screen_initial_frame(H, p):
    """Basis columns at the ``p`` smallest diagonal entries, ascending (ties by index)."""
    H = linalg.as_square(H, "H")
    n = H.shape[0]
    if not 1 <= p <= n:
        raise ParameterError(f"need 1 <= p <= n, got p={p}, n={n}")
    order = np.argsort(np.diag(H), kind="stable")[:p]
    X = np.zeros((n, p))
    X[order, np.arange(p)] = 1.0
    return StiefelPoint(X)


# ----------------------------------------------------------------- loading

HAMILTONIAN_FORMATS = ("fcidump", "matrix", "pauli")


def load_hamiltonian(path, fmt=None, sector=None):
    """Dense Hamiltonian from an FCIDUMP, MatrixMarket or Pauli-sum file.

    ``sector = (n_electrons, sz_twice)`` restricts the result; for FCIDUMP
    input ``sz_twice`` may be ``None`` to keep every spin sector.
    """
    if fmt is None:
        ext = os.path.splitext(str(path))[1].lower()
        fmt = {".fcidump": "fcidump", ".mtx": "matrix", ".pauli": "pauli"}.get(ext)
        if fmt is None and os.path.basename(str(path)).upper().startswith("FCIDUMP"):
            fmt = "fcidump"
    if fmt not in HAMILTONIAN_FORMATS:
        raise ParameterError(f"unknown Hamiltonian format {fmt!r}; expected one of {HAMILTONIAN_FORMATS}")
    with open(path) as fh:
        text = fh.read()
    if fmt == "fcidump":
        H = pauli_to_matrix(build_jw_hamiltonian(parse_fcidump(text)))
    elif fmt == "pauli":
        H = pauli_to_matrix(PauliSum.from_text(text))
    else:
        H = linalg.read_matrix_market(text)
    if np.iscomplexobj(H):
        raise ParameterError("Hamiltonian has complex entries; only real Hamiltonians are supported")
    H = linalg.as_symmetric(linalg.sym(H) if np.allclose(H, H.T, atol=1e-12) else H, tol=1e-10, name="H")
    if sector is not None:
        n_el, sz = sector
        _, H = sector_project(H, n_el, sz)
    return H
