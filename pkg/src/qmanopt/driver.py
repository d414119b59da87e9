"""End-to-end eigensolver strategies, run configuration and result export.

Strategies for the ``p`` lowest eigenpairs of ``H``:

1. Stiefel optimization with distinct weights ``K`` (columns resolve
   individual eigenvectors in ``K`` order).
2. Grassmann optimization followed by classical diagonalization of the
   subspace energy matrix ``E = X^T H X``.
3. Grassmann optimization followed by a Stiefel optimization over
   ``O(p)`` on ``E``.
4. Iterative block diagonalization: a ``Gr(n, p)`` solve and then
   ``log2(p)`` stages that each halve every diagonal block, either with
   ``Gr(n, p/2)`` solves whose rotations act on the whole frame (mode A)
   or with Stiefel solves with ``K = +/-1`` (mode B).
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ConfigError, ParameterError, StageFailure, StagnationError
from .hamiltonian import HAMILTONIAN_FORMATS, load_hamiltonian, screen_initial_frame
from .manifold import GRASSMANN, STIEFEL, ManifoldKind, StiefelPoint, TangentAction
from .optim import CGConfig, TrustRegionConfig, solve_rcg, solve_rtr
from .problems import GrassmannProblem, RestrictedProblem, StiefelProblem, default_weights
from .qsim import StatevectorFrame, prepare_state

log = logging.getLogger(__name__)

BACKENDS = ("classical", "statevector-exact", "statevector-shots")
OPTIMIZERS = ("rtr", "rcg")
DEFAULT_GRAD_TOL = 1e-6
DEFAULT_BLOCK_TOL = 1e-8
OVERLAP_MAX_DIM = 2048
# driver solves run to tight tolerances, where a 3-step tCG budget only converges linearly
DRIVER_INNER_CG = 50


@dataclass
class RunConfig:
    p: int
    hamiltonian: str | None = None
    hamiltonian_format: str | None = None
    sector: tuple | None = None
    strategy: int = 2
    manifold: str | None = None
    optimizer: str = "rtr"
    optimizer_options: dict = field(default_factory=dict)
    backend: str = "classical"
    shots: int | None = None
    seed: int = 0
    k_diagonal: list | None = None
    alpha: float = 0.0
    trotter_steps: int = 0
    initial_frame: str = "screened"
    strategy4_mode: str = "A"
    block_tol: float = DEFAULT_BLOCK_TOL
    output_dir: str | None = None

    def __post_init__(self):
        if self.manifold is None and self.strategy in (1, 2, 3, 4):
            self.manifold = "stiefel" if self.strategy == 1 else "grassmann"
        problems = self.violations()
        if problems:
            raise ConfigError(problems)

    @classmethod
    def from_dict(cls, d, base_dir=None):
        """Build from a JSON-style mapping; nested ``optimizer`` and ``backend`` objects are accepted."""
        if not isinstance(d, dict):
            raise ConfigError([f"configuration must be an object, got {type(d).__name__}"])
        d = dict(d)
        problems = []
        opt = d.pop("optimizer", None)
        if isinstance(opt, dict):
            opt = dict(opt)
            d["optimizer"] = opt.pop("name", "rtr")
            d.setdefault("optimizer_options", {}).update(opt)
        elif opt is not None:
            d["optimizer"] = opt
        backend = d.pop("backend", None)
        if isinstance(backend, dict):
            backend = dict(backend)
            d["backend"] = backend.pop("name", "classical")
            for key in ("shots", "seed", "trotter_steps"):
                if key in backend:
                    d[key] = backend.pop(key)
            problems += [f"unknown backend key {k!r}" for k in backend]
        elif backend is not None:
            d["backend"] = backend
        ham = d.get("hamiltonian")
        if isinstance(ham, dict):
            ham = dict(ham)
            d["hamiltonian"] = ham.pop("path", None)
            if "format" in ham:
                d["hamiltonian_format"] = ham.pop("format")
            problems += [f"unknown hamiltonian key {k!r}" for k in ham]
        if base_dir and isinstance(d.get("hamiltonian"), str) and not os.path.isabs(d["hamiltonian"]):
            d["hamiltonian"] = os.path.join(base_dir, d["hamiltonian"])
        names = {f.name for f in dataclasses.fields(cls)}
        problems += [f"unknown key {k!r}" for k in sorted(set(d) - names)]
        if "p" not in d:
            problems.append("missing required key 'p'")
        if problems:
            raise ConfigError(problems)
        if isinstance(d.get("sector"), list):
            d["sector"] = tuple(d["sector"])
        return cls(**d)

    def violations(self):
        out = []

        def is_int(v):
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

        if not is_int(self.p) or self.p < 1:
            out.append(f"p must be a positive integer, got {self.p!r}")
        if self.strategy not in (1, 2, 3, 4):
            out.append(f"strategy must be 1, 2, 3 or 4, got {self.strategy!r}")
        try:
            kind = ManifoldKind.parse(self.manifold)
            if self.strategy == 1 and kind is not STIEFEL:
                out.append("strategy 1 requires the Stiefel manifold")
            if self.strategy in (2, 3, 4) and kind is not GRASSMANN:
                out.append(f"strategy {self.strategy} starts on the Grassmann manifold")
        except ParameterError as exc:
            out.append(str(exc))
        if self.hamiltonian_format is not None and self.hamiltonian_format not in HAMILTONIAN_FORMATS:
            out.append(f"hamiltonian_format must be one of {HAMILTONIAN_FORMATS}")
        if self.sector is not None:
            sec = tuple(self.sector)
            if len(sec) not in (1, 2) or not is_int(sec[0]) or (len(sec) == 2 and sec[1] is not None and not is_int(sec[1])):
                out.append(f"sector must be [n_electrons] or [n_electrons, sz_twice], got {self.sector!r}")
        if self.optimizer not in OPTIMIZERS:
            out.append(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        else:
            cfg_cls = TrustRegionConfig if self.optimizer == "rtr" else CGConfig
            known = {f.name for f in dataclasses.fields(cfg_cls)}
            bad = sorted(set(self.optimizer_options) - known)
            if bad:
                out.append(f"unknown {self.optimizer} options {bad}")
            else:
                try:
                    self.solver_config()
                except (ParameterError, TypeError) as exc:
                    out.append(f"{self.optimizer} options: {exc}")
        if self.backend not in BACKENDS:
            out.append(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "statevector-shots":
            if not is_int(self.shots) or self.shots < 1:
                out.append("statevector-shots needs a positive integer 'shots'")
        elif self.shots is not None:
            out.append(f"'shots' is only valid with the statevector-shots backend, not {self.backend!r}")
        if self.k_diagonal is not None:
            if self.strategy not in (1, 3):
                out.append("k_diagonal is only used by strategies 1 and 3")
            elif is_int(self.p) and len(self.k_diagonal) != self.p:
                out.append(f"k_diagonal needs {self.p} entries, got {len(self.k_diagonal)}")
            elif len(set(map(float, self.k_diagonal))) != len(self.k_diagonal):
                out.append("k_diagonal entries must be distinct")
        if not isinstance(self.alpha, (int, float)) or not 0.0 <= self.alpha <= 1.0:
            out.append(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not is_int(self.trotter_steps) or self.trotter_steps < 0:
            out.append(f"trotter_steps must be a non-negative integer, got {self.trotter_steps!r}")
        if self.trotter_steps and self.backend == "classical":
            out.append("trotter_steps requires a statevector backend")
        if not is_int(self.seed):
            out.append(f"seed must be an integer, got {self.seed!r}")
        if self.initial_frame not in ("screened", "random"):
            out.append(f"initial_frame must be 'screened' or 'random', got {self.initial_frame!r}")
        if self.strategy4_mode not in ("A", "B"):
            out.append(f"strategy4_mode must be 'A' or 'B', got {self.strategy4_mode!r}")
        if not isinstance(self.block_tol, (int, float)) or self.block_tol <= 0:
            out.append(f"block_tol must be positive, got {self.block_tol!r}")
        if self.strategy == 4 and is_int(self.p) and self.p & (self.p - 1):
            out.append(f"strategy 4 needs p to be a power of two, got {self.p}")
        return out

    def solver_config(self, grad_tol=None, **defaults):
        """Solver settings; ``defaults`` fill options the user left unset."""
        opts = dict(self.optimizer_options)
        for key, value in defaults.items():
            opts.setdefault(key, value)
        opts.setdefault("grad_tol", DEFAULT_GRAD_TOL)
        if grad_tol is not None:
            opts["grad_tol"] = grad_tol
        opts.setdefault("alpha", self.alpha)
        if self.optimizer == "rtr":
            return TrustRegionConfig(**opts)
        return CGConfig(**opts)

    @property
    def grad_tol(self):
        return self.solver_config().grad_tol


@dataclass
class RunReport:
    strategy: int
    backend: str
    eigenvalues: list
    final_grad_norm: float
    iterations: dict
    wall_time: float
    converged: bool
    column_energies: list | None = None
    overlaps: list | None = None
    stage_residuals: list | None = None
    error: str | None = None

    def to_dict(self):
        return dataclasses.asdict(self)


class _Log:
    """Collects iteration records of all phases with a global ``iter`` counter."""

    def __init__(self):
        self.rows = []
        self.phases = {}

    def add(self, phase, records):
        offset = self.rows[-1]["iter"] + 1 if self.rows else 0
        for r in records:
            row = r.to_dict()
            row["iter"] = offset + r.iter
            self.rows.append(row)
        self.phases[phase] = self.phases.get(phase, 0) + max(len(records) - 1, 0)


def partition_sequence(p):
    """Index sets ``P_k`` of the ``log2 p`` bits, most significant bit first."""
    if not isinstance(p, (int, np.integer)) or p < 2 or p & (p - 1):
        raise ParameterError(f"p must be a power of two >= 2, got {p!r}")
    bits = int(p).bit_length() - 1
    return [frozenset(i for i in range(p) if (i >> (bits - 1 - k)) & 1) for k in range(bits)]


def strategy2_diagonalize(E):
    """Eigenvalues (ascending) and rotation ``Q`` of the subspace energy matrix."""
    E = linalg.as_symmetric(linalg.sym(np.asarray(E, dtype=float)), tol=1e-10, name="E")
    w, Q = linalg.sym_eig(E)
    # fix column signs so that the largest entry of each column is positive
    idx = np.argmax(np.abs(Q), axis=0)
    Q = Q * np.sign(Q[idx, np.arange(Q.shape[1])])
    return w, Q


def make_frame(X, cfg, rng=None):
    """Wrap a dense frame for the configured backend."""
    X = X if isinstance(X, StiefelPoint) else StiefelPoint(X)
    if cfg.backend == "classical":
        return X
    shots = cfg.shots if cfg.backend == "statevector-shots" else None
    return StatevectorFrame(prepare_state(X), trotter_steps=cfg.trotter_steps, shots=shots, rng=rng)


def _dense(frame):
    return np.asarray(frame.matrix, dtype=float)


def _solver_config(cfg, grad_tol=None):
    extra = {"max_inner_cg": DRIVER_INNER_CG} if cfg.optimizer == "rtr" else {}
    return cfg.solver_config(grad_tol, **extra)


def _solve(problem, frame, cfg, grad_tol=None, on_step=None):
    scfg = _solver_config(cfg, grad_tol)
    solver = solve_rtr if cfg.optimizer == "rtr" else solve_rcg
    x, records = solver(problem, frame, scfg, on_step=on_step)
    return x, records, records[-1].grad_norm <= scfg.grad_tol


def strategy3_subspace_opt(E, k=None, cfg=None):
    """Rotation ``Q`` with ``Q^T E Q`` diagonal from a Stiefel solve on ``St(p, p)``.

    Starts from the permutation that sorts the diagonal of ``E`` and
    returns ``(Q, records, converged)``.  ``Q`` matches the strategy-2
    rotation up to column signs, with columns in ``K`` order.
    """
    E = linalg.as_symmetric(linalg.sym(np.asarray(E, dtype=float)), tol=1e-10, name="E")
    p = E.shape[0]
    cfg = cfg or RunConfig(p=p, strategy=3)
    k = default_weights(p) if k is None else np.asarray(k, dtype=float)
    Q0 = screen_initial_frame(E, p)
    if p == 1:
        return Q0.matrix, [], True
    problem = StiefelProblem(E, k)
    scfg = _solver_config(cfg)
    solver = solve_rtr if cfg.optimizer == "rtr" else solve_rcg
    Q, records = solver(problem, Q0, scfg)
    return Q.matrix, records, records[-1].grad_norm <= scfg.grad_tol


def _block_residual(W, H, cells):
    """Largest coupling left between cells of the p-block and out of it."""
    X = _dense(W)
    E = X.T @ H @ X
    mask = cells[:, None] != cells[None, :]
    inner = float(np.max(np.abs(E[mask]), initial=0.0))
    outer = float(np.linalg.norm(H @ X - X @ E))
    return max(inner, outer)


def strategy4_block_diag(H, W, cfg, log_):
    """Stages of iterative block diagonalization starting from a converged ``Gr(n, p)`` frame ``W``."""
    p = W.p
    if p == 1:
        return W, [], True
    tol = min(cfg.grad_tol, 0.1 * cfg.block_tol)
    cells = np.zeros(p, dtype=int)
    residuals = []
    converged = True
    for k, part in enumerate(partition_sequence(p), start=1):
        members = sorted(part)
        # cell projectors X K_c X^T keep the current block structure exact
        projectors = [W.projector(np.diag((cells == c).astype(float))) for c in np.unique(cells)]
        if cfg.strategy4_mode == "A":
            state = {"W": W}

            def rotate_all(eta, x_old, x_new, state=state):
                # the same left rotation acts on every column of the full frame
                act = TangentAction(eta.L, np.zeros((p, p)))
                state["W"] = state["W"].retract(act, 1.0, 0.0)

            problem = RestrictedProblem(GrassmannProblem(H), projectors)
            _, records, ok = _solve(problem, W.select_columns(members), cfg, tol, rotate_all)
            W = state["W"]
        else:
            weights = np.where(np.isin(np.arange(p), members), 1.0, -1.0)
            problem = RestrictedProblem(StiefelProblem(H, weights, allow_degenerate=True), projectors, cells)
            W, records, ok = _solve(problem, W, cfg, tol)
        log_.add(f"stage{k}", records)
        converged &= ok
        cells = 2 * cells + np.isin(np.arange(p), members)
        res = _block_residual(W, H, cells)
        residuals.append(res)
        log.info("strategy 4 stage %d: residual %.3e", k, res)
        if res > cfg.block_tol:
            err = StageFailure(
                f"stage {k} left a block residual {res:.3e} above block_tol={cfg.block_tol:.1e}", res, records
            )
            err.residuals = residuals
            raise err
    return W, residuals, converged


def _initial_frame(H, cfg):
    n = H.shape[0]
    if cfg.p > n:
        raise ConfigError([f"p={cfg.p} exceeds the Hamiltonian dimension {n}"])
    if cfg.initial_frame == "random":
        rng = np.random.default_rng(cfg.seed)
        return StiefelPoint(linalg.random_orthonormal(n, cfg.p, rng))
    return screen_initial_frame(H, cfg.p)


def _overlaps(H, X, p):
    """Squared overlaps ``|v_i^T x_j|^2`` with the ``p`` lowest oracle eigenvectors."""
    if H.shape[0] > OVERLAP_MAX_DIM:
        return None
    _, V = linalg.sym_eig(H)
    return ((V[:, :p].T @ X) ** 2).tolist()


def run(cfg, H=None):
    """Execute one configuration and return its :class:`RunReport`.

    ``H`` overrides the configured Hamiltonian source.  Outputs are written
    to ``cfg.output_dir`` when set, also for runs that stop with a
    :class:`StagnationError` or :class:`StageFailure` (the exception then
    carries the partial report as ``exc.report``).
    """
    t0 = time.perf_counter()
    if H is None:
        if cfg.hamiltonian is None:
            raise ConfigError(["no Hamiltonian given ('hamiltonian' key)"])
        H = load_hamiltonian(cfg.hamiltonian, cfg.hamiltonian_format, cfg.sector)
    H = linalg.as_symmetric(H, tol=1e-10, name="H")
    X0 = _initial_frame(H, cfg)
    rng = np.random.default_rng(cfg.seed)
    log_ = _Log()
    extra = {}
    try:
        final, converged, eig, column_energies = _dispatch(H, X0, cfg, rng, log_, extra)
    except (StagnationError, StageFailure) as exc:
        if isinstance(exc, StagnationError):
            log_.add("failed", exc.records)
        report = RunReport(
            strategy=cfg.strategy,
            backend=cfg.backend,
            eigenvalues=[],
            final_grad_norm=log_.rows[-1]["grad_norm"] if log_.rows else float("nan"),
            iterations=log_.phases,
            wall_time=time.perf_counter() - t0,
            converged=False,
            stage_residuals=getattr(exc, "residuals", None),
            error=str(exc),
        )
        write_outputs(cfg.output_dir, report, log_.rows)
        exc.report = report
        raise
    report = RunReport(
        strategy=cfg.strategy,
        backend=cfg.backend,
        eigenvalues=[float(v) for v in eig],
        final_grad_norm=float(log_.rows[-1]["grad_norm"]) if log_.rows else 0.0,
        iterations=log_.phases,
        wall_time=time.perf_counter() - t0,
        converged=bool(converged),
        column_energies=[float(v) for v in column_energies],
        overlaps=_overlaps(H, final, cfg.p),
        stage_residuals=extra.get("stage_residuals"),
    )
    write_outputs(cfg.output_dir, report, log_.rows)
    return report


def _dispatch(H, X0, cfg, rng, log_, extra):
    """Run the configured strategy; returns the eigen-ordered frame and energies."""
    if cfg.strategy == 1:
        k = default_weights(cfg.p) if cfg.k_diagonal is None else np.asarray(cfg.k_diagonal, dtype=float)
        X, records, ok = _solve(StiefelProblem(H, k), make_frame(X0, cfg, rng), cfg)
        log_.add("stiefel", records)
        Xd = _dense(X)
        energies = np.diag(Xd.T @ H @ Xd)
        order = np.argsort(energies, kind="stable")
        return Xd[:, order], ok, energies[order], energies
    tol = min(cfg.grad_tol, 0.1 * cfg.block_tol) if cfg.strategy == 4 else None
    X, records, ok = _solve(GrassmannProblem(H), make_frame(X0, cfg, rng), cfg, tol)
    log_.add("grassmann", records)
    if cfg.strategy == 2:
        E = X.compress(H)
        w, Q = strategy2_diagonalize(E)
        return _dense(X) @ Q, ok, w, w
    if cfg.strategy == 3:
        E = X.compress(H)
        k = None if cfg.k_diagonal is None else np.asarray(cfg.k_diagonal, dtype=float)
        Q, records, ok3 = strategy3_subspace_opt(E, k, cfg)
        log_.add("orthogonal", records)
        energies = np.diag(Q.T @ linalg.sym(E) @ Q)
        order = np.argsort(energies, kind="stable")
        return (_dense(X) @ Q)[:, order], ok and ok3, energies[order], energies
    W, residuals, ok4 = strategy4_block_diag(H, X, cfg, log_)
    extra["stage_residuals"] = residuals
    Wd = _dense(W)
    energies = np.diag(Wd.T @ H @ Wd)
    order = np.argsort(energies, kind="stable")
    return Wd[:, order], ok and ok4, energies[order], energies


def write_outputs(output_dir, report, rows):
    """Write ``iterations.jsonl``, ``eigenvalues.csv`` and ``summary.json``."""
    if output_dir is None:
        return
    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "iterations.jsonl"), "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    with open(os.path.join(output_dir, "eigenvalues.csv"), "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, v in enumerate(report.eigenvalues):
            fh.write(f"{i},{v!r}\n")
    with open(os.path.join(output_dir, "summary.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path):
    """Read a JSON run configuration; relative paths resolve against its directory."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None
    return RunConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
