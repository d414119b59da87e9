"""Command line entry point: ``qmanopt solve|check|spectrum|convert``.

Exit codes: 0 success, 2 configuration error, 3 convergence failure
(or a failed derivative check), 4 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import linalg
from .driver import load_config, run
from .errors import (
    ConfigError,
    DimensionError,
    ParameterError,
    ParseError,
    RepresentationError,
    StageFailure,
    StagnationError,
    SymmetryError,
)
from .hamiltonian import HAMILTONIAN_FORMATS, build_jw_hamiltonian, load_hamiltonian, read_fcidump, sector_project
from .manifold import GRASSMANN, ManifoldKind, StiefelPoint
from .problems import GrassmannProblem, StiefelProblem, fd_check_gradient, fd_check_hessian
from .qsim.pauli import pauli_to_matrix

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

GRAD_SLOPE = (1.9, 2.1)
HESS_SLOPE = (2.9, 3.1)


def _sector(values):
    if values is None:
        return None
    if len(values) not in (1, 2):
        raise ConfigError(["--sector takes N or N 2Sz"])
    return (values[0], values[1] if len(values) == 2 else None)


def cmd_solve(args):
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    try:
        report = run(cfg)
    except (StagnationError, StageFailure) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(json.dumps({"eigenvalues": report.eigenvalues, "converged": report.converged, "iterations": report.iterations}))
    if not report.converged:
        print(f"not converged: final gradient norm {report.final_grad_norm:.3e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_check(args):
    kind = ManifoldKind.parse(args.manifold)
    if args.p < 1 or args.n < args.p or (kind is GRASSMANN and args.p == args.n):
        raise ParameterError(f"invalid dimensions n={args.n}, p={args.p} for {kind.value}")
    rng = np.random.default_rng(args.seed)
    H = linalg.random_symmetric(args.n, rng)
    X = StiefelPoint(linalg.random_orthonormal(args.n, args.p, rng))
    problem = GrassmannProblem(H) if kind is GRASSMANN else StiefelProblem(H)
    if args.hess:
        slope, (lo, hi), what = fd_check_hessian(problem, X, seed=args.seed), HESS_SLOPE, "hessian"
    else:
        slope, (lo, hi), what = fd_check_gradient(problem, X, seed=args.seed), GRAD_SLOPE, "gradient"
    ok = lo <= slope <= hi
    print(f"{what} slope {slope:.4f} ({'ok' if ok else 'FAIL'}, expected [{lo}, {hi}])")
    return EXIT_OK if ok else EXIT_CONVERGENCE


def cmd_spectrum(args):
    H = load_hamiltonian(args.hamiltonian, args.format, _sector(args.sector))
    if args.k < 1:
        raise ParameterError(f"--k must be positive, got {args.k}")
    w, _ = linalg.sym_eig(H)
    print("index,eigenvalue")
    for i, v in enumerate(w[: args.k]):
        print(f"{i},{float(v)!r}")
    return EXIT_OK


def cmd_convert(args):
    ham = build_jw_hamiltonian(read_fcidump(args.fcidump))
    if args.out == "pauli":
        if args.sector:
            raise ConfigError(["--sector applies to matrix output only"])
        text = ham.to_text()
    else:
        H = np.real(pauli_to_matrix(ham))
        sector = _sector(args.sector)
        if sector is not None:
            _, H = sector_project(H, *sector)
        text = linalg.write_matrix_market(None, H, comment=f"converted from {args.fcidump}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="qmanopt", description="Riemannian eigensolvers on Stiefel and Grassmann manifolds.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a JSON configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", help="override the configured output directory")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="finite-difference derivative check on a random instance")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--grad", action="store_true")
    mode.add_argument("--hess", action="store_true")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--manifold", choices=["gr", "st"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("spectrum", help="lowest eigenvalues from dense diagonalization")
    p.add_argument("--hamiltonian", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--format", choices=HAMILTONIAN_FORMATS)
    p.add_argument("--sector", type=int, nargs="+", metavar="N [2SZ]")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("convert", help="FCIDUMP to a dense matrix or a Pauli sum")
    p.add_argument("--fcidump", required=True)
    p.add_argument("--out", choices=["matrix", "pauli"], required=True)
    p.add_argument("--output", help="file to write (default: stdout)")
    p.add_argument("--sector", type=int, nargs="+", metavar="N [2SZ]")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError, RepresentationError, DimensionError, SymmetryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
