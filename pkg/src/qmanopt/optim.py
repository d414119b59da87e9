"""Riemannian trust-region Newton and nonlinear conjugate gradient.

Both solvers talk to the problem only through ``cost``, ``gradient`` and
``hess_vec`` and to the point only through the frame protocol, so they
are backend-agnostic.  Tangent vectors are canonical action pairs and the
metric is :func:`qmanopt.manifold.inner`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NumericalError, ParameterError, StagnationError
from . import linalg
from .manifold import TRANSPORT_ORDERS, TangentAction, canonicalize, inner, norm, transport_action

log = logging.getLogger(__name__)


@dataclass
class TrustRegionConfig:
    initial_radius: float = 0.25
    max_radius: float | None = None  # defaults to 4 * initial_radius
    max_inner_cg: int = 3
    grad_tol: float = 1e-3
    max_outer: int = 100
    accept_rho: float = 0.1
    expand_rho: float = 0.75
    shrink_factor: float = 0.25
    growth_factor: float = 2.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.max_radius is None:
            self.max_radius = 4.0 * self.initial_radius
        if not 0 < self.initial_radius <= self.max_radius:
            raise ParameterError("need 0 < initial_radius <= max_radius")
        if self.max_inner_cg < 1:
            raise ParameterError("max_inner_cg must be >= 1")
        if not 0 <= self.accept_rho < self.expand_rho < 1:
            raise ParameterError("need 0 <= accept_rho < expand_rho < 1")
        if self.grad_tol < 0 or self.max_outer < 0:
            raise ParameterError("grad_tol and max_outer must be non-negative")


@dataclass
class CGConfig:
    grad_tol: float = 1e-3
    max_iter: int = 1000
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 50
    transport_order: int | str = 0
    restart_every: int | None = None  # defaults to n * p
    alpha: float = 0.0

    def __post_init__(self):
        if not 0 < self.armijo_c1 < 1:
            raise ParameterError("armijo_c1 must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ParameterError("backtrack_factor must lie in (0, 1)")
        if self.initial_step <= 0:
            raise ParameterError("initial_step must be positive")
        if self.transport_order not in TRANSPORT_ORDERS:
            raise ParameterError(f"transport_order must be one of {TRANSPORT_ORDERS}")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    f: float
    grad_norm: float
    step_or_radius: float
    inner_iters: int
    wall_time: float

    def to_dict(self):
        return asdict(self)


@dataclass
class TCGResult:
    eta: object
    Heta: object
    iterations: int
    reason: str


RESIDUAL_FLOOR = 1e-6
MAX_ROTATION = math.pi
# directions closer than this cosine to orthogonal with -grad count as non-descent
DESCENT_ANGLE = 1e-4


def truncated_cg(grad, hess_op, radius, max_inner, inner_product=inner, kappa=0.1, theta=1.0):
    """Steihaug-Toint truncated CG for ``min <g,e> + 1/2 <e, H e>`` s.t. ``|e| <= radius``.

    Works on any vector type supporting ``+``, ``-`` and scalar ``*``.
    ``hess_op`` is called at most ``max_inner`` times.  Returns the step,
    its Hessian image (tracked, not recomputed), the number of Hessian
    applications and the stopping reason.
    """
    if radius <= 0:
        raise ParameterError("trust radius must be positive")
    eta = 0 * grad
    Heta = 0 * grad
    r = grad
    r_r = inner_product(r, r)
    norm_r0 = math.sqrt(r_r)
    delta = -1 * r
    e_Pe = 0.0
    e_Pd = 0.0
    d_Pd = r_r
    if norm_r0 == 0.0:
        return TCGResult(eta, Heta, 0, "zero gradient")
    for j in range(1, max_inner + 1):
        Hd = hess_op(delta)
        d_Hd = inner_product(delta, Hd)
        if not math.isfinite(d_Hd):
            raise NumericalError("Hessian application returned non-finite values")
        alpha = r_r / d_Hd if d_Hd != 0 else math.inf
        e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha * alpha * d_Pd
        if d_Hd <= 0 or e_Pe_new >= radius * radius:
            tau = (-e_Pd + math.sqrt(max(e_Pd * e_Pd + d_Pd * (radius * radius - e_Pe), 0.0))) / d_Pd
            reason = "negative curvature" if d_Hd <= 0 else "trust boundary"
            return TCGResult(eta + tau * delta, Heta + tau * Hd, j, reason)
        eta = eta + alpha * delta
        Heta = Heta + alpha * Hd
        e_Pe = e_Pe_new
        r = r + alpha * Hd
        r_r_new = max(inner_product(r, r), 0.0)
        # the relative floor keeps CG from iterating on rounding noise near a critical point
        if math.sqrt(r_r_new) <= norm_r0 * max(min(norm_r0**theta, kappa), RESIDUAL_FLOOR):
            return TCGResult(eta, Heta, j, "residual")
        beta = r_r_new / r_r
        r_r = r_r_new
        delta = beta * delta - r
        e_Pd = beta * (e_Pd + alpha * d_Pd)
        d_Pd = r_r + beta * beta * d_Pd
    return TCGResult(eta, Heta, max_inner, "max inner")


def update_radius(rho, radius, cfg):
    """Trust-region bookkeeping: ``(accepted, new_radius)`` for ratio ``rho``."""
    if rho < cfg.accept_rho:
        return False, cfg.shrink_factor * radius
    if rho > cfg.expand_rho:
        return True, min(cfg.growth_factor * radius, cfg.max_radius)
    return True, radius


def _finite_cost(problem, x):
    f = problem.cost(x)
    if not math.isfinite(f):
        raise NumericalError(f"cost evaluated to {f} at {x!r}")
    return f


def solve_rtr(problem, x0, cfg=None, callback=None, on_step=None):
    """Riemannian trust-region Newton with truncated CG inner solves.

    Returns ``(x, records)``.  ``on_step(eta, x_old, x_new)`` fires for
    every accepted step; ``callback(record, x)`` after every iteration.
    """
    cfg = cfg or TrustRegionConfig()
    t0 = time.perf_counter()
    x = x0
    f = _finite_cost(problem, x)
    g = problem.gradient(x)
    gn = norm(g)
    radius = cfg.initial_radius
    records = [IterationRecord(0, f, gn, radius, 0, time.perf_counter() - t0)]
    if callback:
        callback(records[-1], x)
    for k in range(1, cfg.max_outer + 1):
        if gn <= cfg.grad_tol:
            break
        res = truncated_cg(g, lambda v: problem.hess_vec(x, v), radius, cfg.max_inner_cg)
        eta = res.eta
        if not eta.is_finite():
            raise NumericalError("inner solve produced a non-finite step")
        # boundary steps rescale the CG direction; drop the rounding asymmetry it carries
        eta = TangentAction(linalg.skew(eta.L), linalg.skew(eta.A))
        x_new = x.retract(eta, 1.0, cfg.alpha)
        f_new = _finite_cost(problem, x_new)
        model_dec = -(inner(g, eta) + 0.5 * inner(eta, res.Heta))
        # regularization keeps rho meaningful when both decreases hit round-off
        reg = max(1.0, abs(f)) * np.finfo(float).eps * 1e3
        # a step the model does not predict to decrease f is never accepted
        rho = (f - f_new + reg) / (model_dec + reg) if model_dec > 0 else -math.inf
        accepted, radius = update_radius(rho, radius, cfg)
        if accepted:
            if on_step:
                on_step(eta, x, x_new)
            x, f = x_new, f_new
            g = problem.gradient(x)
            gn = norm(g)
        log.debug("rtr %d f=%.12g |g|=%.3e rho=%.3f radius=%.3e %s", k, f, gn, rho, radius, res.reason)
        records.append(IterationRecord(k, f, gn, radius, res.iterations, time.perf_counter() - t0))
        if callback:
            callback(records[-1], x)
    return x, records


def solve_rcg(problem, x0, cfg=None, callback=None, on_step=None):
    """Riemannian nonlinear CG with the Hestenes-Stiefel update.

    Backtracking Armijo line search; the first trial step is the previous
    accepted step, doubled when that step needed no backtracking.  The
    direction resets to ``-grad`` on a non-finite ``beta``, a non-descent
    direction, or every ``restart_every`` iterations.
    """
    cfg = cfg or CGConfig()
    t0 = time.perf_counter()
    kind = problem.kind
    # problems restricted to a submanifold supply their own tangent projection
    project = getattr(problem, "project", None) or (lambda x, act: canonicalize(x, act, kind))
    x = x0
    restart_every = cfg.restart_every or x.n * x.p
    f = _finite_cost(problem, x)
    g = problem.gradient(x)
    gn = norm(g)
    d = -1 * g
    step0 = cfg.initial_step
    records = [IterationRecord(0, f, gn, 0.0, 0, time.perf_counter() - t0)]
    if callback:
        callback(records[-1], x)
    since_restart = 0
    for k in range(1, cfg.max_iter + 1):
        if gn <= cfg.grad_tol:
            break
        slope = inner(g, d)
        if not slope < 0:
            d = -1 * g
            slope = -gn * gn
        # rotation angles beyond pi are redundant; the cap also stops doubling along flat directions
        alpha = min(step0, MAX_ROTATION / max(norm(d), np.finfo(float).tiny))
        backtracks = 0
        while True:
            x_new = x.retract(d, alpha, cfg.alpha)
            f_new = _finite_cost(problem, x_new)
            if f_new <= f + cfg.armijo_c1 * alpha * slope:
                break
            alpha *= cfg.backtrack_factor
            backtracks += 1
            if backtracks > cfg.max_backtracks:
                raise StagnationError(
                    f"line search exhausted {cfg.max_backtracks} backtracks at iteration {k} (|g|={gn:.3e})",
                    records,
                    x,
                )
        step0 = 2.0 * alpha if backtracks == 0 else alpha
        if on_step:
            on_step(alpha * d, x, x_new)
        g_new = problem.gradient(x_new)
        step = alpha * d
        Tg = project(x_new, transport_action(step, g, cfg.transport_order))
        Td = project(x_new, transport_action(step, d, cfg.transport_order))
        x, f, g = x_new, f_new, g_new
        gn = norm(g)
        since_restart += 1
        y = g - Tg
        denom = inner(Td, y)
        beta = inner(g, y) / denom if denom != 0 else math.nan
        if not math.isfinite(beta) or since_restart >= restart_every:
            d = -1 * g
            since_restart = 0
        else:
            # HS+ truncation: negative beta drives the zig-zag that collapses the step size
            d = -1 * g + max(beta, 0.0) * Td
            if not inner(g, d) < -DESCENT_ANGLE * gn * norm(d):
                d = -1 * g
                since_restart = 0
        log.debug("rcg %d f=%.12g |g|=%.3e step=%.3e beta=%.3g", k, f, gn, alpha, beta)
        records.append(IterationRecord(k, f, gn, alpha, backtracks, time.perf_counter() - t0))
        if callback:
            callback(records[-1], x)
    return x, records


def converged(records, grad_tol):
    return bool(records) and records[-1].grad_norm <= grad_tol
