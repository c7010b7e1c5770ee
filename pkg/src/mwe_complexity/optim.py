"""Limited-memory BFGS with a strong-Wolfe line search.

The objective is a callable ``fg(x) -> (value, gradient)``; all arithmetic
is float64. Minimization is full-batch and deterministic.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import NonFiniteObjective

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


class Status(Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max-iters"
    LINE_SEARCH_FAILED = "line-search-failed"


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 10
    max_iters: int = 500
    grad_tol: float = 1e-6
    c1: float = 1e-4
    c2: float = 0.9
    max_backtracks: int = 50

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.max_iters < 0 or self.max_backtracks < 1:
            raise ValueError("iteration limits must be positive")


@dataclass
class OptResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    status: Status
    n_evals: int = 0
    # one (f_before, f_after, step, slope) tuple per accepted step
    trace: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def two_loop(grad: np.ndarray, pairs) -> np.ndarray:
    """Apply the implicit inverse-Hessian approximation to ``grad``.

    ``pairs`` is an oldest-first sequence of ``(s, y, rho)`` with
    ``rho = 1 / (s @ y)``. Returns ``H @ grad``; the search direction is its
    negation.
    """
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolating two points and slopes, or None."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (gb + d2 - d1) / denom
    return t if math.isfinite(t) else None


class _Phi:
    """Objective restricted to the ray ``x + t p``, counting evaluations."""

    def __init__(self, fg, x, p, budget):
        self.fg, self.x, self.p = fg, x, p
        self.budget = budget
        self.evals = 0

    def __call__(self, t):
        self.evals += 1
        f, g = self.fg(self.x + t * self.p)
        f = float(f)
        if not math.isfinite(f) or not np.all(np.isfinite(g)):
            return math.inf, None, math.nan
        return f, g, float(g @ self.p)

    @property
    def exhausted(self):
        return self.evals >= self.budget


def strong_wolfe(fg, x, f0, slope0, p, t0, c1=1e-4, c2=0.9, max_evals=50):
    """Bracketing line search with cubic-interpolation zoom.

    Returns ``(t, f, g, evals)`` on success, ``(None, None, None, evals)``
    otherwise.
    """
    phi = _Phi(fg, x, p, max_evals)

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        while not phi.exhausted:
            width = hi - lo
            if abs(width) <= 1e-16 * max(1.0, abs(lo)):
                break
            t = None
            if math.isfinite(f_hi) and math.isfinite(d_hi):
                t = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            edge = 0.1 * abs(width)
            if t is None or not (min(lo, hi) + edge <= t <= max(lo, hi) - edge):
                t = lo + 0.5 * width
            f, g, d = phi(t)
            if f > f0 + c1 * t * slope0 or f >= f_lo:
                hi, f_hi, d_hi = t, f, d
            else:
                if abs(d) <= -c2 * slope0:
                    return t, f, g
                if d * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = t, f, d
        return None, None, None

    t_prev, f_prev, d_prev = 0.0, f0, slope0
    t = t0
    first = True
    while not phi.exhausted:
        f, g, d = phi(t)
        if f > f0 + c1 * t * slope0 or (not first and f >= f_prev):
            out = zoom(t_prev, f_prev, d_prev, t, f, d)
            return (*out, phi.evals)
        if abs(d) <= -c2 * slope0:
            return t, f, g, phi.evals
        if d >= 0:
            out = zoom(t, f, d, t_prev, f_prev, d_prev)
            return (*out, phi.evals)
        t_prev, f_prev, d_prev = t, f, d
        t = 2.0 * t
        first = False
    return None, None, None, phi.evals


def backtracking(fg, x, f0, slope0, p, t0, c1=1e-4, max_evals=50):
    """Armijo backtracking by halving. Same return shape as :func:`strong_wolfe`."""
    phi = _Phi(fg, x, p, max_evals)
    t = t0
    while not phi.exhausted:
        f, g, _ = phi(t)
        if f <= f0 + c1 * t * slope0 and f < f0:
            return t, f, g, phi.evals
        t *= 0.5
    return None, None, None, phi.evals


def minimize(fg: Objective, x0, cfg: LbfgsConfig = LbfgsConfig()) -> OptResult:
    """Minimize a smooth function with L-BFGS.

    Curvature pairs with ``s @ y <= 1e-12 * |s| * |y|`` are skipped. When
    the strong-Wolfe search fails, plain Armijo backtracking is tried
    before giving up with :attr:`Status.LINE_SEARCH_FAILED`.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    f, g = fg(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFiniteObjective(x)
    if g.shape != x.shape:
        raise ValueError(f"gradient shape {g.shape} != point shape {x.shape}")

    pairs: deque = deque(maxlen=cfg.memory)
    n_evals = 1
    trace = []
    status = Status.MAX_ITERS
    k = 0
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    while True:
        if gnorm <= cfg.grad_tol:
            status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            status = Status.MAX_ITERS
            break

        p = -two_loop(g, list(pairs))
        slope = float(g @ p)
        if not pairs or not slope < 0:
            if pairs:
                log.debug("iteration %d: not a descent direction, resetting memory", k)
                pairs.clear()
            p = -g
            slope = float(g @ p)
            t0 = min(1.0, 1.0 / float(np.linalg.norm(g)))
        else:
            t0 = 1.0

        t, f_new, g_new, used = strong_wolfe(
            fg, x, f, slope, p, t0, cfg.c1, cfg.c2, cfg.max_backtracks)
        n_evals += used
        if t is None:
            t, f_new, g_new, used = backtracking(
                fg, x, f, slope, p, t0, cfg.c1, cfg.max_backtracks)
            n_evals += used
        if t is None:
            status = Status.LINE_SEARCH_FAILED
            break

        s = t * p
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / sy))
        trace.append((f, f_new, t, slope))
        x = x + s
        f, g = f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        k += 1

    return OptResult(x=x, f=f, grad_norm=gnorm, iterations=k, status=status,
                     n_evals=n_evals, trace=trace)


def finite_difference_gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-5,
                               scheme: str = "central") -> np.ndarray:
    """Central-difference gradient of a value-only function."""
    if h <= 0:
        raise ValueError("step must be positive")
    if scheme != "central":
        raise ValueError(f"unsupported scheme {scheme!r}")
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        out.flat[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return out
