"""Embedded Dormand-Prince 5(4) integrator with PI step-size control.

Written out rather than delegated to :func:`scipy.integrate.solve_ivp`
because callers need accepted/rejected step counts, the largest accepted
error estimate, exact landing on requested output times and a per-step
termination hook.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import PreconditionError, StepUnderflow

__all__ = ["IntegratorStats", "Solution", "dopri5"]

# Butcher tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth minus fourth order weights
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_BETA = 0.04  # PI controller memory
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass
class IntegratorStats:
    steps: int = 0
    rejected: int = 0
    max_error: float = 0.0
    evaluations: int = 0


@dataclass
class Solution:
    """Accepted nodes ``t[k], y[k]`` with slopes ``f[k] = rhs(t[k], y[k])``."""

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    stats: IntegratorStats
    status: str = "completed"
    stops: dict = field(default_factory=dict)  # requested stop time -> node index


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(rhs, t0, y0, f0, direction_span, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def dopri5(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_end: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_step: float = math.inf,
    stops=(),
    terminate: Callable[[float, np.ndarray], str | None] | None = None,
) -> Solution:
    """Integrate ``y' = rhs(t, y)`` from ``t = 0`` to ``t_end > 0``.

    Parameters
    ----------
    stops : sequence of float
        Times in ``[0, t_end]`` that must coincide with accepted nodes.
    terminate : callable, optional
        Called after every accepted step; a non-``None`` return value ends
        the integration and becomes ``Solution.status``.

    Raises
    ------
    StepUnderflow
        If the step size falls below ``1e-14 * t_end``.
    """
    if not (t_end > 0 and math.isfinite(t_end)):
        raise PreconditionError(f"t_end must be positive and finite, got {t_end}")
    if not (rtol > 0 and atol > 0):
        raise PreconditionError("integrator tolerances must be positive")
    if not max_step > 0:
        raise PreconditionError("max_step must be positive")

    y = np.array(y0, dtype=float)
    stats = IntegratorStats()

    def f(t, yy):
        stats.evaluations += 1
        return np.asarray(rhs(t, yy), dtype=float)

    targets = sorted({float(s) for s in stops if 0.0 < s < t_end} | {float(t_end)})
    t = 0.0
    fy = f(t, y)
    ts, ys, fs = [t], [y.copy()], [fy.copy()]
    stop_index = {0.0: 0} if any(s == 0.0 for s in stops) else {}

    h = min(_initial_step(f, t, y, fy, t_end, rtol, atol), max_step)
    h_min = 1e-14 * t_end
    err_prev = 1e-4
    rejected_last = False
    target_i = 0
    k = np.empty((7, y.size))

    while target_i < len(targets):
        target = targets[target_i]
        if h < h_min:
            raise StepUnderflow(f"step size {h:.3g} below {h_min:.3g} at t={t:.17g}")
        hitting = t + h >= target - 1e-12 * t_end
        step = target - t if hitting else h

        k[0] = fy
        for s in range(1, 7):
            k[s] = f(t + _C[s] * step, y + step * (np.asarray(_A[s]) @ k[:s]))
        y_new = y + step * (_B[:6] @ k[:6])
        k[6] = f(t + step, y_new)
        err_vec = step * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)

        if not math.isfinite(err):
            stats.rejected += 1
            h = step * _MIN_FACTOR
            rejected_last = True
            continue

        if err <= 1.0:
            t = target if hitting else t + step
            y = y_new
            fy = k[6].copy()
            stats.steps += 1
            stats.max_error = max(stats.max_error, err)
            ts.append(t)
            ys.append(y.copy())
            fs.append(fy)
            if hitting:
                stop_index[target] = len(ts) - 1
                target_i += 1
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err**-_ALPHA * err_prev**_BETA
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            if rejected_last:
                factor = min(1.0, factor)
            # never let a short landing step shrink the next one
            h = min(max_step, max(h, step * factor) if hitting else step * factor)
            err_prev = max(err, 1e-4)
            rejected_last = False
            if terminate is not None:
                status = terminate(t, y)
                if status is not None:
                    return Solution(np.array(ts), np.array(ys), np.array(fs), stats, status, stop_index)
        else:
            stats.rejected += 1
            h = step * max(_MIN_FACTOR, _SAFETY * err**-0.2)
            rejected_last = True

    return Solution(np.array(ts), np.array(ys), np.array(fs), stats, "completed", stop_index)
