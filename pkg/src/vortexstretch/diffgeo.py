"""Pointwise Frenet geometry of streamlines and the stretching criterion.

Everything here is a function of position only: for a steady field the
streamline through ``x`` has tangent ``u``, acceleration ``a = (u.grad)u``
and jerk ``j = (u.grad)a``, all available from the second-order jet.  The
criterion ``S`` is the arc-length derivative of ``F = kappa |u|^2 = |a_perp|``,
evaluated by differentiating ``F = |u x a| / |u|`` along the unit tangent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, StagnationPoint
from .fieldkit import VelocityField, default_fd_step, eval_jet
from .fieldkit.fields import FieldJet

__all__ = [
    "TolerancePolicy",
    "DEFAULT_TOLERANCES",
    "FrenetSample",
    "Verdict",
    "PointClass",
    "frenet_sample",
    "frenet_from_jet",
    "criterion",
    "criterion_fd",
    "normal_acceleration",
    "classify_point",
]


@dataclass(frozen=True)
class TolerancePolicy:
    """Thresholds used for degeneracy flags and the ``S == 0`` decision.

    ``eps_stagnation`` is measured in units of the field's velocity scale,
    ``eps_kappa`` bounds the curvature below which the normal is undefined,
    and ``eps_alpha`` is the relative threshold ``alpha > eps_alpha * |a|``
    for counting a point as stretching.  ``S`` counts as zero when
    ``|S| <= abs_tol + rel_tol * (|dz_kappa| speed^2 + 2 kappa |alpha|)``.
    """

    eps_stagnation: float = 1e-10
    eps_kappa: float = 1e-12
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    eps_alpha: float = 1e-12

    def __post_init__(self):
        for name in ("eps_stagnation", "eps_kappa", "abs_tol", "rel_tol", "eps_alpha"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise PreconditionError(f"tolerance {name} must be positive, got {v}")

    def as_dict(self) -> dict:
        return {
            "eps_stagnation": self.eps_stagnation,
            "eps_kappa": self.eps_kappa,
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "eps_alpha": self.eps_alpha,
        }


DEFAULT_TOLERANCES = TolerancePolicy()


@dataclass(frozen=True)
class FrenetSample:
    x: np.ndarray
    speed: float
    tau: np.ndarray
    accel: np.ndarray
    alpha: float
    kappa_vec: np.ndarray
    kappa: float
    normal: np.ndarray | None
    binormal: np.ndarray | None
    torsion: float | None
    F: float
    S: float
    dz_kappa: float
    stagnation: bool
    curvature_degenerate: bool
    # S could not be resolved (kink of |a_perp| where it vanishes)
    criterion_unresolved: bool = False

    def as_dict(self) -> dict:
        vec = lambda v: None if v is None else [float(c) for c in v]  # noqa: E731
        return {
            "x": vec(self.x),
            "speed": self.speed,
            "tau": vec(self.tau),
            "accel": vec(self.accel),
            "alpha": self.alpha,
            "kappa_vec": vec(self.kappa_vec),
            "kappa": self.kappa,
            "normal": vec(self.normal),
            "binormal": vec(self.binormal),
            "torsion": self.torsion,
            "F": self.F,
            "S": self.S,
            "dz_kappa": self.dz_kappa,
            "flags": {
                "stagnation": self.stagnation,
                "curvature_degenerate": self.curvature_degenerate,
                "criterion_unresolved": self.criterion_unresolved,
            },
        }


def _stagnation_threshold(field: VelocityField, tol: TolerancePolicy) -> float:
    return tol.eps_stagnation * field.velocity_scale


def frenet_from_jet(
    jet: FieldJet, x, tol: TolerancePolicy = DEFAULT_TOLERANCES, stagnation_speed: float = 0.0
) -> FrenetSample:
    """Frenet data from a precomputed jet (see :func:`frenet_sample`)."""
    u, G, H = jet
    x = np.asarray(x, dtype=float)
    speed = float(np.linalg.norm(u))
    if speed <= stagnation_speed:
        raise StagnationPoint(x, speed)

    tau = u / speed
    a = G @ u
    alpha = float(a @ tau)
    a_perp = a - alpha * tau
    c = np.cross(u, a)
    cn = float(np.linalg.norm(c))
    F = cn / speed
    kappa = F / (speed * speed)
    kappa_vec = a_perp / (speed * speed)
    degenerate = kappa <= tol.eps_kappa

    normal = binormal = torsion = None
    if not degenerate:
        normal = a_perp / np.linalg.norm(a_perp)
        binormal = np.cross(tau, normal)
        j = G @ a + np.einsum("ijk,j,k->i", H, u, u)
        torsion = float(c @ j) / (cn * cn)

    # derivatives along tau (d/dz): u' = G tau, a' = G u' + H(u, tau)
    du = G @ tau
    da = G @ du + np.einsum("ijk,j,k->i", H, u, tau)
    dc = np.cross(du, a) + np.cross(u, da)
    dspeed = float(u @ du) / speed
    unresolved = False
    if not degenerate:
        dcn = float(c @ dc) / cn
        S = dcn / speed - cn * dspeed / (speed * speed)
    else:
        dcn = float(np.linalg.norm(dc))
        scale = float(np.linalg.norm(du) * np.linalg.norm(a) + speed * np.linalg.norm(da))
        if dcn <= tol.eps_kappa * scale:
            S = 0.0
        else:
            # |u x a| has a kink here; report the one-sided derivative
            S = dcn / speed
            unresolved = True
    dz_kappa = (S - 2.0 * kappa * alpha) / (speed * speed)

    return FrenetSample(
        x=x,
        speed=speed,
        tau=tau,
        accel=a,
        alpha=alpha,
        kappa_vec=kappa_vec,
        kappa=kappa,
        normal=normal,
        binormal=binormal,
        torsion=torsion,
        F=F,
        S=float(S),
        dz_kappa=float(dz_kappa),
        stagnation=False,
        curvature_degenerate=degenerate,
        criterion_unresolved=unresolved,
    )


def frenet_sample(
    field: VelocityField, x, tol: TolerancePolicy = DEFAULT_TOLERANCES
) -> FrenetSample:
    """Frenet frame, curvature, torsion, stretch rate and criterion at ``x``.

    Raises
    ------
    StagnationPoint
        If ``|u(x)|`` is at or below the stagnation tolerance.
    """
    jet = eval_jet(field, x)
    return frenet_from_jet(jet, x, tol, _stagnation_threshold(field, tol))


def criterion(
    field: VelocityField, x, tol: TolerancePolicy = DEFAULT_TOLERANCES
) -> tuple[float, float]:
    """``(S, dz_kappa)`` with ``S = d/dz (kappa |u|^2)`` along the streamline."""
    s = frenet_sample(field, x, tol)
    return s.S, s.dz_kappa


def normal_acceleration(field: VelocityField, x) -> float:
    """``F(x) = kappa |u|^2 = |a_perp|`` as a plain field value."""
    u, G, _ = eval_jet(field, x)
    speed = float(np.linalg.norm(u))
    if speed == 0.0:
        raise StagnationPoint(x, speed)
    return float(np.linalg.norm(np.cross(u, G @ u))) / speed


def criterion_fd(
    field: VelocityField, x, h: float | None = None, tol: TolerancePolicy = DEFAULT_TOLERANCES
) -> float:
    """Central difference of ``F`` along the unit tangent at ``x``."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_fd_step(x)
    if not (h > 0 and math.isfinite(h)):
        raise PreconditionError(f"finite-difference step must be positive, got {h}")
    u = eval_jet(field, x).u
    speed = float(np.linalg.norm(u))
    if speed <= _stagnation_threshold(field, tol):
        raise StagnationPoint(x, speed)
    tau = u / speed
    return (normal_acceleration(field, x + h * tau) - normal_acceleration(field, x - h * tau)) / (
        2.0 * h
    )


class Verdict(str, enum.Enum):
    CANDIDATE_STABLE = "candidate_stable"
    VIOLATES_NECESSARY_CONDITION = "violates_necessary_condition"
    NOT_STRETCHING = "not_stretching"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class PointClass:
    x: np.ndarray
    is_stretching: bool
    criterion_residual: float
    criterion_zero: bool
    dz_kappa_sign_ok: bool
    verdict: Verdict
    alpha: float = math.nan
    kappa: float = math.nan
    dz_kappa: float = math.nan


def classify_point(
    field: VelocityField, x, tol: TolerancePolicy = DEFAULT_TOLERANCES
) -> PointClass:
    """Verdict on the necessary condition for stable stretching at ``x``.

    Stagnation and unresolvable criterion values map to ``degenerate``; this
    function never raises for points inside the field's domain.
    """
    x = np.asarray(x, dtype=float)
    try:
        s = frenet_sample(field, x, tol)
    except StagnationPoint:
        return PointClass(x, False, math.nan, False, False, Verdict.DEGENERATE)

    stretching = s.alpha > tol.eps_alpha * float(np.linalg.norm(s.accel))
    magnitude = abs(s.dz_kappa) * s.speed**2 + 2.0 * s.kappa * abs(s.alpha)
    zero = abs(s.S) <= tol.abs_tol + tol.rel_tol * magnitude
    dz_ok = s.dz_kappa <= tol.abs_tol

    if s.criterion_unresolved:
        verdict = Verdict.DEGENERATE
    elif not stretching:
        verdict = Verdict.NOT_STRETCHING
    elif zero:
        verdict = Verdict.CANDIDATE_STABLE
    else:
        verdict = Verdict.VIOLATES_NECESSARY_CONDITION
    return PointClass(
        x=x,
        is_stretching=bool(stretching),
        criterion_residual=s.S,
        criterion_zero=bool(zero),
        dz_kappa_sign_ok=bool(dz_ok),
        verdict=verdict,
        alpha=s.alpha,
        kappa=s.kappa,
        dz_kappa=s.dz_kappa,
    )
