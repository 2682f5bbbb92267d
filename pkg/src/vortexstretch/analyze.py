"""Grid classification, closed-form oracles and cross-path comparison reports."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .diffgeo import (
    DEFAULT_TOLERANCES,
    PointClass,
    TolerancePolicy,
    Verdict,
    classify_point,
    criterion_fd,
    frenet_sample,
    normal_acceleration,
)
from .errors import DomainError, PreconditionError, StagnationPoint
from .fieldkit import LINEAR_CATALOG, VelocityField, catalog, eval_jet, eval_pressure
from .flowsim import IntegratorConfig, arc_length_map, cauchy_vorticity, flow_map, integrate_streamline

__all__ = [
    "OracleComparison",
    "ClassificationReport",
    "classify_grid",
    "corollary_oracle",
    "corollary_rational",
    "section3_oracle",
    "helix_oracle",
    "PressureResiduals",
    "pressure_identity_check",
    "Remark12Result",
    "remark12_check",
    "trajectory_criterion",
    "compare_paths",
    "SuiteResult",
    "SUITES",
    "run_suite",
    "worker_count",
    "random_regular_points",
]


@dataclass(frozen=True)
class OracleComparison:
    label: str
    params: tuple
    computed: float
    oracle: float
    abs_dev: float
    rel_dev: float
    tol: float
    passed: bool

    @classmethod
    def make(cls, label, params, computed, oracle, rtol=0.0, atol=0.0) -> "OracleComparison":
        """Pass iff ``|computed - oracle| <= rtol * |oracle| + atol``."""
        computed, oracle = float(computed), float(oracle)
        dev = abs(computed - oracle)
        rel = dev / abs(oracle) if oracle != 0.0 else (0.0 if dev == 0.0 else math.inf)
        bound = rtol * abs(oracle) + atol
        return cls(label, tuple(params), computed, oracle, dev, rel, bound, bool(dev <= bound))

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "params": [float(p) for p in self.params],
            "computed": self.computed,
            "oracle": self.oracle,
            "abs_dev": self.abs_dev,
            "rel_dev": self.rel_dev,
            "tol": self.tol,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# grid classification


def worker_count() -> int:
    env = os.environ.get("VORTEX_CRITERION_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise PreconditionError(f"VORTEX_CRITERION_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass
class ClassificationReport:
    field: str
    box: list[list[float]]
    resolution: list[int]
    tolerances: dict
    points: list[PointClass]
    summary: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "field": self.field,
            "box": self.box,
            "resolution": self.resolution,
            "tolerances": self.tolerances,
            "points": [
                {
                    "x": [float(c) for c in p.x],
                    "alpha": p.alpha,
                    "S": p.criterion_residual,
                    "dz_kappa": p.dz_kappa,
                    "kappa": p.kappa,
                    "verdict": p.verdict.value,
                }
                for p in self.points
            ],
            "summary": self.summary,
        }


def _axis_nodes(lo: float, hi: float, n: int) -> np.ndarray:
    if n == 1:
        if lo != hi:
            raise PreconditionError("a single node requires a degenerate interval lo == hi")
        return np.array([lo])
    if n < 2 or not hi > lo:
        raise PreconditionError(f"need resolution >= 2 on a non-degenerate interval, got [{lo}, {hi}] x {n}")
    return np.linspace(lo, hi, n)


def classify_grid(
    field: VelocityField,
    box,
    resolution,
    tol: TolerancePolicy = DEFAULT_TOLERANCES,
    workers: int | None = None,
) -> ClassificationReport:
    """Classify every node of a regular grid over ``box``.

    ``box`` is ``[[lo, hi]] * 3``; an axis with resolution 1 must have
    ``lo == hi`` (a slice).  Nodes are ordered with x varying slowest.
    """
    box = [[float(lo), float(hi)] for lo, hi in box]
    resolution = [int(n) for n in resolution]
    if len(box) != 3 or len(resolution) != 3:
        raise PreconditionError("box and resolution must have three entries")
    axes = [_axis_nodes(lo, hi, n) for (lo, hi), n in zip(box, resolution)]
    if all(n == 1 for n in resolution):
        raise PreconditionError("grid must have at least one non-degenerate axis")
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)

    workers = worker_count() if workers is None else max(1, int(workers))
    job = lambda p: classify_point(field, p, tol)  # noqa: E731
    if workers == 1:
        points = [job(p) for p in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(job, grid))

    summary = {v.value: 0 for v in Verdict}
    for p in points:
        summary[p.verdict.value] += 1
    return ClassificationReport(
        field=field.descriptor,
        box=box,
        resolution=resolution,
        tolerances=tol.as_dict(),
        points=points,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# closed-form oracles


def corollary_oracle(x1: float, x2: float) -> float:
    """``-tanh(2t) / cosh(2t)`` with ``t = log(x1 / x2) / 2``, for ``x1, x2 > 0``.

    >>> round(corollary_oracle(2.0, 1.0), 12)
    -0.48
    """
    if not (x1 > 0 and x2 > 0):
        raise PreconditionError("corollary oracle needs x1 > 0 and x2 > 0")
    t = 0.5 * math.log(x1 / x2)
    return -math.tanh(2 * t) / math.cosh(2 * t)


def corollary_rational(x1: float, x2: float) -> float:
    """Rational extension ``-2 x1 x2 (x1^2 - x2^2) / (x1^2 + x2^2)^2`` off the origin."""
    r2 = x1 * x1 + x2 * x2
    if r2 == 0.0:
        raise PreconditionError("corollary formula is undefined at the origin")
    return -2.0 * x1 * x2 * (x1 * x1 - x2 * x2) / (r2 * r2)


def section3_oracle(r: float, t: float) -> dict[str, float]:
    """Closed forms on the hyperbola ``(r e^t, r e^-t, 0)`` of the flow ``(x, -y, 0)``.

    ``alpha`` is the signed form ``sqrt(2) r sinh(2t) / sqrt(cosh(2t))``, valid
    for all ``t``.  Also returns ``S = dz_kappa speed_sq + 2 kappa alpha``.
    """
    if not r > 0:
        raise PreconditionError(f"r must be positive, got {r}")
    c, s = math.cosh(2 * t), math.sinh(2 * t)
    th = math.tanh(2 * t)
    kappa = 1.0 / (math.sqrt(2.0) * r * c**1.5)
    dz_kappa = -3.0 * th / (2.0 * r * r * c * c)
    speed_sq = 2.0 * r * r * c
    alpha = math.sqrt(2.0) * r * s / math.sqrt(c)
    return {
        "kappa": kappa,
        "dz_kappa": dz_kappa,
        "speed_sq": speed_sq,
        "alpha": alpha,
        "S": dz_kappa * speed_sq + 2.0 * kappa * alpha,
    }


def helix_oracle(R: float, c: float) -> dict[str, float]:
    """Curvature and torsion of a circular helix of radius ``R`` and pitch ``2 pi c``."""
    if not R > 0:
        raise PreconditionError(f"helix radius must be positive, got {R}")
    d = R * R + c * c
    return {"kappa": R / d, "torsion": c / d}


# ---------------------------------------------------------------------------
# pressure identities


@dataclass(frozen=True)
class PressureResiduals:
    x: np.ndarray
    r_tau: float
    r_n: float
    r_b: float
    r_dz: float
    degenerate: bool

    def max(self) -> float:
        return max(self.r_tau, self.r_n, self.r_b, self.r_dz)


def pressure_identity_check(
    field: VelocityField, x, tol: TolerancePolicy = DEFAULT_TOLERANCES
) -> PressureResiduals:
    """Residuals of the steady-Euler pressure identities in the Frenet frame.

    Checks ``-grad p . tau = alpha``, ``-grad p . n = kappa |u|^2``,
    ``grad p . b = 0`` and ``-d/dz (grad p . n) = S``; the last by
    differentiating the composite ``-grad p . n`` along the tangent, which
    shares no code with the criterion itself.
    """
    x = np.asarray(x, dtype=float)
    p = eval_pressure(field, x)
    s = frenet_sample(field, x, tol)
    minus_grad = -p.grad
    r_tau = abs(float(minus_grad @ s.tau) - s.alpha)
    if s.curvature_degenerate:
        perp = minus_grad - (minus_grad @ s.tau) * s.tau
        return PressureResiduals(
            x, r_tau, abs(float(np.linalg.norm(perp)) - s.F), 0.0, abs(s.S), True
        )

    n, b = s.normal, s.binormal
    r_n = abs(float(minus_grad @ n) - s.F)
    r_b = abs(float(p.grad @ b))

    u, G, H = eval_jet(field, x)
    speed, tau, a = s.speed, s.tau, s.accel
    du = G @ tau
    da = G @ du + np.einsum("ijk,j,k->i", H, u, tau)
    dtau = (du - (du @ tau) * tau) / speed
    dalpha = float(da @ tau + a @ dtau)
    a_perp = a - s.alpha * tau
    da_perp = da - dalpha * tau - s.alpha * dtau
    dn = (da_perp - (da_perp @ n) * n) / float(np.linalg.norm(a_perp))
    d_minus_grad_n = float(-(p.hess @ tau) @ n + minus_grad @ dn)
    r_dz = abs(d_minus_grad_n - s.S)
    return PressureResiduals(x, r_tau, r_n, r_b, r_dz, False)


# ---------------------------------------------------------------------------
# vorticity transport


@dataclass(frozen=True)
class Remark12Result:
    r0: float
    t: float
    radius: float  # advected radius e^-t r0
    stated_value: float  # e^t w0(e^-t r0)
    oracle_value: float  # e^-t w0(r0)
    numeric_value: float  # azimuthal component of J(t) (w0(r0) e_theta)
    comparison: OracleComparison  # numeric vs oracle
    stated_matches_oracle: bool

    def as_dict(self) -> dict:
        return {
            "r0": self.r0,
            "t": self.t,
            "radius": self.radius,
            "stated_value": self.stated_value,
            "oracle_value": self.oracle_value,
            "numeric_value": self.numeric_value,
            "numeric_vs_oracle": self.comparison.as_dict(),
            "stated_matches_oracle": self.stated_matches_oracle,
        }


def remark12_check(
    omega0_profile: Callable[[float], float],
    r0: float,
    t: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    tol: float = 1e-7,
) -> Remark12Result:
    """Azimuthal vorticity under the axisymmetric strain ``(-x, -y, 2z)``.

    Reports the stated amplification ``e^t w0(e^-t r0)``, the transport
    value ``e^-t w0(r0)`` obtained from the Cauchy formula along
    characteristics, and a numerical Cauchy integration seeded at
    ``(r0, 0, 0)``.  Only numeric-vs-transport agreement is asserted.
    """
    if not r0 > 0:
        raise PreconditionError(f"r0 must be positive, got {r0}")
    if not t >= 0:
        raise PreconditionError(f"t must be non-negative, got {t}")
    field = catalog("axisym_strain")
    w0 = float(omega0_profile(r0))
    stated = math.exp(t) * float(omega0_profile(math.exp(-t) * r0))
    oracle = math.exp(-t) * w0
    if t == 0.0:
        numeric = w0
    else:
        omega = cauchy_vorticity(field, [r0, 0.0, 0.0], [0.0, w0, 0.0], t, cfg)
        # the particle stays on the positive x axis, where e_theta = e_y
        numeric = float(omega[1])
    cmp = OracleComparison.make("remark12", (r0, t), numeric, oracle, atol=tol)
    agree = abs(stated - oracle) <= tol * max(1.0, abs(oracle))
    return Remark12Result(r0, t, math.exp(-t) * r0, stated, oracle, numeric, cmp, agree)


# ---------------------------------------------------------------------------
# three-path comparison


def _local_length(field: VelocityField, x) -> float:
    u, G, _ = eval_jet(field, x)
    g = float(np.linalg.norm(G, 2))
    speed = float(np.linalg.norm(u))
    return speed / g if g > 0 else 1.0


def trajectory_criterion(
    field: VelocityField,
    x,
    h: float | None = None,
    tol: TolerancePolicy = DEFAULT_TOLERANCES,
    rel_tol: float = 1e-12,
) -> float:
    """``dF/dz`` from ``F`` sampled on the integrated streamline.

    Streamlines are integrated forward and backward from ``x``; the points
    at arc length ``+-h, +-2h`` are located with :func:`arc_length_map` and
    the dense output, and a 5-point centred stencil is applied.
    """
    x = np.asarray(x, dtype=float)
    s0 = frenet_sample(field, x, tol)
    if h is None:
        h = 1e-2 * min(1.0, _local_length(field, x))
    if not h > 0:
        raise PreconditionError(f"arc-length step must be positive, got {h}")

    def sample(backward: bool) -> tuple[float, float]:
        t_span = 3.0 * h / s0.speed
        for _ in range(40):
            cfg = IntegratorConfig(
                rel_tol=rel_tol, abs_tol=1e-14, t_span=t_span, max_step=t_span / 8, backward=backward
            )
            line = integrate_streamline(field, x, cfg, tol)
            if line.nodes_y[-1, 3] >= 2 * h:
                amap = arc_length_map(line)
                pts = line.position(amap.t_of_z([h, 2 * h]))
                return normal_acceleration(field, pts[0]), normal_acceleration(field, pts[1])
            if line.status != "completed":
                break
            t_span *= 2.0
        raise PreconditionError("streamline too short for the arc-length stencil")

    f1, f2 = sample(False)
    fm1, fm2 = sample(True)
    return (fm2 - 8.0 * fm1 + 8.0 * f1 - f2) / (12.0 * h)


def compare_paths(
    field: VelocityField, points, tol: float = 1e-5, policy: TolerancePolicy = DEFAULT_TOLERANCES
) -> list[dict]:
    """Criterion from the analytic jet, central FD and the trajectory stencil.

    Returns one record per point with the three values and the pairwise
    comparisons (tolerance ``tol * (1 + |S_analytic|)``).
    """
    out = []
    for p in points:
        p = np.asarray(p, dtype=float)
        s = frenet_sample(field, p, policy).S
        fd = criterion_fd(field, p, tol=policy)
        traj = trajectory_criterion(field, p, tol=policy)
        bound = tol * (1.0 + abs(s))
        pairs = [
            OracleComparison.make("analytic_vs_fd", tuple(p), fd, s, atol=bound),
            OracleComparison.make("analytic_vs_trajectory", tuple(p), traj, s, atol=bound),
            OracleComparison.make("fd_vs_trajectory", tuple(p), traj, fd, atol=bound),
        ]
        out.append(
            {
                "x": [float(c) for c in p],
                "S_analytic": s,
                "S_fd": fd,
                "S_trajectory": traj,
                "comparisons": pairs,
                "pass": all(c.passed for c in pairs),
            }
        )
    return out


# ---------------------------------------------------------------------------
# built-in verification suites


@dataclass
class SuiteResult:
    name: str
    comparisons: list[OracleComparison]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def max_abs_dev(self) -> float:
        return max((c.abs_dev for c in self.comparisons), default=0.0)

    def as_dict(self) -> dict:
        return {
            "suite": self.name,
            "pass": self.passed,
            "count": len(self.comparisons),
            "failures": sum(not c.passed for c in self.comparisons),
            "max_abs_dev": self.max_abs_dev(),
            "notes": self.notes,
            "comparisons": [c.as_dict() for c in self.comparisons],
        }


# relative tolerances below get this absolute floor so that exact zeros
# (e.g. S at t = 0) are compared meaningfully
ZERO_FLOOR = 1e-14


def _suite_corollary() -> SuiteResult:
    forward = catalog("planar_strain_paper")
    reverse = catalog("planar_strain_stated")
    out = []
    for x1 in np.linspace(0.1, 3.0, 20):
        for x2 in np.linspace(0.1, 3.0, 20):
            ref = corollary_oracle(x1, x2)
            pt = [x1, x2, 0.0]
            out.append(OracleComparison.make("S_analytic", (x1, x2), frenet_sample(forward, pt).S, ref, 1e-10, ZERO_FLOOR))
            out.append(OracleComparison.make("S_fd", (x1, x2), criterion_fd(forward, pt), ref, atol=1e-6))
            out.append(OracleComparison.make("S_negated", (x1, x2), frenet_sample(reverse, pt).S, -ref, 1e-10, ZERO_FLOOR))
    return SuiteResult("corollary", out)


def _suite_section3() -> SuiteResult:
    field = catalog("planar_strain_paper")
    out = []
    for r in np.linspace(0.5, 2.0, 20):
        for t in np.linspace(0.0, 1.0, 20):
            ref = section3_oracle(r, t)
            s = frenet_sample(field, [r * math.exp(t), r * math.exp(-t), 0.0])
            got = {"kappa": s.kappa, "dz_kappa": s.dz_kappa, "speed_sq": s.speed**2, "alpha": s.alpha}
            for key, val in got.items():
                out.append(OracleComparison.make(key, (r, t), val, ref[key], 1e-10, ZERO_FLOOR))
    return SuiteResult("section3", out)


HELIX_PAIRS = [(R, c) for R in (0.25, 0.5, 1.0, 2.0, 4.0) for c in (-1.0, 0.3, 1.0, 2.5)]


def _suite_helix() -> SuiteResult:
    out = []
    for R, c in HELIX_PAIRS:
        ref = helix_oracle(R, c)
        s = frenet_sample(catalog("helical", [c]), [R, 0.0, 0.0])
        out.append(OracleComparison.make("kappa", (R, c), s.kappa, ref["kappa"], 1e-10, ZERO_FLOOR))
        out.append(OracleComparison.make("torsion", (R, c), s.torsion, ref["torsion"], 1e-10, ZERO_FLOOR))
    return SuiteResult("helix", out)


PRESSURE_FIELDS = ("planar_strain_paper", "planar_strain_stated", "axisym_strain", "abc")


def random_regular_points(field, n, rng, box=2.0, min_speed=1e-3, require_curvature=True):
    """``n`` uniform points in ``[-box, box]^3`` away from stagnation/straight streamlines."""
    pts = []
    while len(pts) < n:
        p = rng.uniform(-box, box, 3)
        try:
            s = frenet_sample(field, p)
        except (StagnationPoint, DomainError):
            continue
        if s.speed < min_speed or (require_curvature and s.curvature_degenerate):
            continue
        pts.append(p)
    return np.array(pts)


def _suite_pressure(n_points: int = 200) -> SuiteResult:
    out = []
    rng = np.random.default_rng(1729)
    for name in PRESSURE_FIELDS:
        field = catalog(name)
        for p in random_regular_points(field, n_points, rng):
            res = pressure_identity_check(field, p)
            for key in ("r_tau", "r_n", "r_b", "r_dz"):
                out.append(OracleComparison.make(f"{name}:{key}", tuple(p), getattr(res, key), 0.0, atol=1e-9))
    return SuiteResult("pressure", out)


REMARK12_PROFILES: dict[str, Callable[[float], float]] = {
    "r^2": lambda r: r * r,
    "r": lambda r: r,
    "exp(-r^2)": lambda r: math.exp(-r * r),
}


def _suite_remark12() -> SuiteResult:
    out, notes = [], []
    field = catalog("axisym_strain")
    for label, prof in REMARK12_PROFILES.items():
        for r0 in (0.5, 1.0, 2.0):
            for t in (0.0, 0.5, 1.0):
                res = remark12_check(prof, r0, t)
                out.append(
                    OracleComparison.make(
                        f"azimuthal[{label}]", (r0, t), res.numeric_value, res.oracle_value, atol=1e-7
                    )
                )
                notes.append(
                    f"profile={label} r0={r0:g} t={t:g}: stated e^t form {res.stated_value:.17g}, "
                    f"transport {res.oracle_value:.17g}, agree={res.stated_matches_oracle}"
                )
    for w0 in (0.5, 1.0, 2.0):
        for t in (0.5, 1.0):
            omega = cauchy_vorticity(field, [0.0, 0.0, 1.0], [0.0, 0.0, w0], t)
            out.append(OracleComparison.make("axial", (w0, t), omega[2], math.exp(2 * t) * w0, atol=1e-7 * math.exp(2 * t)))
    return SuiteResult("remark12", out, notes)


FLOWMAP_TIMES = (0.5, 1.0, 2.0)


def _suite_flowmap() -> SuiteResult:
    out = []
    seed = np.array([0.3, -0.7, 0.5])
    for name in LINEAR_CATALOG:
        field = catalog(name)
        A = eval_jet(field, seed).grad_u
        for st in flow_map(field, seed, FLOWMAP_TIMES):
            dev = float(np.abs(st.J - expm(st.t * A)).max())
            out.append(OracleComparison.make(f"{name}:J", (st.t,), dev, 0.0, atol=1e-7))
    abc = catalog("abc", [1.0, 1.0, 1.0])
    for st in flow_map(abc, [0.1, 0.2, 0.3], np.linspace(0.25, 2.0, 8)):
        out.append(OracleComparison.make("abc:detJ", (st.t,), np.linalg.det(st.J), 1.0, atol=1e-6))
    return SuiteResult("flowmap", out)


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "corollary": _suite_corollary,
    "section3": _suite_section3,
    "helix": _suite_helix,
    "pressure": _suite_pressure,
    "remark12": _suite_remark12,
    "flowmap": _suite_flowmap,
}


def run_suite(name: str) -> SuiteResult:
    try:
        return SUITES[name]()
    except KeyError:
        raise PreconditionError(f"unknown suite {name!r} (known: {', '.join(SUITES)})") from None
