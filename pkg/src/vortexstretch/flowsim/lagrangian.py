"""Streamlines, arc length, flow-map Jacobians and material-disk probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from ..diffgeo import DEFAULT_TOLERANCES, TolerancePolicy, frenet_sample
from ..errors import InternalError, PreconditionError, StagnationPoint
from ..fieldkit import VelocityField, eval_jet, eval_velocity
from .rk import IntegratorStats, dopri5

__all__ = [
    "IntegratorConfig",
    "Streamline",
    "ArcLengthMap",
    "FlowMapState",
    "DiskProbeResult",
    "integrate_streamline",
    "arc_length_map",
    "flow_map",
    "flow_map_jacobian",
    "cauchy_vorticity",
    "disk_basis",
    "disk_probe",
]


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    t_span: float = 1.0
    samples: int = 101
    backward: bool = False

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise PreconditionError("integrator tolerances must be positive")
        if not (self.t_span > 0 and math.isfinite(self.t_span)):
            raise PreconditionError(f"t_span must be positive and finite, got {self.t_span}")
        if self.samples < 2:
            raise PreconditionError("need at least 2 dense-output samples")

    def run(self, rhs, y0, t_end=None, stops=(), terminate=None):
        return dopri5(
            rhs,
            y0,
            self.t_span if t_end is None else t_end,
            rtol=self.rel_tol,
            atol=self.abs_tol,
            max_step=self.max_step,
            stops=stops,
            terminate=terminate,
        )


def _oriented(field: VelocityField, cfg: IntegratorConfig) -> VelocityField:
    return field.negated() if cfg.backward else field


def _check_seed(field: VelocityField, seed, tol: TolerancePolicy) -> np.ndarray:
    seed = np.asarray(seed, dtype=float).reshape(3)
    speed = float(np.linalg.norm(eval_velocity(field, seed)))
    if speed <= tol.eps_stagnation * field.velocity_scale:
        raise StagnationPoint(seed, speed)
    return seed


@dataclass
class Streamline:
    """Trajectory through ``seed`` parameterised by time and arc length.

    ``t, z, x, speed`` are the dense-output samples (uniform in ``t``); the
    accepted integrator nodes are kept in ``nodes_*`` and back the cubic
    Hermite interpolants used by :meth:`position` and :func:`arc_length_map`.
    """

    seed: np.ndarray
    t: np.ndarray
    z: np.ndarray
    x: np.ndarray
    speed: np.ndarray
    stats: IntegratorStats
    status: str
    nodes_t: np.ndarray = field(repr=False)
    nodes_y: np.ndarray = field(repr=False)  # columns x, y, z, arc length
    nodes_f: np.ndarray = field(repr=False)
    _spline: CubicHermiteSpline | None = field(default=None, repr=False)

    @property
    def t_end(self) -> float:
        return float(self.nodes_t[-1])

    @property
    def spline(self) -> CubicHermiteSpline:
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.nodes_t, self.nodes_y, self.nodes_f)
        return self._spline

    def state(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_end * (1 + 1e-14)):
            raise PreconditionError(f"time outside [0, {self.t_end}]")
        return self.spline(t)

    def position(self, t) -> np.ndarray:
        return self.state(t)[..., :3]

    def arc_length(self, t) -> np.ndarray:
        return self.state(t)[..., 3]


def integrate_streamline(
    field: VelocityField,
    seed,
    cfg: IntegratorConfig = IntegratorConfig(),
    tol: TolerancePolicy = DEFAULT_TOLERANCES,
) -> Streamline:
    """Integrate ``x' = u(x)``, ``z' = |u(x)|`` from ``seed`` over ``cfg.t_span``.

    Ends early with status ``"stagnation_approach"`` when the speed drops
    below the stagnation tolerance.
    """
    fld = _oriented(field, cfg)
    seed = _check_seed(fld, seed, tol)
    stagnation = tol.eps_stagnation * fld.velocity_scale

    def rhs(t, y):
        u = fld.value_fn(y[:3])
        return np.append(u, math.sqrt(u @ u))

    def terminate(t, y):
        u = fld.value_fn(y[:3])
        if math.sqrt(u @ u) <= stagnation:
            return "stagnation_approach"
        return None

    # sample times double as stops so samples are integrator nodes
    grid = np.linspace(0.0, cfg.t_span, cfg.samples)
    sol = cfg.run(rhs, np.append(seed, 0.0), stops=grid[1:-1], terminate=terminate)
    if np.any(np.diff(sol.t) <= 0) or np.any(np.diff(sol.y[:, 3]) <= 0):
        raise InternalError("integrator produced non-monotone samples")
    line = Streamline(
        seed=seed,
        t=np.empty(0),
        z=np.empty(0),
        x=np.empty((0, 3)),
        speed=np.empty(0),
        stats=sol.stats,
        status=sol.status,
        nodes_t=sol.t,
        nodes_y=sol.y,
        nodes_f=sol.f,
    )
    if sol.status == "completed":
        ts = grid
        ys = sol.y[[0] + [sol.stops[t] for t in grid[1:-1]] + [len(sol.t) - 1]]
    else:
        ts = np.linspace(0.0, line.t_end, cfg.samples)
        ys = line.spline(ts)
        ys[0] = sol.y[0]
        ys[-1] = sol.y[-1]
    line.t = ts
    line.x = ys[:, :3]
    line.z = ys[:, 3]
    line.speed = np.array([np.linalg.norm(fld.value_fn(p)) for p in line.x])
    return line


@dataclass(frozen=True)
class ArcLengthMap:
    """Monotone piecewise-cubic map between time and arc length."""

    t_nodes: np.ndarray
    z_nodes: np.ndarray
    spline: CubicHermiteSpline

    def z_of_t(self, t):
        return self.spline(np.asarray(t, dtype=float))

    def _invert(self, z: float) -> float:
        zn = self.z_nodes
        if not (zn[0] <= z <= zn[-1]):
            raise PreconditionError(f"arc length {z} outside [{zn[0]}, {zn[-1]}]")
        k = int(np.searchsorted(zn, z, side="right")) - 1
        k = min(max(k, 0), len(zn) - 2)
        if z == zn[k]:
            return float(self.t_nodes[k])
        if z == zn[k + 1]:
            return float(self.t_nodes[k + 1])
        lo, hi = self.t_nodes[k], self.t_nodes[k + 1]
        return brentq(lambda t: float(self.spline(t)) - z, lo, hi, xtol=1e-15, rtol=1e-15)

    def t_of_z(self, z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 0:
            return self._invert(float(z))
        return np.array([self._invert(float(v)) for v in z])


def arc_length_map(line: Streamline) -> ArcLengthMap:
    """``t <-> z`` built from the streamline's accepted nodes (``dz/dt = |u|``)."""
    t = line.nodes_t
    if t.size < 2:
        raise PreconditionError("streamline needs at least 2 samples")
    z = line.nodes_y[:, 3]
    dz = line.nodes_f[:, 3]
    if np.any(np.diff(t) <= 0) or np.any(np.diff(z) <= 0) or np.any(dz <= 0):
        raise InternalError("arc length is not strictly increasing along the streamline")
    spline = CubicHermiteSpline(t, z, dz)
    # Hermite cubics with positive end slopes can still overshoot
    probe = np.sort(np.concatenate([t, 0.25 * t[1:] + 0.75 * t[:-1], 0.75 * t[1:] + 0.25 * t[:-1]]))
    if np.any(np.diff(spline(probe)) <= 0):
        raise InternalError("arc-length interpolant is not monotone")
    return ArcLengthMap(t, z, spline)


@dataclass(frozen=True)
class FlowMapState:
    t: float
    x: np.ndarray
    J: np.ndarray


def _variational_rhs(fld: VelocityField):
    def rhs(t, y):
        jet = eval_jet(fld, y[:3])
        J = y[3:].reshape(3, 3)
        return np.concatenate([jet.u, (jet.grad_u @ J).ravel()])

    return rhs


def flow_map(
    field: VelocityField,
    seed,
    times,
    cfg: IntegratorConfig = IntegratorConfig(),
    tol: TolerancePolicy = DEFAULT_TOLERANCES,
) -> list[FlowMapState]:
    """Position and Jacobian ``d eta / d x0`` at each requested time.

    Integrates ``x' = u(x)`` jointly with ``J' = grad_u(x) J``, ``J(0) = I``.
    """
    fld = _oriented(field, cfg)
    seed = _check_seed(fld, seed, tol)
    times = [float(t) for t in times]
    if any(t < 0 or not math.isfinite(t) for t in times):
        raise PreconditionError("flow-map times must be finite and non-negative")
    y0 = np.concatenate([seed, np.eye(3).ravel()])
    t_end = max(times) if times else 0.0
    if t_end == 0.0:
        return [FlowMapState(0.0, seed.copy(), np.eye(3)) for _ in times]
    sol = cfg.run(_variational_rhs(fld), y0, t_end=t_end, stops=times)
    out = []
    for t in times:
        if t == 0.0:
            out.append(FlowMapState(0.0, seed.copy(), np.eye(3)))
        else:
            y = sol.y[sol.stops[t]]
            out.append(FlowMapState(t, y[:3].copy(), y[3:].reshape(3, 3).copy()))
    return out


def flow_map_jacobian(
    field: VelocityField,
    seed,
    t: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    tol: TolerancePolicy = DEFAULT_TOLERANCES,
) -> np.ndarray:
    return flow_map(field, seed, [t], cfg, tol)[0].J


def cauchy_vorticity(
    field: VelocityField,
    seed,
    omega0,
    t: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    tol: TolerancePolicy = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Vorticity carried from ``seed`` by the Cauchy formula ``omega(t) = J(t) omega0``."""
    omega0 = np.asarray(omega0, dtype=float).reshape(3)
    return flow_map_jacobian(field, seed, t, cfg, tol) @ omega0


def disk_basis(field: VelocityField, seed, tol: TolerancePolicy = DEFAULT_TOLERANCES):
    """Orthonormal pair ``(n0, b0)`` spanning the plane normal to the flow at ``seed``.

    The Frenet normal and binormal when the curvature is non-degenerate;
    otherwise Gram-Schmidt of the coordinate axis along which the tangent has
    its smallest component, completed by ``b0 = tau x n0``.
    """
    s = frenet_sample(field, seed, tol)
    if not s.curvature_degenerate:
        return s.normal, s.binormal, s.tau
    tau = s.tau
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(tau)))] = 1.0
    n0 = axis - (axis @ tau) * tau
    n0 /= np.linalg.norm(n0)
    return n0, np.cross(tau, n0), tau


@dataclass
class DiskProbeResult:
    """Perpendicularity defects of an evolved material disk.

    ``defect_n[k] = unit(J n0) . tau(eta(t_k))`` and likewise for ``b0``;
    zero means the material line stays normal to the streamline.  When a
    marker ring was requested, ``ring_defect_*`` hold the same quantities
    estimated from finite-radius markers.
    """

    seed: np.ndarray
    basis: tuple[np.ndarray, np.ndarray]
    t: np.ndarray
    defect_n: np.ndarray
    defect_b: np.ndarray
    axis_stretch: np.ndarray
    ring_radius: float | None = None
    ring_defect_n: np.ndarray | None = None
    ring_defect_b: np.ndarray | None = None

    def max_defect(self) -> float:
        return float(max(np.abs(self.defect_n).max(), np.abs(self.defect_b).max()))


def _unit_dot(v: np.ndarray, tau: np.ndarray) -> float:
    return float(np.clip((v @ tau) / np.linalg.norm(v), -1.0, 1.0))


def disk_probe(
    field: VelocityField,
    seed,
    cfg: IntegratorConfig = IntegratorConfig(),
    tol: TolerancePolicy = DEFAULT_TOLERANCES,
    times=None,
    ring_radius: float | None = None,
) -> DiskProbeResult:
    """Track the infinitesimal disk normal to the flow at ``seed``.

    Defects are evaluated at ``times`` (default: ``cfg.samples`` points
    uniform on ``[0, cfg.t_span]``).  With ``ring_radius`` set, eight marker
    particles at that radius are advected as well and their least-squares
    tangent estimates give ``ring_defect_*``, which agree with the Jacobian
    path to ``O(r)``.
    """
    fld = _oriented(field, cfg)
    seed = _check_seed(fld, seed, tol)
    n0, b0, tau0 = disk_basis(fld, seed, tol)
    if times is None:
        times = np.linspace(0.0, cfg.t_span, cfg.samples)
    times = np.asarray(sorted(float(t) for t in times))
    states = flow_map(fld, seed, times, cfg, tol)
    speed0 = float(np.linalg.norm(eval_velocity(fld, seed)))

    dn, db, stretch = [], [], []
    for st in states:
        u = eval_velocity(fld, st.x)
        speed = float(np.linalg.norm(u))
        if st.t == 0.0:
            # the initial disk is normal to the flow by construction
            dn.append(0.0)
            db.append(0.0)
        else:
            tau = u / speed
            dn.append(_unit_dot(st.J @ n0, tau))
            db.append(_unit_dot(st.J @ b0, tau))
        stretch.append(speed / speed0)

    result = DiskProbeResult(
        seed=seed,
        basis=(n0, b0),
        t=times,
        defect_n=np.array(dn),
        defect_b=np.array(db),
        axis_stretch=np.array(stretch),
    )
    if ring_radius is not None:
        _attach_ring(result, fld, cfg, states, ring_radius)
    return result


def _attach_ring(result, fld, cfg, states, r):
    if not r > 0:
        raise PreconditionError(f"ring radius must be positive, got {r}")
    n0, b0 = result.basis
    theta = np.arange(8) * (np.pi / 4)
    cos, sin = np.cos(theta), np.sin(theta)
    rhs = lambda t, y: fld.value_fn(y)  # noqa: E731
    positive = [t for t in result.t if t > 0]
    tracks = []
    for c, s in zip(cos, sin):
        p0 = result.seed + r * (c * n0 + s * b0)
        if positive:
            sol = cfg.run(rhs, p0, t_end=max(positive), stops=positive)
            tracks.append({t: sol.y[sol.stops[t]] for t in positive})
        else:
            tracks.append({})
    ring_n, ring_b = [], []
    for st in states:
        if st.t == 0.0:
            ring_n.append(0.0)
            ring_b.append(0.0)
            continue
        d = np.array([tr[st.t] - st.x for tr in tracks])
        # least squares: d_k ~ r (cos_k Jn0 + sin_k Jb0), sum cos^2 = sum sin^2 = 4
        jn = (cos @ d) / (4 * r)
        jb = (sin @ d) / (4 * r)
        u = fld.value_fn(st.x)
        tau = u / np.linalg.norm(u)
        ring_n.append(_unit_dot(jn, tau))
        ring_b.append(_unit_dot(jb, tau))
    result.ring_radius = float(r)
    result.ring_defect_n = np.array(ring_n)
    result.ring_defect_b = np.array(ring_b)
