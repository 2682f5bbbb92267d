"""Steady velocity fields with exact second-order jets.

Fields come from two places: the built-in :func:`catalog` of closed-form
flows, and :func:`parse_field`, which compiles three component expressions.
Either way, :func:`eval_jet` returns ``u``, ``grad_u[i, j] = d_j u_i`` and
``hess_u[i, j, k] = d_j d_k u_i`` exactly; :func:`eval_jet_fd` recomputes the
derivatives by central differences for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from ..errors import DomainError, PreconditionError
from . import expr as _expr
from .jets import Jet, variables

__all__ = [
    "FieldJet",
    "ScalarJet",
    "VelocityField",
    "CATALOG",
    "catalog",
    "parse_field",
    "load_field_file",
    "eval_jet",
    "eval_jet_fd",
    "eval_velocity",
    "eval_pressure",
    "default_fd_step",
]


class FieldJet(NamedTuple):
    u: np.ndarray  # (3,)
    grad_u: np.ndarray  # (3, 3), [i, j] = d_j u_i
    hess_u: np.ndarray  # (3, 3, 3), [i, j, k] = d_j d_k u_i


class ScalarJet(NamedTuple):
    value: float
    grad: np.ndarray
    hess: np.ndarray


JetFn = Callable[[np.ndarray], FieldJet]
PressureFn = Callable[[np.ndarray], ScalarJet]


@dataclass(frozen=True)
class VelocityField:
    """An immutable steady velocity field.

    ``jet_fn`` returns the exact second-order jet at a point; ``value_fn``
    only the velocity (cheaper; used by integrators).  ``pressure`` is the
    steady-Euler pressure, when known, as a scalar-jet function.
    """

    name: str
    jet_fn: JetFn = field(repr=False, compare=False)
    value_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    divergence_free: bool = False
    pressure: PressureFn | None = field(default=None, repr=False, compare=False)
    params: tuple[float, ...] = ()
    components: tuple[_expr.Node, _expr.Node, _expr.Node] | None = None
    pressure_expr: _expr.Node | None = None
    velocity_scale: float = 1.0

    @property
    def descriptor(self) -> str:
        if self.components is not None:
            return "expr:" + ", ".join(_expr.to_text(c) for c in self.components)
        if self.params:
            return f"{self.name}({','.join(repr(p) for p in self.params)})"
        return self.name

    def scaled(self, factor: float) -> "VelocityField":
        """The field ``factor * u``; pressure scales by ``factor**2``."""
        factor = float(factor)

        def jet_fn(x):
            j = self.jet_fn(x)
            return FieldJet(factor * j.u, factor * j.grad_u, factor * j.hess_u)

        pressure = None
        if self.pressure is not None:
            f2 = factor * factor

            def pressure(x, _p=self.pressure):
                s = _p(x)
                return ScalarJet(f2 * s.value, f2 * s.grad, f2 * s.hess)

        return VelocityField(
            name=f"{factor!r}*{self.name}",
            jet_fn=jet_fn,
            value_fn=lambda x: factor * self.value_fn(x),
            divergence_free=self.divergence_free,
            pressure=pressure,
            params=self.params,
            velocity_scale=abs(factor) * self.velocity_scale,
        )

    def negated(self) -> "VelocityField":
        return self.scaled(-1.0)


def _point(x) -> np.ndarray:
    p = np.asarray(x, dtype=float).reshape(3)
    if not np.isfinite(p).all():
        raise PreconditionError(f"point has non-finite components: {p.tolist()}")
    return p


def eval_velocity(field: VelocityField, x) -> np.ndarray:
    u = np.asarray(field.value_fn(_point(x)), dtype=float)
    if not np.isfinite(u).all():
        raise DomainError(f"non-finite velocity at {list(map(float, x))}")
    return u


def eval_jet(field: VelocityField, x) -> FieldJet:
    """Exact value, Jacobian and Hessian of ``field`` at ``x``."""
    jet = field.jet_fn(_point(x))
    if not (
        np.isfinite(jet.u).all()
        and np.isfinite(jet.grad_u).all()
        and np.isfinite(jet.hess_u).all()
    ):
        raise DomainError(f"non-finite jet at {list(map(float, x))}")
    return jet


def eval_pressure(field: VelocityField, x) -> ScalarJet:
    from ..errors import NoPressureError

    if field.pressure is None:
        raise NoPressureError(f"field {field.name!r} has no known pressure")
    return field.pressure(_point(x))


def default_fd_step(x) -> float:
    return float(np.cbrt(np.finfo(float).eps) * (1.0 + np.linalg.norm(x)))


def eval_jet_fd(field: VelocityField, x, h: float | None = None) -> FieldJet:
    """Central-difference estimate of the jet.

    ``grad_u`` uses the 2-point stencil, ``hess_u`` the 3-point second
    difference on the diagonal and the 4-point cross stencil off it.  The
    Hessian is symmetrised.  Agrees with :func:`eval_jet` to ``O(h**2)``.
    """
    x = _point(x)
    if h is None:
        h = default_fd_step(x)
    if not (h > 0 and math.isfinite(h)):
        raise PreconditionError(f"finite-difference step must be positive, got {h}")
    f = lambda p: eval_velocity(field, p)  # noqa: E731
    eye = np.eye(3) * h
    u0 = f(x)
    plus = [f(x + eye[k]) for k in range(3)]
    minus = [f(x - eye[k]) for k in range(3)]
    grad = np.empty((3, 3))
    hess = np.empty((3, 3, 3))
    for k in range(3):
        grad[:, k] = (plus[k] - minus[k]) / (2.0 * h)
        hess[:, k, k] = (plus[k] - 2.0 * u0 + minus[k]) / (h * h)
    for j in range(3):
        for k in range(j + 1, 3):
            d = (
                f(x + eye[j] + eye[k])
                - f(x + eye[j] - eye[k])
                - f(x - eye[j] + eye[k])
                + f(x - eye[j] - eye[k])
            ) / (4.0 * h * h)
            hess[:, j, k] = d
            hess[:, k, j] = d
    return FieldJet(u0, grad, hess)


# ---------------------------------------------------------------------------
# parsed fields


def _compile_components(nodes) -> tuple[JetFn, Callable]:
    def value_fn(x):
        env = {"x": float(x[0]), "y": float(x[1]), "z": float(x[2])}
        return np.array([float(_expr.evaluate(n, env)) for n in nodes])

    def jet_fn(x):
        env = dict(zip(_expr.VARIABLES, variables(x)))
        u = np.empty(3)
        grad = np.zeros((3, 3))
        hess = np.zeros((3, 3, 3))
        for i, n in enumerate(nodes):
            out = _expr.evaluate(n, env)
            if isinstance(out, Jet):
                u[i], grad[i], hess[i] = out.v, out.g, out.h
            else:
                u[i] = out
        return FieldJet(u, grad, hess)

    return jet_fn, value_fn


def _compile_scalar(node) -> PressureFn:
    def pressure(x):
        env = dict(zip(_expr.VARIABLES, variables(x)))
        out = _expr.evaluate(node, env)
        if isinstance(out, Jet):
            return ScalarJet(out.v, out.g, out.h)
        return ScalarJet(float(out), np.zeros(3), np.zeros((3, 3)))

    return pressure


def parse_field(
    source: str,
    pressure: str | None = None,
    divergence_free: bool | None = None,
    name: str | None = None,
) -> VelocityField:
    """Compile ``"expr, expr, expr"`` into a :class:`VelocityField`.

    Parameters
    ----------
    source : str
        Three component expressions in ``x, y, z`` separated by ``,`` or ``;``.
    pressure : str, optional
        Scalar expression for the known steady-Euler pressure.
    divergence_free : bool, optional
        Declared incompressibility.  When omitted it is probed at a few
        deterministic points and set if the trace of ``grad_u`` vanishes
        there.
    """
    nodes = _expr.parse_components(source)
    jet_fn, value_fn = _compile_components(nodes)
    p_node = _expr.parse_expression(pressure) if pressure is not None else None
    if divergence_free is None:
        divergence_free = _probe_divergence_free(jet_fn)
    return VelocityField(
        name=name or "expr",
        jet_fn=jet_fn,
        value_fn=value_fn,
        divergence_free=divergence_free,
        pressure=_compile_scalar(p_node) if p_node is not None else None,
        components=nodes,
        pressure_expr=p_node,
    )


def _probe_divergence_free(jet_fn) -> bool:
    rng = np.random.default_rng(20240521)
    checked = 0
    for p in rng.uniform(0.2, 1.7, size=(8, 3)):
        try:
            g = jet_fn(p).grad_u
        except DomainError:
            continue
        if not np.isfinite(g).all():
            continue
        if abs(np.trace(g)) > 1e-10 * max(np.abs(g).max(), 1.0):
            return False
        checked += 1
    return checked > 0


def load_field_file(path) -> VelocityField:
    """Read a field from a text file.

    Blank lines and ``#`` comments are ignored.  A line starting with ``p:`` or
    ``p =`` gives the pressure; the remaining lines are joined with ``;``.
    """
    parts = []
    pressure = None
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head = line.replace(" ", "")
            if head.startswith("p:") or head.startswith("p="):
                pressure = line.split(":" if head.startswith("p:") else "=", 1)[1]
                continue
            parts.append(line)
    return parse_field(";".join(parts), pressure=pressure, name=str(path))


# ---------------------------------------------------------------------------
# catalog


def _linear(A, name, pressure_diag=None, params=()) -> VelocityField:
    A = np.asarray(A, dtype=float)
    zero_h = np.zeros((3, 3, 3))

    def jet_fn(x):
        return FieldJet(A @ x, A.copy(), zero_h.copy())

    pressure = None
    if pressure_diag is not None:
        P = np.diag(pressure_diag).astype(float)

        # p = x.P.x / 2
        def pressure(x):
            return ScalarJet(0.5 * float(x @ P @ x), P @ x, P.copy())

    return VelocityField(
        name=name,
        jet_fn=jet_fn,
        value_fn=lambda x: A @ x,
        divergence_free=bool(np.trace(A) == 0.0),
        pressure=pressure,
        params=params,
    )


def _helical(c: float) -> VelocityField:
    A = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    off = np.array([0.0, 0.0, c])
    P = np.diag([1.0, 1.0, 0.0])

    def jet_fn(x):
        return FieldJet(A @ x + off, A.copy(), np.zeros((3, 3, 3)))

    def pressure(x):
        return ScalarJet(0.5 * float(x @ P @ x), P @ x, P.copy())

    return VelocityField(
        name="helical",
        jet_fn=jet_fn,
        value_fn=lambda x: A @ x + off,
        divergence_free=True,
        pressure=pressure,
        params=(c,),
    )


def _abc(A: float, B: float, C: float) -> VelocityField:
    """ABC flow ``(A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)``."""

    def value_fn(x):
        X, Y, Z = x
        return np.array(
            [
                A * math.sin(Z) + C * math.cos(Y),
                B * math.sin(X) + A * math.cos(Z),
                C * math.sin(Y) + B * math.cos(X),
            ]
        )

    def jet_fn(x):
        X, Y, Z = x
        sx, cx = math.sin(X), math.cos(X)
        sy, cy = math.sin(Y), math.cos(Y)
        sz, cz = math.sin(Z), math.cos(Z)
        u = np.array([A * sz + C * cy, B * sx + A * cz, C * sy + B * cx])
        g = np.array(
            [
                [0.0, -C * sy, A * cz],
                [B * cx, 0.0, -A * sz],
                [-B * sx, C * cy, 0.0],
            ]
        )
        h = np.zeros((3, 3, 3))
        h[0, 1, 1] = -C * cy
        h[0, 2, 2] = -A * sz
        h[1, 0, 0] = -B * sx
        h[1, 2, 2] = -A * cz
        h[2, 0, 0] = -B * cx
        h[2, 1, 1] = -C * sy
        return FieldJet(u, g, h)

    # Beltrami (curl u = u): (u.grad)u = grad(|u|^2 / 2), hence p = -|u|^2 / 2
    def pressure(x):
        j = jet_fn(x)
        u, g, h = j
        grad = -(g.T @ u)
        hess = -(g.T @ g + np.einsum("i,ijk->jk", u, h))
        return ScalarJet(-0.5 * float(u @ u), grad, hess)

    return VelocityField(
        name="abc",
        jet_fn=jet_fn,
        value_fn=value_fn,
        divergence_free=True,
        pressure=pressure,
        params=(A, B, C),
    )


@dataclass(frozen=True)
class _Entry:
    build: Callable[..., VelocityField]
    n_params: int
    defaults: tuple[float, ...] = ()
    summary: str = ""


CATALOG: dict[str, _Entry] = {
    "planar_strain_paper": _Entry(
        lambda: _linear(np.diag([1.0, -1.0, 0.0]), "planar_strain_paper", [-1, -1, 0]),
        0,
        summary="(x, -y, 0); p = -(x^2+y^2)/2",
    ),
    "planar_strain_stated": _Entry(
        lambda: _linear(np.diag([-1.0, 1.0, 0.0]), "planar_strain_stated", [-1, -1, 0]),
        0,
        summary="(-x, y, 0); p = -(x^2+y^2)/2",
    ),
    "axisym_strain": _Entry(
        lambda: _linear(np.diag([-1.0, -1.0, 2.0]), "axisym_strain", [-1, -1, -4]),
        0,
        summary="(-x, -y, 2z); p = -(x^2+y^2+4z^2)/2",
    ),
    "rigid_rotation": _Entry(
        lambda: _linear(
            [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
            "rigid_rotation",
            [1, 1, 0],
        ),
        0,
        summary="(-y, x, 0); p = (x^2+y^2)/2",
    ),
    "helical": _Entry(_helical, 1, (1.0,), summary="(-y, x, c); p = (x^2+y^2)/2"),
    "abc": _Entry(_abc, 3, (1.0, 1.0, 1.0), summary="ABC(A, B, C); p = -|u|^2/2"),
}

LINEAR_CATALOG = ("planar_strain_paper", "planar_strain_stated", "axisym_strain", "rigid_rotation")


def catalog(name: str, params=None) -> VelocityField:
    """Look up a built-in field.

    >>> catalog("axisym_strain").value_fn(np.array([0.0, 0.0, 1.0])).tolist()
    [0.0, 0.0, 2.0]
    """
    try:
        entry = CATALOG[name]
    except KeyError:
        known = ", ".join(sorted(CATALOG))
        raise PreconditionError(f"unknown catalog field {name!r} (known: {known})") from None
    if params is None or len(params) == 0:
        params = entry.defaults
    params = tuple(float(p) for p in params)
    if len(params) != entry.n_params:
        raise PreconditionError(
            f"{name} takes {entry.n_params} parameter(s), got {len(params)}"
        )
    return entry.build(*params)
