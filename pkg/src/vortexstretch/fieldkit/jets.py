"""Second-order forward-mode jets in three variables.

A :class:`Jet` carries a value together with its exact gradient and Hessian
with respect to the point ``(x, y, z)``.  Arithmetic propagates all three by
the product and chain rules, so evaluating an expression on seeded jets yields
exact first and second derivatives (up to roundoff).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["Jet", "variables", "UNARY", "apply_unary", "power"]


class Jet:
    """Truncated Taylor expansion ``v + g.dx + dx.H.dx / 2``."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v: float, g: np.ndarray, h: np.ndarray):
        self.v = v
        self.g = g
        self.h = h

    @classmethod
    def constant(cls, c: float) -> "Jet":
        return cls(float(c), np.zeros(3), np.zeros((3, 3)))

    def is_finite(self) -> bool:
        return (
            math.isfinite(self.v)
            and bool(np.isfinite(self.g).all())
            and bool(np.isfinite(self.h).all())
        )

    def _chain(self, f0: float, f1: float, f2: float) -> "Jet":
        # d2 f(a) = f'(a) d2a + f''(a) da da^T
        g = f1 * self.g
        h = f1 * self.h + f2 * np.outer(self.g, self.g)
        return Jet(f0, g, h)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.v + other.v, self.g + other.g, self.h + other.h)
        return Jet(self.v + other, self.g, self.h)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.g, -self.h)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.v - other.v, self.g - other.g, self.h - other.h)
        return Jet(self.v - other, self.g, self.h)

    def __rsub__(self, other):
        return Jet(other - self.v, -self.g, -self.h)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            cross = np.outer(a.g, b.g)
            return Jet(
                a.v * b.v,
                a.v * b.g + b.v * a.g,
                a.v * b.h + b.v * a.h + (cross + cross.T),
            )
        return Jet(self.v * other, self.g * other, self.h * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        if self.v == 0.0:
            raise ZeroDivisionError("jet division by zero")
        r = 1.0 / self.v
        return self._chain(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if other == 0:
            raise ZeroDivisionError("jet division by zero")
        return Jet(self.v / other, self.g / other, self.h / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __repr__(self) -> str:
        return f"Jet(v={self.v!r}, g={self.g.tolist()!r})"


def variables(point) -> tuple[Jet, Jet, Jet]:
    """Seed jets for ``x, y, z`` at ``point``."""
    eye = np.eye(3)
    return tuple(
        Jet(float(point[i]), eye[i].copy(), np.zeros((3, 3))) for i in range(3)
    )


def _tan(a):
    t = math.tan(a)
    s = 1.0 + t * t
    return t, s, 2.0 * t * s


def _tanh(a):
    t = math.tanh(a)
    s = 1.0 - t * t
    return t, s, -2.0 * t * s


def _exp(a):
    e = math.exp(a)
    return e, e, e


def _log(a):
    return math.log(a), 1.0 / a, -1.0 / (a * a)


def _sqrt(a):
    s = math.sqrt(a)
    return s, 0.5 / s, -0.25 / (s * a)


# name -> (float function, (f, f', f'') at a point)
UNARY = {
    "sin": (math.sin, lambda a: (math.sin(a), math.cos(a), -math.sin(a))),
    "cos": (math.cos, lambda a: (math.cos(a), -math.sin(a), -math.cos(a))),
    "tan": (math.tan, _tan),
    "sinh": (math.sinh, lambda a: (math.sinh(a), math.cosh(a), math.sinh(a))),
    "cosh": (math.cosh, lambda a: (math.cosh(a), math.sinh(a), math.cosh(a))),
    "tanh": (math.tanh, _tanh),
    "exp": (math.exp, _exp),
    "log": (math.log, _log),
    "sqrt": (math.sqrt, _sqrt),
}


def apply_unary(name: str, a):
    """Apply a named elementary function to a float or a :class:`Jet`.

    Raises ``ValueError``/``OverflowError``/``ZeroDivisionError`` from
    :mod:`math` on domain violations; callers translate these.
    """
    scalar_fn, jet_fn = UNARY[name]
    if isinstance(a, Jet):
        return a._chain(*jet_fn(a.v))
    return scalar_fn(a)


def _real_pow(a: float, p: float) -> float:
    if a < 0.0 and not float(p).is_integer():
        raise ValueError("negative base with non-integer exponent")
    return a**p


def power(a, p: float):
    """``a ** p`` for a constant exponent ``p``."""
    if not isinstance(a, Jet):
        return _real_pow(a, p)
    if p == 0.0:
        return Jet.constant(1.0)
    f0 = _real_pow(a.v, p)
    f1 = p * _real_pow(a.v, p - 1.0) if p != 1.0 else 1.0
    if p == 1.0:
        f2 = 0.0
    elif p == 2.0:
        f2 = 2.0
    else:
        f2 = p * (p - 1.0) * _real_pow(a.v, p - 2.0)
    return a._chain(f0, f1, f2)
