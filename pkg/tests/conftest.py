import mpmath
import numpy as np
import pytest
import sympy as sp

from vortexstretch.fieldkit import CATALOG, catalog

X, Y, Z = sp.symbols("x y z", real=True)

# symbolic twins of the catalog entries (default parameters)
SYMBOLIC_CATALOG = {
    "planar_strain_paper": (X, -Y, sp.Integer(0)),
    "planar_strain_stated": (-X, Y, sp.Integer(0)),
    "axisym_strain": (-X, -Y, 2 * Z),
    "rigid_rotation": (-Y, X, sp.Integer(0)),
    "helical": (-Y, X, sp.Integer(1)),
    "abc": (sp.sin(Z) + sp.cos(Y), sp.sin(X) + sp.cos(Z), sp.sin(Y) + sp.cos(X)),
}


class SymbolicGeometry:
    """Streamline geometry by symbolic differentiation (no jets involved).

    F = |u x a| / |u| with a = (u.grad)u, and S = (u.grad F) / |u|.
    """

    def __init__(self, components):
        u = sp.Matrix(components)
        v = sp.Matrix([X, Y, Z])
        J = u.jacobian(v)
        a = J * u
        jerk = a.jacobian(v) * u
        c = u.cross(a)
        speed = sp.sqrt(u.dot(u))
        F = sp.sqrt(c.dot(c)) / speed
        S = (sp.Matrix([F]).jacobian(v) * u)[0] / speed
        args = (X, Y, Z)
        self.F = sp.lambdify(args, F, "mpmath")
        self.S = sp.lambdify(args, S, "mpmath")
        self.kappa = sp.lambdify(args, sp.sqrt(c.dot(c)) / speed**3, "mpmath")
        self.alpha = sp.lambdify(args, a.dot(u) / speed, "mpmath")
        self.torsion = sp.lambdify(args, c.dot(jerk) / c.dot(c), "mpmath")

    def __call__(self, name, x):
        with mpmath.workdps(30):
            return float(getattr(self, name)(*[mpmath.mpf(float(c)) for c in x]))


@pytest.fixture(scope="session")
def symbolic():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = SymbolicGeometry(SYMBOLIC_CATALOG[name])
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(CATALOG))
def catalog_field(request):
    return catalog(request.param)
