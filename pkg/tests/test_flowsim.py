import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from vortexstretch.diffgeo import frenet_sample
from vortexstretch.errors import PreconditionError, StagnationPoint, StepUnderflow
from vortexstretch.fieldkit import LINEAR_CATALOG, catalog, parse_field
from vortexstretch.flowsim import (
    IntegratorConfig,
    arc_length_map,
    cauchy_vorticity,
    disk_basis,
    disk_probe,
    dopri5,
    flow_map,
    flow_map_jacobian,
    integrate_streamline,
)

E = math.e
LINEAR_MATRICES = {
    "planar_strain_paper": np.diag([1.0, -1.0, 0.0]),
    "planar_strain_stated": np.diag([-1.0, 1.0, 0.0]),
    "axisym_strain": np.diag([-1.0, -1.0, 2.0]),
    "rigid_rotation": np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
}


# -- raw integrator ----------------------------------------------------------------


def test_dopri5_exponential_and_stops():
    sol = dopri5(lambda t, y: -y, np.array([1.0]), 3.0, rtol=1e-10, atol=1e-14, stops=[0.5, 1.7])
    assert sol.t[-1] == 3.0
    for s in (0.5, 1.7):
        assert sol.t[sol.stops[s]] == s
        assert sol.y[sol.stops[s], 0] == pytest.approx(math.exp(-s), rel=1e-9)
    assert sol.stats.steps > 0 and sol.stats.evaluations >= 6 * sol.stats.steps
    assert sol.status == "completed"


def test_dopri5_step_underflow():
    # blow-up at t = 1
    with pytest.raises(StepUnderflow):
        dopri5(lambda t, y: y**2, np.array([1.0]), 2.0, rtol=1e-10, atol=1e-12)


def test_integrator_config_validates():
    with pytest.raises(PreconditionError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(PreconditionError):
        IntegratorConfig(t_span=math.inf)
    with pytest.raises(PreconditionError):
        IntegratorConfig(samples=1)


# -- streamlines --------------------------------------------------------------------


def test_planar_strain_trajectory():
    line = integrate_streamline(catalog("planar_strain_paper"), [2, 1, 0])
    np.testing.assert_allclose(line.x[-1], [2 * E, 1 / E, 0], rtol=1e-8, atol=1e-12)
    assert line.t[0] == 0.0 and line.t[-1] == 1.0 and line.z[0] == 0.0


def test_axisym_axis_trajectory():
    line = integrate_streamline(catalog("axisym_strain"), [0, 0, 1])
    np.testing.assert_allclose(line.x[-1], [0, 0, E**2], rtol=1e-8)
    assert line.z[-1] == pytest.approx(E**2 - 1, rel=1e-8)
    np.testing.assert_allclose(line.z, np.exp(2 * line.t) - 1, rtol=1e-7, atol=1e-12)


def test_rotation_closes():
    line = integrate_streamline(catalog("rigid_rotation"), [1, 0, 0], IntegratorConfig(t_span=2 * math.pi))
    np.testing.assert_allclose(line.x[-1], [1, 0, 0], atol=1e-7)
    assert line.z[-1] == pytest.approx(2 * math.pi, rel=1e-9)
    np.testing.assert_allclose(line.z, line.t, atol=1e-8)


def test_backward_integration():
    line = integrate_streamline(catalog("planar_strain_paper"), [2, 1, 0], IntegratorConfig(backward=True))
    np.testing.assert_allclose(line.x[-1], [2 / E, E, 0], rtol=1e-8)


def test_stagnation_seed_and_approach():
    with pytest.raises(StagnationPoint):
        integrate_streamline(catalog("axisym_strain"), [0, 0, 0])
    # |x| decays like e^-t and crosses the 1e-10 threshold near t = 23
    f = parse_field("-x, 0, 0")
    line = integrate_streamline(f, [1, 0, 0], IntegratorConfig(t_span=40.0))
    assert line.status == "stagnation_approach"
    assert line.t_end < 40.0
    assert np.linalg.norm(line.x[-1]) <= 1e-9


@pytest.mark.parametrize("name,seed", [
    ("planar_strain_paper", (2, 1, 0)),
    ("helical", (1, 0, 0)),
    ("abc", (0.1, 0.2, 0.3)),
    ("axisym_strain", (0.5, 0.3, 0.2)),
])
def test_streamline_invariants(name, seed):
    field = catalog(name)
    line = integrate_streamline(field, seed, IntegratorConfig(samples=2001))
    assert np.all(np.diff(line.t) > 0) and np.all(np.diff(line.z) > 0)
    # unit speed in arc length; chord error O(kappa^2 dz^2) needs dense samples
    dx = (line.x[2:] - line.x[:-2]) / (line.z[2:] - line.z[:-2])[:, None]
    np.testing.assert_allclose(np.linalg.norm(dx, axis=1), 1.0, atol=1e-6)
    # z against adaptive quadrature of the interpolated speed
    for k in (250, 1000, 2000):
        integral, _ = quad(
            lambda s: np.linalg.norm(field.value_fn(line.position(s))), 0.0, line.t[k], epsabs=1e-13, epsrel=1e-12
        )
        assert line.z[k] == pytest.approx(integral, rel=1e-7, abs=1e-10)


# -- arc-length map -----------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(LINEAR_MATRICES) + ["helical", "abc"])
def test_arc_length_round_trip(name):
    seed = (1.2, 0.7, 0.4) if name != "axisym_strain" else (0.3, 0.2, 1.0)
    line = integrate_streamline(catalog(name), seed)
    m = arc_length_map(line)
    t = np.linspace(0, line.t_end, 37)
    np.testing.assert_allclose(m.t_of_z(m.z_of_t(t)), t, atol=1e-9 * line.t_end)
    z_half = 0.5 * float(m.z_of_t(line.t_end))
    assert float(m.z_of_t(m.t_of_z(z_half))) == pytest.approx(z_half, abs=1e-12)
    with pytest.raises(PreconditionError):
        m.t_of_z(-1.0)


def test_arc_length_map_examples():
    m = arc_length_map(integrate_streamline(catalog("rigid_rotation"), [1, 0, 0]))
    assert m.t_of_z(0.5) == pytest.approx(0.5, abs=1e-9)
    m = arc_length_map(integrate_streamline(catalog("axisym_strain"), [0, 0, 1]))
    assert float(m.z_of_t(0.5)) == pytest.approx(E - 1, rel=1e-8)


# -- flow map ---------------------------------------------------------------------


@pytest.mark.parametrize("name", LINEAR_CATALOG)
@pytest.mark.parametrize("seed", [(1.0, 0.5, 0.2), (-0.3, 1.1, 0.7)])
def test_jacobian_matches_expm(name, seed):
    times = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0]
    A = LINEAR_MATRICES[name]
    for st in flow_map(catalog(name), seed, times):
        assert np.abs(st.J - expm(st.t * A)).max() <= 1e-7
        np.testing.assert_allclose(st.x, expm(st.t * A) @ np.array(seed), atol=1e-7)


def test_jacobian_examples():
    J = flow_map_jacobian(catalog("axisym_strain"), [1, 0, 0], 1.0)
    np.testing.assert_allclose(J, np.diag([1 / E, 1 / E, E**2]), rtol=1e-8, atol=1e-12)
    J = flow_map_jacobian(catalog("rigid_rotation"), [1, 0, 0], math.pi / 2)
    np.testing.assert_allclose(J, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-8)
    assert np.array_equal(flow_map(catalog("abc"), [0.1, 0.2, 0.3], [0.0])[0].J, np.eye(3))


@pytest.mark.parametrize("name", ["abc", "helical", "rigid_rotation", "planar_strain_paper", "axisym_strain"])
def test_liouville(name):
    for st in flow_map(catalog(name), [0.1, 0.2, 0.3], [0.5, 1.0, 1.5, 2.0]):
        assert abs(np.linalg.det(st.J) - 1.0) <= 1e-6


def test_compressible_determinant():
    # div u = 1 everywhere, so det J = e^t
    f = parse_field("x, 0, 0")
    assert np.linalg.det(flow_map_jacobian(f, [1, 0, 0], 1.3)) == pytest.approx(math.exp(1.3), rel=1e-8)


def test_cauchy_examples():
    f = catalog("axisym_strain")
    np.testing.assert_allclose(cauchy_vorticity(f, [1, 0, 0], [0, 1, 0], 1.0), [0, 1 / E, 0], atol=1e-9)
    np.testing.assert_allclose(cauchy_vorticity(f, [0, 0, 1], [0, 0, 1], 1.0), [0, 0, E**2], rtol=1e-8)
    w0 = np.array([0.3, -0.2, 0.9])
    assert np.array_equal(cauchy_vorticity(catalog("abc"), [0.1, 0.2, 0.3], w0, 0.0), w0)


# -- disk probe --------------------------------------------------------------------


def test_disk_basis_orthonormal():
    for name, seed in [("abc", (0.1, 0.2, 0.3)), ("axisym_strain", (0, 0, 1)), ("helical", (1, 0, 0))]:
        n0, b0, tau = disk_basis(catalog(name), seed)
        frame = np.array([tau, n0, b0])
        np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-14)
    n0, b0, _ = disk_basis(catalog("axisym_strain"), [0, 0, 1])
    np.testing.assert_allclose(n0, [1, 0, 0])
    np.testing.assert_allclose(b0, [0, 1, 0])


def test_disk_probe_axis_is_perpendicular():
    r = disk_probe(catalog("axisym_strain"), [0, 0, 1])
    assert r.defect_n[0] == 0.0 and r.defect_b[0] == 0.0
    assert r.max_defect() <= 1e-12
    assert np.all(np.diff(r.axis_stretch) > 0)
    assert r.axis_stretch[-1] == pytest.approx(E**2, rel=1e-8)


def test_disk_probe_rotation_is_perpendicular():
    r = disk_probe(catalog("rigid_rotation"), [1, 0, 0], IntegratorConfig(t_span=2.0))
    assert r.max_defect() <= 1e-7
    np.testing.assert_allclose(r.axis_stretch, 1.0, atol=1e-8)


def planar_defect_oracle(seed, n0, t):
    A = np.diag([-1.0, 1.0, 0.0])
    eta = expm(t * A) @ seed
    v = expm(t * A) @ n0
    tau = A @ eta / np.linalg.norm(A @ eta)
    return v @ tau / np.linalg.norm(v)


def test_disk_probe_planar_strain_oracle():
    seed = np.array([1.0, 2.0, 0.0])
    times = [0.0, 0.25, 0.5, 1.0, 2.0]
    r = disk_probe(catalog("planar_strain_stated"), seed, times=times)
    n0 = frenet_sample(catalog("planar_strain_stated"), seed).normal
    for t, d in zip(r.t, r.defect_n):
        assert d == pytest.approx(planar_defect_oracle(seed, n0, t), abs=1e-7)
    assert abs(r.defect_n[3]) > 1e-2
    # b0 = e3 is an eigenvector orthogonal to the plane of motion
    assert np.abs(r.defect_b).max() <= 1e-12


def test_disk_probe_ring_agrees_to_first_order():
    seed = [1.0, 2.0, 0.0]
    field = catalog("planar_strain_stated")
    errs = []
    for radius in (1e-2, 1e-3):
        r = disk_probe(field, seed, times=[0.5, 1.0], ring_radius=radius)
        errs.append(np.abs(r.ring_defect_n - r.defect_n).max())
        assert errs[-1] <= 10 * radius
    assert errs[1] <= errs[0]
    with pytest.raises(PreconditionError):
        disk_probe(field, seed, times=[1.0], ring_radius=0.0)


@pytest.mark.parametrize("name,seed", [("abc", (0.1, 0.2, 0.3)), ("helical", (1.0, 0.5, 0.0))])
def test_disk_probe_defects_bounded(name, seed):
    r = disk_probe(catalog(name), seed, IntegratorConfig(t_span=2.0, samples=21))
    assert r.defect_n[0] == 0.0 and r.defect_b[0] == 0.0
    assert np.all(np.abs(r.defect_n) <= 1) and np.all(np.abs(r.defect_b) <= 1)


def test_axis_stretch_increases_where_stretching():
    r = disk_probe(catalog("planar_strain_stated"), [1, 2, 0], IntegratorConfig(samples=51))
    line = integrate_streamline(catalog("planar_strain_stated"), [1, 2, 0], IntegratorConfig(samples=51))
    alphas = [frenet_sample(catalog("planar_strain_stated"), p).alpha for p in line.x]
    assert all(a > 0 for a in alphas)
    assert np.all(np.diff(r.axis_stretch) > 0)


# -- cross-module: F(z) differenced along the streamline ------------------------------


@pytest.mark.parametrize("name,seed", [
    ("planar_strain_paper", (2.0, 1.0, 0.0)),
    ("planar_strain_stated", (1.0, 2.0, 0.0)),
    ("helical", (1.0, 0.3, 0.0)),
    ("abc", (0.1, 0.2, 0.3)),
])
def test_streamline_F_derivative_matches_S(name, seed):
    field = catalog(name)
    line = integrate_streamline(field, seed, IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, t_span=0.5))
    m = arc_length_map(line)
    h = 1e-2
    F = lambda z: frenet_sample(field, line.position(m.t_of_z(z))).F  # noqa: E731
    z_end = float(m.z_of_t(line.t_end))
    for z in np.linspace(3 * h, z_end - 3 * h, 5):
        dF = (F(z - 2 * h) - 8 * F(z - h) + 8 * F(z + h) - F(z + 2 * h)) / (12 * h)
        S = frenet_sample(field, line.position(m.t_of_z(z))).S
        assert dF == pytest.approx(S, abs=1e-5)
