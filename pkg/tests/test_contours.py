"""Contour construction and the adaptive trapezoid engine."""

import numpy as np
import pytest

import qfine as qf
from qfine import quaternion as qt
from qfine.contours import Circle, enclose_spectrum, integrate
from qfine.errors import CannotSeparate, NoConvergence
from qfine.functions import kernel_SL
from qfine.linalg import SSpectrum


def scalar_kernel(t):
    """(s - t)^-1 for a real pole t, batched."""
    def k(s):
        return qt.qinv(s - t * np.broadcast_to(qt.ONE, s.shape))
    return k


def test_enclose_single_sphere_two_circles():
    c = enclose_spectrum(SSpectrum([(1.0, 2.0)]), 0.5)
    assert len(c.circles) == 2
    centers = sorted((cc.u, cc.v) for cc in c.circles)
    assert centers == [(1.0, -2.0), (1.0, 2.0)]
    assert all(cc.orient == 1 for cc in c.circles)
    assert all(abs(cc.r - 0.5 * 3.0) < 1e-15 for cc in c.circles)


def test_enclose_real_point_single_circle():
    c = enclose_spectrum(SSpectrum([(0.0, 0.0)]), 1.0)
    assert len(c.circles) == 1
    assert (c.circles[0].u, c.circles[0].v, c.circles[0].r) == (0.0, 0.0, 1.0)


def test_enclose_merges_crossing_conjugate_circles():
    # small v with a larger margin circle crosses the real axis and merges
    c = enclose_spectrum(SSpectrum([(0.0, 0.1)]), 0.5)
    assert len(c.circles) == 1
    assert abs(c.circles[0].v) < 1e-12


def test_enclose_avoid_point_violation():
    with pytest.raises(CannotSeparate):
        enclose_spectrum(SSpectrum([(0.0, 0.0)]), 1.0, avoid=[1.1])


def test_enclose_unbounded_punctures():
    spec = SSpectrum([(0.0, 0.0)])
    c = enclose_spectrum(spec, 0.3, avoid=[3.0], unbounded=True)
    assert c.unbounded
    assert len(c.circles) == 1
    cc = c.circles[0]
    assert (cc.u, cc.v, cc.r, cc.orient) == (3.0, 0.0, 0.3, -1)


def test_enclose_unbounded_separation_check():
    with pytest.raises(CannotSeparate):
        enclose_spectrum(SSpectrum([(0.0, 0.0)]), 0.3, avoid=[0.5], unbounded=True)


def test_cauchy_integral_residue():
    # (1/2pi) \oint (s-t)^-1 ds_J = 1 around t
    contour = enclose_spectrum(SSpectrum([(2.0, 0.0)]), 0.7)
    res = integrate(scalar_kernel(2.0), None, contour)
    assert np.linalg.norm(res.value - qt.ONE) < 1e-12


def test_cauchy_derivative_residue():
    # (1/2pi) \oint (s-t)^-2 ds_J s = 1
    t = 1.5

    def k(s):
        d = s - t * np.broadcast_to(qt.ONE, s.shape)
        return qt.qinv(qt.qmul(d, d))

    f = qf.poly([0.0, 1.0])
    contour = enclose_spectrum(SSpectrum([(t, 0.0)]), 0.5)
    res = integrate(k, f, contour)
    assert np.linalg.norm(res.value - qt.ONE) < 1e-11


def test_analytic_integrand_vanishes():
    # no poles inside: Cauchy theorem gives zero
    contour = enclose_spectrum(SSpectrum([(0.0, 0.0)]), 0.5)
    res = integrate(scalar_kernel(4.0), qf.poly([1.0, 1.0]), contour)
    assert np.linalg.norm(res.value) < 1e-12


def test_scalar_cauchy_formula_tight():
    # reproduces f(q) at the 1e-12 level (acceptance: quadrature health)
    f = qf.rational([2.0, 1.0], [6.0])
    q = qt.quaternion(0.4, 0.8, -0.3, 0.2)
    u, v, _ = qt.slice_decompose(q)
    contour = enclose_spectrum(SSpectrum([(u, v)]), 0.5)
    res = integrate(lambda s: kernel_SL(s, q), f, contour, rtol=1e-12)
    assert np.linalg.norm(res.value - f(q)) < 1e-12


def test_geometric_convergence_of_node_doubling():
    t = 0.0
    contour = qf.SliceContour(qt.E1.copy(), [Circle(0.0, 0.0, 1.0, 1)], False)
    res = integrate(
        scalar_kernel(t), qf.rational([1.0], [1.8]), contour,
        nodes_start=8, rtol=1e-10,
    )
    gaps = res.gaps[0]
    # every doubling above the noise floor gains at least a factor 10
    for a, b in zip(gaps, gaps[1:]):
        if a > 1e-13:
            assert b < a / 10.0


def test_j_independence_scalar():
    rng = np.random.default_rng(0)
    q = qt.quaternion(0.2, 0.4, -0.6, 0.1)
    u, v, _ = qt.slice_decompose(q)
    f = qf.rational([1.0, 0.3], [5.0])
    vals = []
    for J in (qt.E1, qt.random_unit_imaginary(rng)):
        contour = enclose_spectrum(SSpectrum([(u, v)]), 0.4, J=J)
        vals.append(integrate(lambda s: kernel_SL(s, q), f, contour, rtol=1e-11).value)
    assert np.linalg.norm(vals[0] - vals[1]) < 1e-9


def test_no_convergence_raises_with_iterates():
    # pole just outside the contour: convergence too slow for the node cap
    contour = enclose_spectrum(SSpectrum([(0.0, 0.0)]), 0.5)
    f = qf.rational([1.0], [0.55])
    with pytest.raises(NoConvergence) as exc:
        integrate(scalar_kernel(0.0), f, contour, rtol=1e-10, nodes_cap=64)
    assert exc.value.nodes == 64
    assert exc.value.gap > 0
    assert exc.value.last is not None and exc.value.prev is not None


def test_contour_json_roundtrip():
    c = enclose_spectrum(SSpectrum([(1.0, 2.0)]), 0.5, J=qt.E2)
    d = c.to_json_dict()
    assert d["circles"][0]["orient"] == 1
    back = qf.SliceContour.from_json_dict(d)
    assert back.unbounded == c.unbounded
    assert len(back.circles) == len(c.circles)
    assert np.allclose(back.J, c.J)


def test_unbounded_alpha_puncture_contributes_nothing():
    # the ball removed around a regular point changes nothing (Cauchy theorem)
    spec = SSpectrum([(0.0, 0.0)])
    f = qf.rational([1.0], [3.0])
    k = scalar_kernel(0.0)
    with_alpha = enclose_spectrum(spec, 0.2, avoid=[3.0, -2.0], unbounded=True)
    only_pole = enclose_spectrum(spec, 0.2, avoid=[3.0], unbounded=True)
    va = integrate(k, f, with_alpha).value
    vb = integrate(k, f, only_pole).value
    assert np.linalg.norm(va - vb) < 1e-12


def test_dense_spectrum_merging_keeps_axial_symmetry():
    rng = np.random.default_rng(5)
    for _ in range(20):
        spheres = [
            (float(rng.uniform(-2, 2)), float(abs(rng.uniform(0, 1.5))))
            for _ in range(6)
        ]
        c = enclose_spectrum(SSpectrum(sorted(spheres)), 0.45)
        ups = sorted((cc.u, cc.v, cc.r) for cc in c.circles if cc.v > 1e-9)
        downs = sorted((cc.u, -cc.v, cc.r) for cc in c.circles if cc.v < -1e-9)
        assert ups == pytest.approx(downs)


def test_merge_stress_symmetry_coverage_disjointness():
    rng = np.random.default_rng(99)
    for trial in range(100):
        spheres = sorted(
            (float(rng.uniform(-2, 2)), float(abs(rng.uniform(0, 1.5))))
            for _ in range(rng.integers(1, 8))
        )
        margin = float(rng.uniform(0.1, 0.8))
        c = enclose_spectrum(SSpectrum(spheres), margin)
        ups = sorted(
            (round(cc.u, 9), round(cc.v, 9), round(cc.r, 9))
            for cc in c.circles if cc.v > 1e-9
        )
        downs = sorted(
            (round(cc.u, 9), round(-cc.v, 9), round(cc.r, 9))
            for cc in c.circles if cc.v < -1e-9
        )
        assert ups == downs
        for (u, v) in spheres:
            for sv in (v, -v):
                r0 = margin * (1 + abs(v))
                assert any(
                    np.hypot(cc.u - u, cc.v - sv) + r0 <= cc.r + 1e-9
                    for cc in c.circles
                )
        for i in range(len(c.circles)):
            for j in range(i + 1, len(c.circles)):
                a, b = c.circles[i], c.circles[j]
                assert np.hypot(a.u - b.u, a.v - b.v) >= a.r + b.r - 1e-9
