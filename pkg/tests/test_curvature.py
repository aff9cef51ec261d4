import numpy as np
import pytest

from twistorlab.charts import conformal_rescale, metric_jet
from twistorlab.curvature import (
    christoffel,
    curvature_at,
    kulkarni_nomizu,
    weyl_split,
)
from twistorlab.errors import FrameError
from twistorlab.sd_algebra import SDFrame, make_frame

P = np.array([0.3, -0.2, 0.4, 0.1])


def _fd_christoffel(chart, p, h=1e-5):
    def g_at(q):
        return chart.metric(q)

    g = g_at(p)
    dg = np.zeros((4, 4, 4))
    for c in range(4):
        e = np.zeros(4)
        e[c] = h
        dg[c] = (g_at(p + e) - g_at(p - e)) / (2 * h)
    ginv = np.linalg.inv(g)
    low = 0.5 * (np.einsum("bcd->dbc", dg) + np.einsum("cbd->dbc", dg) - dg)
    # low[d, b, c] = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    return np.einsum("ad,dbc->abc", ginv, low)


def test_christoffel_against_finite_differences(charts):
    for name in ("s4_round", "cp2_fubini_study", "s2xs2"):
        chart = charts[name]
        gamma = christoffel(metric_jet(chart, P)).gamma
        assert np.allclose(gamma, _fd_christoffel(chart, P), atol=1e-8)


def test_flat_is_flat(charts):
    c = curvature_at(charts["flat"], P)
    assert np.max(np.abs(c.riemann)) == 0
    assert c.scalar == 0


def test_s4_constant_curvature(charts):
    c = curvature_at(charts["s4_round"], P)
    g = c.g
    model = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    assert np.allclose(c.riemann_low, model, atol=1e-10)
    assert c.scalar == pytest.approx(12.0, abs=1e-10)
    assert np.max(np.abs(c.weyl_low)) < 1e-10


def test_riemann_symmetries(charts):
    R = curvature_at(charts["cp2_fubini_study"], P).riemann_low
    assert np.allclose(R, -np.transpose(R, (1, 0, 2, 3)), atol=1e-12)
    assert np.allclose(R, -np.transpose(R, (0, 1, 3, 2)), atol=1e-12)
    assert np.allclose(R, np.transpose(R, (2, 3, 0, 1)), atol=1e-12)
    bianchi = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
    assert np.max(np.abs(bianchi)) < 1e-12


def test_weyl_is_traceless(charts):
    c = curvature_at(charts["s2xs2"], P)
    ginv = np.linalg.inv(c.g)
    assert np.max(np.abs(np.einsum("ac,abcd->bd", ginv, c.weyl_low))) < 1e-12


def test_cp2_einstein_and_self_dual_weyl(charts):
    c = curvature_at(charts["cp2_fubini_study"], P)
    assert c.scalar == pytest.approx(24.0, abs=1e-10)
    assert c.einstein_residual() < 1e-12
    split = weyl_split(c, make_frame(c.g))
    eig = np.sort(np.linalg.eigvalsh(split.w_plus))
    assert np.allclose(eig, [-4, -4, 8], atol=1e-10)
    assert np.max(np.abs(split.w_minus)) < 1e-10
    assert np.max(np.abs(split.cross)) < 1e-10


def test_reversed_cp2_swaps_weyl_halves(charts):
    c = curvature_at(charts["cp2_fubini_study_reversed"], P)
    wp, wm = weyl_split(c, make_frame(c.g)).norms()
    assert wp < 1e-10
    assert wm == pytest.approx(np.sqrt(96), rel=1e-10)


def test_s2xs2_weyl_halves(charts):
    c = curvature_at(charts["s2xs2"], P)
    assert c.scalar == pytest.approx(4.0, abs=1e-10)
    split = weyl_split(c, make_frame(c.g))
    # product of unit spheres: W+ and W- both have spectrum (2/3)(1, -1/2, -1/2) up to sign
    for block in (split.w_plus, split.w_minus):
        eig = np.sort(np.linalg.eigvalsh(block))
        assert np.allclose(eig, [-2 / 3, -2 / 3, 4 / 3], atol=1e-10)
    assert np.trace(split.w_plus) == pytest.approx(0, abs=1e-12)


def test_kulkarni_nomizu_of_metric():
    g = np.diag([1.0, 2.0, 3.0, 4.0])
    gg = kulkarni_nomizu(g, g)
    model = 2 * (np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g))
    assert np.allclose(gg, model)


def test_weyl_split_rejects_bad_frame(charts):
    c = curvature_at(charts["s4_round"], P)
    with pytest.raises(FrameError):
        weyl_split(c, SDFrame(np.eye(4)))


def test_mixed_weyl_conformally_invariant(charts):
    chart = charts["cp2_fubini_study"]
    scaled = conformal_rescale(chart, "0.3*x1*x2 - 0.2*x3 + 0.1*x4^2")
    a = curvature_at(chart, P).weyl_mixed()
    b = curvature_at(scaled, P).weyl_mixed()
    assert np.max(np.abs(a - b)) < 1e-10


def test_curvature_frozen_values(charts):
    c = curvature_at(charts["s2xs2"], np.array([0.5, 0.0, 0.0, 0.0]))
    # g11 = 4/(1.25)^2 = 2.56; sectional curvature 1 in the first factor
    assert c.g[0, 0] == pytest.approx(2.56)
    assert c.riemann_low[0, 1, 0, 1] == pytest.approx(2.56 * 2.56)
    assert c.ricci[0, 0] == pytest.approx(2.56)
