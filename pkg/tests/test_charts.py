import numpy as np
import pytest

from twistorlab.charts import (
    Domain,
    builtin_chart,
    conformal_rescale,
    metric_jet,
    parse_metric,
    resolve_chart,
    reverse_orientation,
)
from twistorlab.errors import DomainError, MetricError, ParseError


def test_flat_metric_is_identity(charts):
    assert np.array_equal(charts["flat"].metric([0.1, 0.2, 0.3, 0.4]), np.eye(4))


def test_s4_metric_at_origin(charts):
    assert np.allclose(charts["s4_round"].metric(np.zeros(4)), 4 * np.eye(4))


def test_cp2_metric_at_origin_and_symmetry(charts):
    g = charts["cp2_fubini_study"].metric(np.zeros(4))
    assert np.allclose(g, np.eye(4))
    p = np.array([0.3, -0.5, 0.7, 0.2])
    g = charts["cp2_fubini_study"].metric(p)
    assert np.allclose(g, g.T)
    assert np.linalg.eigvalsh(g).min() > 0


def test_cp2_metric_is_hermitian_for_standard_complex_structure(charts):
    # J dx1 = dx2, J dx3 = dx4 on tangent vectors: J e1 = e2, J e3 = e4
    J = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
    g = charts["cp2_fubini_study"].metric([0.4, 0.1, -0.3, 0.6])
    assert np.allclose(J.T @ g @ J, g, atol=1e-14)


def test_parse_metric_file_format():
    text = """
    # diagonal conformally flat metric
    domain = ball(1.5)
    g11 = exp(2*x1); g22 = exp(2*x1)
    g33 = exp(2*x1)
    g44 = exp(2*x1)
    g12 = 0.1; g21 = 0.1
    """
    chart = parse_metric(text, name="custom")
    assert chart.domain == Domain.ball(1.5)
    g = chart.metric([0, 0, 0, 0])
    assert g[0, 1] == g[1, 0] == pytest.approx(0.1)


def test_parse_metric_roundtrips_through_source(charts):
    for chart in charts.values():
        again = parse_metric(chart.source(), name=chart.name, probe_points=0)
        assert again.components == chart.components
        assert again.domain == chart.domain


def test_conflicting_offdiagonal_rejected():
    with pytest.raises(MetricError, match="non-symmetric"):
        parse_metric("g11=1;g22=1;g33=1;g44=1;g12=0.1;g21=0.2")


def test_missing_diagonal_rejected():
    with pytest.raises(MetricError, match="g44"):
        parse_metric("g11=1;g22=1;g33=1")


def test_indefinite_metric_rejected():
    with pytest.raises(MetricError, match="positive-definite"):
        parse_metric("g11=1;g22=1;g33=1;g44=1;g12=2")


def test_parse_error_position_is_absolute():
    text = "g11 = 1\ng22 = 1 +\n"
    with pytest.raises(ParseError) as info:
        parse_metric(text)
    assert info.value.position == len("g11 = 1\ng22 = 1 +")


def test_garbage_statement():
    with pytest.raises(ParseError):
        parse_metric("g11 = 1\nhello")


def test_reverse_orientation_is_isometry(charts):
    chart = charts["cp2_fubini_study"]
    rev = reverse_orientation(chart)
    p = np.array([0.2, -0.1, 0.5, 0.3])
    P = np.eye(4)[[0, 1, 3, 2]]
    assert np.allclose(rev.metric(P @ p), P @ chart.metric(p) @ P.T)
    assert rev.name == "cp2_fubini_study_reversed"
    assert reverse_orientation(rev).components == chart.components


def test_metric_jet_matches_finite_differences(charts):
    chart = charts["cp2_fubini_study"]
    p = np.array([0.3, 0.2, -0.4, 0.1])
    jet = metric_jet(chart, p)
    h = 1e-5
    for c in range(4):
        e = np.zeros(4)
        e[c] = h
        fd = (chart.metric(p + e) - chart.metric(p - e)) / (2 * h)
        assert np.allclose(jet.dg[c], fd, atol=1e-9)
        fd2 = (metric_jet(chart, p + e).dg - metric_jet(chart, p - e).dg) / (2 * h)
        assert np.allclose(jet.ddg[c], fd2, atol=1e-8)


def test_metric_jet_outside_domain(charts):
    with pytest.raises(DomainError):
        metric_jet(charts["s4_round"], [2.5, 0, 0, 0])


def test_domain_sampling_respects_margin(rng):
    d = Domain.box(-1, 1)
    pts = d.sample(rng, 100, margin=0.1)
    assert np.all(np.abs(pts) < 0.9)
    b = Domain.ball(2)
    assert np.all(np.linalg.norm(b.sample(rng, 100), axis=1) < 2)


def test_conformal_rescale_scales_metric(charts):
    scaled = conformal_rescale(charts["s4_round"], "x1 - 0.5*x3^2")
    p = np.array([0.3, 0.1, 0.4, -0.2])
    f = p[0] - 0.5 * p[2] ** 2
    assert np.allclose(scaled.metric(p), np.exp(2 * f) * charts["s4_round"].metric(p))


def test_resolve_chart_name_and_file(tmp_path):
    assert resolve_chart("s2xs2").name == "s2xs2"
    assert resolve_chart("s2xs2_reversed").name == "s2xs2_reversed"
    path = tmp_path / "m.txt"
    path.write_text("g11=1;g22=1;g33=2;g44=2\n")
    assert np.allclose(resolve_chart(str(path)).metric(np.zeros(4)), np.diag([1, 1, 2, 2]))


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin_chart("torus")
