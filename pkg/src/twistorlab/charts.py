"""Coordinate charts on open subsets of R^4 carrying a Riemannian metric.

A chart stores the ten independent metric components as expression trees
together with a box or ball domain.  The orientation is always the
coordinate orientation ``dx1^dx2^dx3^dx4``; the opposite orientation is
modelled by a derived chart with ``x3`` and ``x4`` exchanged.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import DomainError, MetricError, ParseError
from .jets import Jet

DIM = 4
SAMPLE_MARGIN = 1e-3


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lo, hi]^4`` or origin-centred ball of ``radius``."""

    kind: str
    lo: float = -1.0
    hi: float = 1.0
    radius: float = 1.0

    @classmethod
    def box(cls, lo, hi):
        if not lo < hi:
            raise ValueError("empty box")
        return cls("box", lo=float(lo), hi=float(hi))

    @classmethod
    def ball(cls, radius):
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        return cls("ball", radius=float(radius))

    def contains(self, p, margin=0.0):
        p = np.asarray(p, dtype=float)
        if p.shape != (DIM,) or not np.all(np.isfinite(p)):
            return False
        if self.kind == "box":
            return bool(np.all(p > self.lo + margin) and np.all(p < self.hi - margin))
        return bool(np.linalg.norm(p) < self.radius - margin)

    def sample(self, rng, n, margin=SAMPLE_MARGIN):
        """Draw ``n`` points uniformly, rejecting those within ``margin`` of the boundary."""
        out = []
        while len(out) < n:
            if self.kind == "box":
                p = rng.uniform(self.lo, self.hi, size=DIM)
            else:
                p = rng.uniform(-self.radius, self.radius, size=DIM)
            if self.contains(p, margin):
                out.append(p)
        return np.array(out).reshape(n, DIM)

    def describe(self):
        if self.kind == "box":
            return f"box({_num(self.lo)},{_num(self.hi)})"
        return f"ball({_num(self.radius)})"


def _num(x):
    return str(int(x)) if float(x).is_integer() else repr(x)


def _pairs():
    return [(a, b) for a in range(DIM) for b in range(a, DIM)]


@dataclass(frozen=True)
class MetricChart:
    name: str
    components: tuple  # 4x4 nested tuples of expressions, symmetric
    domain: Domain = field(default_factory=lambda: Domain.box(-1.0, 1.0))

    def component(self, a, b):
        return self.components[a][b]

    def metric(self, p):
        """Evaluate g_ab at ``p`` as a 4x4 array."""
        p = [float(v) for v in p]
        g = np.zeros((DIM, DIM))
        for a, b in _pairs():
            g[a, b] = g[b, a] = ex.evaluate(self.components[a][b], p)
        return g

    def source(self):
        """Metric source text accepted by :func:`parse_metric`."""
        lines = [f"# {self.name}", f"domain = {self.domain.describe()}"]
        for a, b in _pairs():
            node = self.components[a][b]
            if not ex.is_zero(node) or a == b:
                lines.append(f"g{a + 1}{b + 1} = {ex.unparse(node)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MetricJet:
    """Metric with exact first and second partials at ``point``.

    ``dg[c, a, b] = d_c g_ab`` and ``ddg[d, c, a, b] = d_d d_c g_ab``.
    ``ddg`` is None for first-order jets.
    """

    point: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray | None = None


def _build_chart(name, entries, domain):
    comps = [[ex.ZERO] * DIM for _ in range(DIM)]
    for (a, b), node in entries.items():
        comps[a][b] = comps[b][a] = node
    return MetricChart(name, tuple(tuple(row) for row in comps), domain)


# -- parsing -----------------------------------------------------------

_ASSIGN_RE = re.compile(r"^\s*g\s*([1-4])\s*([1-4])\s*=(.*)$")
_DOMAIN_RE = re.compile(
    r"^\s*domain\s*=\s*(?:box\(\s*([^,]+),([^)]+)\)|ball\(\s*([^)]+)\))\s*$"
)


def _statements(text):
    """Yield (statement, absolute offset) pairs split on newlines and ';'."""
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.split("#", 1)[0]
        start = 0
        for piece in body.split(";"):
            if piece.strip():
                yield piece.rstrip("\r\n"), offset + start
            start += len(piece) + 1
        offset += len(line)


def parse_metric(text, name="parsed", domain=None, probe_points=10, seed=0):
    """Parse metric source into a :class:`MetricChart`.

    One ``gij = expr`` per statement; statements are separated by newlines
    or ``;`` and ``#`` starts a comment.  Off-diagonal components default
    to zero.  An optional ``domain = box(lo,hi)`` or ``domain = ball(r)``
    statement sets the domain (default ``box(-1,1)``).  The result is
    probed at ``probe_points`` random domain points and rejected unless the
    metric is positive-definite at every probe.
    """
    entries = {}
    parsed_domain = None
    for stmt, offset in _statements(text):
        dm = _DOMAIN_RE.match(stmt)
        if dm:
            try:
                if dm.group(3) is not None:
                    parsed_domain = Domain.ball(float(dm.group(3)))
                else:
                    parsed_domain = Domain.box(float(dm.group(1)), float(dm.group(2)))
            except ValueError as err:
                raise ParseError(f"bad domain: {err}", offset, text) from None
            continue
        m = _ASSIGN_RE.match(stmt)
        if m is None:
            raise ParseError("expected 'gij = expression'", offset, text)
        a, b = int(m.group(1)) - 1, int(m.group(2)) - 1
        rhs_offset = offset + m.start(3)
        try:
            node = ex.parse_expression(m.group(3))
        except ParseError as err:
            pos = None if err.position is None else rhs_offset + err.position
            raise ParseError(str(err).split(" (at position")[0], pos, text) from None
        key = (min(a, b), max(a, b))
        if key in entries and entries[key] != node:
            raise MetricError(
                f"non-symmetric assignment: g{a + 1}{b + 1} conflicts with "
                f"g{b + 1}{a + 1}"
            )
        entries[key] = node
    for a in range(DIM):
        if (a, a) not in entries:
            raise MetricError(f"diagonal component g{a + 1}{a + 1} missing")
    chart = _build_chart(name, entries, domain or parsed_domain or Domain.box(-1.0, 1.0))
    if probe_points:
        check_positive_definite(chart, probe_points, seed)
    return chart


def check_positive_definite(chart, n_points=10, seed=0):
    rng = np.random.default_rng(seed)
    for p in chart.domain.sample(rng, n_points):
        try:
            g = chart.metric(p)
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise DomainError(f"metric evaluation failed at {p.tolist()}: {err}") from None
        if not np.all(np.isfinite(g)):
            raise DomainError(f"metric not finite at {p.tolist()}")
        eig = np.linalg.eigvalsh(g)
        if eig.min() <= 0.0:
            raise MetricError(
                f"metric not positive-definite at probe point {p.tolist()} "
                f"(min eigenvalue {eig.min():.3g})"
            )


# -- builtin corpus ----------------------------------------------------

_R2 = "(1 + x1^2 + x2^2 + x3^2 + x4^2)"

_BUILTIN_SOURCES = {
    "flat": (
        "g11 = 1; g22 = 1; g33 = 1; g44 = 1",
        Domain.box(-1.0, 1.0),
    ),
    "s4_round": (
        "; ".join(f"g{i}{i} = 4/{_R2}^2" for i in range(1, 5)),
        Domain.ball(2.0),
    ),
    # Real form of the Kahler metric h = dd-bar log(1+|z|^2) in the affine
    # chart z1 = x1 + i x2, z2 = x3 + i x4: g(dx_j, dx_k) = g(dy_j, dy_k) =
    # Re h_{jk}, g(dx_j, dy_k) = Im h_{jk}.
    "cp2_fubini_study": (
        "\n".join(
            [
                f"g11 = 1/{_R2} - (x1^2 + x2^2)/{_R2}^2",
                f"g22 = 1/{_R2} - (x1^2 + x2^2)/{_R2}^2",
                f"g33 = 1/{_R2} - (x3^2 + x4^2)/{_R2}^2",
                f"g44 = 1/{_R2} - (x3^2 + x4^2)/{_R2}^2",
                f"g13 = -(x1*x3 + x2*x4)/{_R2}^2",
                f"g24 = -(x1*x3 + x2*x4)/{_R2}^2",
                f"g14 = -(x1*x4 - x2*x3)/{_R2}^2",
                f"g23 = (x1*x4 - x2*x3)/{_R2}^2",
            ]
        ),
        Domain.ball(2.0),
    ),
    "s2xs2": (
        "\n".join(
            [
                "g11 = 4/(1 + x1^2 + x2^2)^2",
                "g22 = 4/(1 + x1^2 + x2^2)^2",
                "g33 = 4/(1 + x3^2 + x4^2)^2",
                "g44 = 4/(1 + x3^2 + x4^2)^2",
            ]
        ),
        Domain.box(-1.5, 1.5),
    ),
}

BUILTIN_NAMES = tuple(_BUILTIN_SOURCES)


def builtin_chart(name, reversed=False):
    """Return one of the corpus charts, optionally orientation-reversed.

    Names: ``flat``, ``s4_round`` (g = 4 delta / (1+|x|^2)^2),
    ``cp2_fubini_study`` and ``s2xs2`` (two unit round spheres in
    stereographic coordinates).  A trailing ``_reversed`` in the name is
    equivalent to ``reversed=True``.
    """
    if name.endswith("_reversed"):
        name, reversed = name[: -len("_reversed")], True
    try:
        source, domain = _BUILTIN_SOURCES[name]
    except KeyError:
        raise KeyError(
            f"unknown chart {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
        ) from None
    chart = parse_metric(source, name=name, domain=domain, probe_points=0)
    return reverse_orientation(chart) if reversed else chart


def reverse_orientation(chart):
    """Derived chart with coordinates x3 and x4 exchanged.

    The new chart is isometric to ``chart`` but its coordinate orientation
    is the opposite one, so self-dual and anti-self-dual roles swap.
    """
    perm = [0, 1, 3, 2]
    swap = {2: ex.Var(3), 3: ex.Var(2)}
    comps = [
        [ex.substitute(chart.components[perm[a]][perm[b]], swap) for b in range(DIM)]
        for a in range(DIM)
    ]
    name = chart.name[: -len("_reversed")] if chart.name.endswith("_reversed") else (
        chart.name + "_reversed"
    )
    return MetricChart(name, tuple(tuple(r) for r in comps), chart.domain)


# -- jets ---------------------------------------------------------------

def metric_jet(chart, p, order=2):
    """Exact metric jet at ``p`` by forward-mode differentiation."""
    p = np.asarray(p, dtype=float)
    if not chart.domain.contains(p):
        raise DomainError(f"point {p.tolist()} outside domain {chart.domain.describe()}")
    xs = [Jet.variable(p[i], i, DIM, order) for i in range(DIM)]
    g = np.zeros((DIM, DIM))
    dg = np.zeros((DIM, DIM, DIM))
    ddg = np.zeros((DIM, DIM, DIM, DIM)) if order >= 2 else None
    for a, b in _pairs():
        node = chart.components[a][b]
        if ex.is_zero(node):
            continue
        try:
            v = ex.evaluate(node, xs)
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise DomainError(f"evaluation of g{a + 1}{b + 1} failed at {p.tolist()}: {err}") from None
        if not isinstance(v, Jet):
            g[a, b] = g[b, a] = v
            continue
        if not (math.isfinite(v.val) and np.all(np.isfinite(v.grad))):
            raise DomainError(f"g{a + 1}{b + 1} not finite at {p.tolist()}")
        g[a, b] = g[b, a] = v.val
        dg[:, a, b] = dg[:, b, a] = v.grad
        if ddg is not None:
            h = v.hess if v.hess is not None else np.zeros((DIM, DIM))
            if not np.all(np.isfinite(h)):
                raise DomainError(f"second derivative of g{a + 1}{b + 1} not finite")
            ddg[:, :, a, b] = ddg[:, :, b, a] = h
    return MetricJet(p, g, dg, ddg)


def conformal_rescale(chart, f, name=None):
    """Chart with metric ``exp(2 f) g``; ``f`` is an expression or source string."""
    if isinstance(f, str):
        f = ex.parse_expression(f)
    factor = ex.Call("exp", ex.BinOp("*", ex.Const(2.0), f))
    comps = [
        [
            node if ex.is_zero(node) else ex.BinOp("*", factor, node)
            for node in row
        ]
        for row in chart.components
    ]
    return MetricChart(
        name or f"{chart.name}_conformal", tuple(tuple(r) for r in comps), chart.domain
    )


def resolve_chart(source):
    """Builtin name (optionally with ``_reversed``) or path to a metric file."""
    if isinstance(source, MetricChart):
        return source
    base = source[: -len("_reversed")] if source.endswith("_reversed") else source
    if base in _BUILTIN_SOURCES:
        return builtin_chart(source)
    with open(source, encoding="utf-8") as fh:
        return parse_metric(fh.read(), name=source)
