"""The twistor 6-manifold of a chart and its almost-complex structure.

Coordinates on the twistor space over a chart are ``(x1..x4, s1, s2)``:
``x`` is the base point and ``s`` a stereographic coordinate of the unit
vector ``u`` in the self-dual frame ``omega1..omega3`` of the Gram-Schmidt
coframe, so the twistor point is the 2-form ``u1 omega1 + u2 omega2 +
u3 omega3`` of norm sqrt(2).  Two stereographic charts are used, labelled
by ``sigma = +1`` (regular on ``u3 >= 0``) and ``sigma = -1``::

    s = (u1, u2) / (1 + sigma u3),   u = (2 s1, 2 s2, sigma (1 - |s|^2)) / (1 + |s|^2)

The almost-complex structure is exact pointwise; only the derivatives
entering the Nijenhuis tensor are finite differences.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .charts import metric_jet
from .curvature import christoffel_from, curvature_at, weyl_split
from .errors import DomainError, FrameError
from .jets import Jet
from .sd_algebra import (
    SD_BASIS,
    SDFrame,
    form_to_acs,
    gram_schmidt_coframe,
    inner,
    make_frame,
)

UNIT_TOL = 1e-10


def stereo_from_u(u, sigma):
    u = np.asarray(u, dtype=float)
    return u[:2] / (1.0 + sigma * u[2])


def u_from_stereo(s, sigma):
    s = np.asarray(s, dtype=float)
    q = 1.0 + s @ s
    return np.array([2 * s[0], 2 * s[1], sigma * (1.0 - s @ s)]) / q


def stereo_jacobian(s, sigma):
    """du/ds as a 3x2 matrix."""
    s1, s2 = s
    q = 1.0 + s1 * s1 + s2 * s2
    return np.array(
        [
            [2 / q - 4 * s1 * s1 / q**2, -4 * s1 * s2 / q**2],
            [-4 * s1 * s2 / q**2, 2 / q - 4 * s2 * s2 / q**2],
            [-4 * sigma * s1 / q**2, -4 * sigma * s2 / q**2],
        ]
    )


def _cross_matrix(u):
    return np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])


@dataclass(frozen=True)
class TwistorPoint:
    base: np.ndarray
    fiber: np.ndarray  # unit vector u
    stereo: np.ndarray
    sigma: int

    @classmethod
    def from_fiber(cls, base, u, sigma=None):
        u = np.asarray(u, dtype=float)
        if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
            raise FrameError(f"fiber vector has norm {np.linalg.norm(u)!r}, expected 1")
        if sigma is None:
            sigma = 1 if u[2] >= 0 else -1
        return cls(np.asarray(base, dtype=float), u, stereo_from_u(u, sigma), sigma)

    @classmethod
    def from_stereo(cls, base, s, sigma):
        s = np.asarray(s, dtype=float)
        return cls(np.asarray(base, dtype=float), u_from_stereo(s, sigma), s, sigma)

    @property
    def coords(self):
        return np.concatenate([self.base, self.stereo])


@dataclass(frozen=True)
class SDConnection:
    A: np.ndarray  # A[a] is 3x3 antisymmetric; nabla_a omega_i = sum_j A[a][j, i] omega_j


@dataclass(frozen=True)
class TwistorJ:
    J: np.ndarray  # 6x6 in the (x, s) coordinate basis
    point: TwistorPoint
    horizontal: np.ndarray  # 6x4, columns are lifts of d/dx^a


@dataclass(frozen=True)
class _BaseData:
    g: np.ndarray
    frame: SDFrame
    A: np.ndarray


def _frame_with_derivative(g, dg):
    """Gram-Schmidt coframe and its coordinate derivatives dE[c, i, a]."""
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("ap,cpq,qb->cab", ginv, dg, ginv)
    ginv_jet = [[Jet(ginv[i, k], dginv[:, i, k].copy()) for k in range(4)] for i in range(4)]
    rows = gram_schmidt_coframe(ginv_jet)
    E = np.zeros((4, 4))
    dE = np.zeros((4, 4, 4))
    for i, row in enumerate(rows):
        for a, v in enumerate(row):
            if isinstance(v, Jet):
                E[i, a] = v.val
                dE[:, i, a] = v.grad
            else:
                E[i, a] = v
    return E, dE


def _connection_from_jet(g, dg):
    E, dE = _frame_with_derivative(g, dg)
    gamma = christoffel_from(g, dg)
    omegas = [E.T @ b @ E for b in SD_BASIS]
    A = np.zeros((4, 3, 3))
    for c in range(4):
        for i, b in enumerate(SD_BASIS):
            d_omega = dE[c].T @ b @ E + E.T @ b @ dE[c]
            w = omegas[i]
            cov = (
                d_omega
                - np.einsum("ea,eb->ab", gamma[:, c, :], w)
                - np.einsum("eb,ae->ab", gamma[:, c, :], w)
            )
            for j in range(3):
                A[c, j, i] = 0.5 * inner(omegas[j], cov, g)
    return SDFrame(E), A


def sd_connection(chart, p):
    """Levi-Civita connection on Lambda+ in the Gram-Schmidt self-dual frame."""
    jet = metric_jet(chart, p, order=1)
    _, A = _connection_from_jet(jet.g, jet.dg)
    return SDConnection(A)


class TwistorField:
    """The almost-complex structure as a field on one twistor coordinate patch."""

    def __init__(self, chart, sigma):
        self.chart = chart
        self.sigma = sigma
        self._cache = {}

    def base_data(self, x):
        key = tuple(float(v) for v in x)
        data = self._cache.get(key)
        if data is None:
            jet = metric_jet(self.chart, np.array(key), order=1)
            frame, A = _connection_from_jet(jet.g, jet.dg)
            data = _BaseData(jet.g, frame, A)
            if len(self._cache) > 4096:
                self._cache.clear()
            self._cache[key] = data
        return data

    def lift_matrix(self, x, s):
        """S[:, a]: stereographic velocity of the horizontal lift of d/dx^a."""
        data = self.base_data(x)
        u = u_from_stereo(s, self.sigma)
        Du = stereo_jacobian(s, self.sigma)
        Ds = np.linalg.pinv(Du)
        udot = -np.einsum("aji,i->ja", data.A, u)  # 3x4
        udot -= np.outer(u, u @ udot)
        return Ds @ udot

    def J(self, y):
        y = np.asarray(y, dtype=float)
        x, s = y[:4], y[4:]
        data = self.base_data(x)
        u = u_from_stereo(s, self.sigma)
        j = form_to_acs(data.frame.form(u), data.g).j
        Du = stereo_jacobian(s, self.sigma)
        JV = np.linalg.pinv(Du) @ _cross_matrix(u) @ Du
        S = self.lift_matrix(x, s)
        B = np.eye(6)
        B[4:, :4] = S
        Binv = np.eye(6)
        Binv[4:, :4] = -S
        block = np.zeros((6, 6))
        block[:4, :4] = j
        block[4:, 4:] = JV
        return B @ block @ Binv


def horizontal_lift(chart, tp, v):
    """Horizontal lift of the base vector ``v`` at the twistor point ``tp``."""
    field = TwistorField(chart, tp.sigma)
    S = field.lift_matrix(tp.base, tp.stereo)
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, S @ v])


def twistor_J(chart, tp):
    field = TwistorField(chart, tp.sigma)
    S = field.lift_matrix(tp.base, tp.stereo)
    H = np.vstack([np.eye(4), S])
    return TwistorJ(field.J(tp.coords), tp, H)


@dataclass(frozen=True)
class NijenhuisResult:
    max_abs: float
    N: np.ndarray  # N[k, i, j]


def _derivative(fn, y, step):
    """Central differences, one Richardson pass; dF[l] = d F / d y^l."""
    out = []
    for l in range(len(y)):
        e = np.zeros_like(y)
        e[l] = 1.0

        def central(h):
            return (fn(y + h * e) - fn(y - h * e)) / (2.0 * h)

        out.append((4.0 * central(step / 2.0) - central(step)) / 3.0)
    return np.array(out)


def nijenhuis_tensor(J, dJ):
    """N^k_ij from J[k, j] = J^k_j and dJ[l, k, j] = d_l J^k_j."""
    t1 = np.einsum("li,lkj->kij", J, dJ)
    t2 = np.einsum("lj,lki->kij", J, dJ)
    t3 = np.einsum("kl,ilj->kij", J, dJ) - np.einsum("kl,jli->kij", J, dJ)
    return t1 - t2 - t3


def nijenhuis(chart, tp, step=1e-4):
    """Nijenhuis tensor of the twistor J at ``tp`` by finite differences."""
    if not chart.domain.contains(tp.base, margin=step):
        raise DomainError("finite-difference stencil leaves the chart domain")
    field = TwistorField(chart, tp.sigma)
    y = tp.coords
    J = field.J(y)
    dJ = _derivative(field.J, y, step)
    N = nijenhuis_tensor(J, dJ)
    return NijenhuisResult(float(np.max(np.abs(N))), N)


def random_twistor_points(chart, n, rng, margin=1e-3):
    bases = chart.domain.sample(rng, n, margin)
    pts = []
    for x in bases:
        u = rng.standard_normal(3)
        pts.append(TwistorPoint.from_fiber(x, u / np.linalg.norm(u)))
    return pts


def thread_count():
    try:
        return max(1, int(os.environ.get("TWISTOR_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ReportRow:
    base: tuple
    fiber: tuple
    w_plus_norm: float
    max_nijenhuis: float

    def as_dict(self):
        return {
            "base": list(self.base),
            "fiber": list(self.fiber),
            "w_plus_norm": self.w_plus_norm,
            "max_nijenhuis": self.max_nijenhuis,
        }


def _report_row(chart, tp, step):
    curv = curvature_at(chart, tp.base)
    wp, _ = weyl_split(curv, make_frame(curv.g)).norms()
    n = nijenhuis(chart, tp, step).max_abs
    return ReportRow(tuple(tp.base.tolist()), tuple(tp.fiber.tolist()), wp, n)


def integrability_report(chart, n_samples, seed, step=1e-4, threads=None):
    """Rows (base, fiber, |W+|, max|N|) at seeded random twistor points, sorted by base."""
    rng = np.random.default_rng(seed)
    pts = random_twistor_points(chart, n_samples, rng, margin=max(1e-3, 2 * step))
    threads = threads or thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda tp: _report_row(chart, tp, step), pts))
    else:
        rows = [_report_row(chart, tp, step) for tp in pts]
    return sorted(rows, key=lambda r: r.base)
