"""Pointwise linear algebra of 2-forms on an oriented 4-dimensional inner-product space.

Conventions, fixed here and nowhere else:

* the orientation is the coordinate orientation, ``eps[0,1,2,3] = +1``;
* the self-dual frame is ``omega1 = e1^e2 + e3^e4``, ``omega2 = e1^e3 + e4^e2``,
  ``omega3 = e1^e4 + e2^e3`` and the anti-self-dual one flips the second
  terms;
* a 2-form ``w`` with ``|w| = sqrt(2)`` corresponds to the endomorphism ``j``
  defined by ``g(j v, x) = w(v, x)``, i.e. ``j^a_b = g^ac w_bc``.  With the
  identity metric ``omega1`` maps to the matrix with ``j e1 = e2`` and
  ``j e3 = e4``.

2-forms are 4x4 antisymmetric arrays ``w[a, b]`` of coordinate components.
The inner product is ``<a, b> = 1/2 a_ab b_cd g^ac g^bd`` so that
``|e1^e2| = 1`` and ``|omega_i| = sqrt(2)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import FrameError, MetricError

DIM = 4
SQRT2 = np.sqrt(2.0)
SD_NORM_TOL = 1e-8
SD_TOL = 1e-8
ACS_TOL = 1e-10


def _levi_civita():
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inversions = sum(perm[i] > perm[j] for i in range(4) for j in range(i + 1, 4))
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


EPS = _levi_civita()


def wedge(a, b):
    """Coordinate components of the wedge of two covectors."""
    return np.outer(a, b) - np.outer(b, a)


def _unit(i, j):
    e = np.eye(DIM)
    return wedge(e[i], e[j])


# Standard frames in orthonormal components, indexed (0-based) as above.
SD_BASIS = (
    _unit(0, 1) + _unit(2, 3),
    _unit(0, 2) + _unit(3, 1),
    _unit(0, 3) + _unit(1, 2),
)
ASD_BASIS = (
    _unit(0, 1) - _unit(2, 3),
    _unit(0, 2) - _unit(3, 1),
    _unit(0, 3) - _unit(1, 2),
)

# Basis e^a^e^b (a<b) of the 6-dimensional space of 2-forms.
_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def to_vector(w):
    return np.array([w[a, b] for a, b in _PAIRS])


def from_vector(v):
    w = np.zeros((DIM, DIM))
    for k, (a, b) in enumerate(_PAIRS):
        w[a, b] = v[k]
        w[b, a] = -v[k]
    return w


def _check_metric(g):
    g = np.asarray(g, dtype=float)
    if g.shape != (DIM, DIM) or not np.allclose(g, g.T, atol=1e-12, rtol=0):
        raise MetricError("metric must be a symmetric 4x4 matrix")
    if np.linalg.eigvalsh(g).min() <= 0.0:
        raise MetricError("metric must be positive-definite")
    return g


def inner(a, b, g):
    ginv = np.linalg.inv(g)
    return 0.5 * float(np.einsum("ab,cd,ac,bd->", a, b, ginv, ginv))


def norm(w, g):
    return float(np.sqrt(max(inner(w, w, g), 0.0)))


def hodge_star(w, g):
    """(*w)_ab = 1/2 sqrt(det g) eps_abcd g^ce g^df w_ef."""
    g = _check_metric(g)
    ginv = np.linalg.inv(g)
    raised = ginv @ np.asarray(w, dtype=float) @ ginv.T
    return 0.5 * np.sqrt(np.linalg.det(g)) * np.einsum("abcd,cd->ab", EPS, raised)


def star_matrix(g):
    """The Hodge star as a 6x6 matrix on the e^a^e^b basis."""
    cols = [to_vector(hodge_star(from_vector(np.eye(6)[k]), g)) for k in range(6)]
    return np.array(cols).T


def sd_projectors(g, orthonormal=False):
    """(P_plus, P_minus) = 1/2 (I +- *) as 6x6 matrices.

    By default the matrices act on coordinate components (basis dx^a^dx^b);
    with ``orthonormal=True`` they are written in the basis e^i^e^j of the
    Gram-Schmidt coframe, where both are orthogonal projectors.
    """
    star = star_matrix(g)
    if orthonormal:
        E = make_frame(g).coframe
        C = np.array([to_vector(E.T @ _unit(a, b) @ E) for a, b in _PAIRS]).T
        star = np.linalg.solve(C, star @ C)
    eye = np.eye(6)
    return 0.5 * (eye + star), 0.5 * (eye - star)


def project_plus(w, g):
    return 0.5 * (w + hodge_star(w, g))


def project_minus(w, g):
    return 0.5 * (w - hodge_star(w, g))


@dataclass(frozen=True)
class SDFrame:
    """Oriented orthonormal coframe and the induced (anti-)self-dual 2-form frames.

    ``coframe[i]`` holds the coordinate components of ``e^i``; ``vectors``
    has the dual frame ``e_i`` as columns.
    """

    coframe: np.ndarray

    @property
    def vectors(self):
        return np.linalg.inv(self.coframe)

    @property
    def omega(self):
        """Self-dual frame (omega1, omega2, omega3) in coordinate components."""
        E = self.coframe
        return tuple(E.T @ b @ E for b in SD_BASIS)

    @property
    def omega_minus(self):
        E = self.coframe
        return tuple(E.T @ b @ E for b in ASD_BASIS)

    def gram_residual(self, g):
        ginv = np.linalg.inv(g)
        return float(np.max(np.abs(self.coframe @ ginv @ self.coframe.T - np.eye(DIM))))

    def form(self, u):
        """The 2-form u1 omega1 + u2 omega2 + u3 omega3."""
        E = self.coframe
        return E.T @ sum(ui * b for ui, b in zip(u, SD_BASIS)) @ E

    def coefficients(self, w):
        """Inverse of :meth:`form` on the self-dual part (orthonormal components)."""
        E_inv = self.vectors
        w_on = E_inv.T @ w @ E_inv
        return np.array([0.25 * np.sum(w_on * b) for b in SD_BASIS])


def gram_schmidt_coframe(ginv):
    """Orthonormalise dx1..dx4, in that order, for the covector inner product ``ginv``.

    Works on any scalar type supporting + - * / and ``sqrt`` through
    :mod:`twistorlab.jets`; the result is lower triangular with positive
    diagonal, so it is automatically positively oriented.
    """
    from .jets import sqrt

    n = len(ginv)
    rows = []
    for i in range(n):
        v = [1.0 if k == i else 0.0 for k in range(n)]
        for r in rows:
            # <v, r> with v = dx^i: sum_k ginv[i][k] r[k]
            proj = sum(_dot_row(ginv, v, r))
            v = [vk - proj * rk for vk, rk in zip(v, r)]
        nrm2 = sum(_dot_row(ginv, v, v))
        nrm = sqrt(nrm2)
        rows.append([vk / nrm for vk in v])
    return rows


def _dot_row(ginv, a, b):
    n = len(a)
    for i in range(n):
        if isinstance(a[i], float) and a[i] == 0.0:
            continue
        for k in range(n):
            if isinstance(b[k], float) and b[k] == 0.0:
                continue
            yield a[i] * ginv[i][k] * b[k]


def make_frame(jet_or_g):
    """Oriented orthonormal coframe by Gram-Schmidt on dx1..dx4."""
    g = getattr(jet_or_g, "g", jet_or_g)
    g = _check_metric(g)
    ginv = np.linalg.inv(g)
    rows = gram_schmidt_coframe(ginv.tolist())
    E = np.array(rows, dtype=float)
    if np.linalg.det(E) <= 0.0:
        raise FrameError("Gram-Schmidt coframe is not positively oriented")
    return SDFrame(E)


@dataclass(frozen=True)
class ACStructure:
    j: np.ndarray  # j[a, b] = j^a_b

    def check(self, g, tol=ACS_TOL):
        """Raise unless j^2 = -I, j is g-orthogonal and orientation-compatible."""
        j = self.j
        if np.max(np.abs(j @ j + np.eye(DIM))) > tol:
            raise FrameError("j^2 != -I")
        if np.max(np.abs(j.T @ g @ j - g)) > tol * max(1.0, np.max(np.abs(g))):
            raise FrameError("j is not g-orthogonal")
        if not orientation_compatible(j):
            raise FrameError("j does not induce the coordinate orientation")


def orientation_compatible(j, rng=None):
    """True if (v, jv, w, jw) is positively oriented for generic v, w."""
    rng = rng or np.random.default_rng(12345)
    for _ in range(3):
        v, w = rng.standard_normal(DIM), rng.standard_normal(DIM)
        det = np.linalg.det(np.column_stack([v, j @ v, w, j @ w]))
        if abs(det) > 1e-9:
            return det > 0
    raise FrameError("could not find a generic basis to test orientation")


def form_to_acs(w, g):
    """Almost-complex structure j^a_b = g^ac w_bc of a self-dual form of norm sqrt(2)."""
    g = _check_metric(g)
    w = np.asarray(w, dtype=float)
    n = norm(w, g)
    if abs(n - SQRT2) > SD_NORM_TOL:
        raise FrameError(f"form has norm {n!r}, expected sqrt(2)")
    if norm(project_minus(w, g), g) > SD_TOL * n:
        raise FrameError("form is not self-dual")
    return ACStructure(np.linalg.inv(g) @ w.T)


def acs_to_form(acs, g, check=True):
    """Inverse of :func:`form_to_acs`: w_ab = g_bc j^c_a."""
    g = _check_metric(g)
    j = getattr(acs, "j", acs)
    if check:
        ACStructure(np.asarray(j, dtype=float)).check(g)
    return (g @ j).T


def orthonormal_sd_basis(g):
    """omega_i / sqrt(2) for the Gram-Schmidt frame of ``g``."""
    return [w / SQRT2 for w in make_frame(g).omega]


def transfer_matrix(g, g_prime):
    """Matrix of P_plus(g') restricted to Lambda+_g in orthonormal bases."""
    src = orthonormal_sd_basis(g)
    dst = orthonormal_sd_basis(g_prime)
    M = np.array(
        [[inner(d, project_plus(s, g_prime), g_prime) for s in src] for d in dst]
    )
    return M, src, dst


def transfer_sd(g, g_prime, w):
    """Carry a g-self-dual form to a g'-self-dual form of the same length.

    The form is first projected to Lambda+_{g'} along Lambda-_{g'} (an
    isomorphism because Lambda+_g and Lambda-_{g'} meet only in 0), then
    corrected by the inverse of the positive self-adjoint factor of that
    map, which leaves its orthogonal polar factor.
    """
    g = _check_metric(g)
    g_prime = _check_metric(g_prime)
    w = np.asarray(w, dtype=float)
    n = norm(w, g)
    if n > 0 and norm(project_minus(w, g), g) > SD_TOL * n:
        raise FrameError("input form is not self-dual for g")
    M, src, dst = transfer_matrix(g, g_prime)
    X, s, Yt = np.linalg.svd(M)
    if s.min() <= 0.0 or s.max() / s.min() > 1e12:
        raise FrameError("projection between self-dual spaces is degenerate")
    U = X @ Yt
    coeffs = np.array([inner(b, w, g) for b in src])
    out = U @ coeffs
    return sum(c * d for c, d in zip(out, dst))


def random_metric(rng, cond_max=10.0):
    """Random SPD 4x4 matrix with condition number at most ``cond_max``."""
    Q, _ = np.linalg.qr(rng.standard_normal((DIM, DIM)))
    eig = np.exp(rng.uniform(0.0, np.log(cond_max), size=DIM))
    return (Q * eig) @ Q.T


def random_sd_form(rng, g):
    """Random self-dual form of norm sqrt(2) for ``g``."""
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    return make_frame(g).form(u)
