"""Levi-Civita connection, Riemann/Ricci/scalar curvature and the Weyl tensor.

Conventions (all tests are written against these)::

    Gamma^a_bc = 1/2 g^ad (d_b g_dc + d_c g_db - d_d g_bc)
    R^a_bcd    = d_c Gamma^a_db - d_d Gamma^a_cb
                 + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    R_bd       = R^a_bad

With these, the unit round sphere has R_abcd = g_ac g_bd - g_ad g_bc and
scalar curvature 12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import metric_jet
from .errors import FrameError, MetricError


@dataclass(frozen=True)
class Connection:
    gamma: np.ndarray  # gamma[a, b, c] = Gamma^a_bc


@dataclass(frozen=True)
class CurvatureTensors:
    g: np.ndarray
    riemann: np.ndarray  # R^a_bcd
    riemann_low: np.ndarray  # R_abcd
    ricci: np.ndarray
    scalar: float
    weyl_low: np.ndarray  # C_abcd

    def weyl_mixed(self):
        """The (1,3) Weyl tensor C^a_bcd, a conformal invariant."""
        return np.einsum("ae,ebcd->abcd", np.linalg.inv(self.g), self.weyl_low)

    def einstein_residual(self):
        """max |Ric - (s/4) g|."""
        return float(np.max(np.abs(self.ricci - self.scalar / 4.0 * self.g)))


@dataclass(frozen=True)
class WeylSplit:
    w_plus: np.ndarray
    w_minus: np.ndarray
    cross: np.ndarray  # C(omega+_i, omega-_j); vanishes identically

    def norms(self):
        return float(np.linalg.norm(self.w_plus)), float(np.linalg.norm(self.w_minus))


def _inverse(g):
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise MetricError("metric has non-finite entries")
    if np.linalg.cond(g) > 1e14:
        raise MetricError("metric matrix is numerically singular")
    return np.linalg.inv(g)


def christoffel_from(g, dg):
    ginv = _inverse(g)
    # lower[d, b, c] = d_b g_dc + d_c g_db - d_d g_bc  (dg[c, a, b] = d_c g_ab)
    lower = (
        np.einsum("bdc->dbc", dg)
        + np.einsum("cdb->dbc", dg)
        - dg
    )
    return 0.5 * np.einsum("ad,dbc->abc", ginv, lower)


def christoffel(jet):
    """Levi-Civita connection coefficients from a metric jet."""
    return Connection(christoffel_from(jet.g, jet.dg))


def _christoffel_derivative(g, dg, ddg):
    """dgamma[e, a, b, c] = d_e Gamma^a_bc."""
    ginv = _inverse(g)
    lower = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    # ddg[e, c, a, b] = d_e d_c g_ab
    dlower = (
        np.einsum("ebdc->edbc", ddg)
        + np.einsum("ecdb->edbc", ddg)
        - np.einsum("edbc->edbc", ddg)
    )
    dginv = -np.einsum("ap,epq,qd->ead", ginv, dg, ginv)
    return 0.5 * (
        np.einsum("ead,dbc->eabc", dginv, lower)
        + np.einsum("ad,edbc->eabc", ginv, dlower)
    )


def kulkarni_nomizu(h, k):
    """(h o k)_abcd = h_ac k_bd + h_bd k_ac - h_ad k_bc - h_bc k_ad."""
    return (
        np.einsum("ac,bd->abcd", h, k)
        + np.einsum("bd,ac->abcd", h, k)
        - np.einsum("ad,bc->abcd", h, k)
        - np.einsum("bc,ad->abcd", h, k)
    )


def curvature_from_jet(jet):
    if jet.ddg is None:
        raise ValueError("curvature needs a second-order jet")
    g = jet.g
    gam = christoffel_from(g, jet.dg)
    dgam = _christoffel_derivative(g, jet.dg, jet.ddg)
    # R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
    riem = (
        np.einsum("cadb->abcd", dgam)
        - np.einsum("dacb->abcd", dgam)
        + np.einsum("ace,edb->abcd", gam, gam)
        - np.einsum("ade,ecb->abcd", gam, gam)
    )
    low = np.einsum("ae,ebcd->abcd", g, riem)
    ricci = np.einsum("abad->bd", riem)
    ricci = 0.5 * (ricci + ricci.T)
    ginv = _inverse(g)
    scalar = float(np.einsum("ab,ab->", ginv, ricci))
    # Dimension 4: C = Rm - 1/2 (Ric o g) + s/12 (g o g)
    weyl = low - 0.5 * kulkarni_nomizu(ricci, g) + scalar / 12.0 * kulkarni_nomizu(g, g)
    return CurvatureTensors(g, riem, low, ricci, scalar, weyl)


def curvature_at(chart, p):
    """All curvature tensors of ``chart`` at ``p``."""
    return curvature_from_jet(metric_jet(chart, p, order=2))


def frame_components(tensor, frame_vectors):
    """Components of a (0,4) tensor in the frame whose vectors are the columns."""
    E = frame_vectors
    return np.einsum("abcd,ai,bj,ck,dl->ijkl", tensor, E, E, E, E)


def _act(C, a, b):
    return float(np.einsum("ijkl,ij,kl->", C, a, b))


def weyl_split(curv, frame):
    """Weyl tensor as two 3x3 blocks acting on the self-dual and anti-self-dual frames.

    ``w_plus[i, j] = C(omega_i, omega_j) / 4`` with the full index sum, and
    likewise on the anti-self-dual frame.  ``cross`` holds the mixed block.
    """
    from .sd_algebra import ASD_BASIS, SD_BASIS

    residual = frame.gram_residual(curv.g)
    if residual > 1e-8:
        raise FrameError(f"frame is not orthonormal for this metric (residual {residual:.2e})")
    C = frame_components(curv.weyl_low, frame.vectors)
    wp = np.array([[_act(C, a, b) for b in SD_BASIS] for a in SD_BASIS]) / 4.0
    wm = np.array([[_act(C, a, b) for b in ASD_BASIS] for a in ASD_BASIS]) / 4.0
    cross = np.array([[_act(C, a, b) for b in ASD_BASIS] for a in SD_BASIS]) / 4.0
    return WeylSplit(wp, wm, cross)
