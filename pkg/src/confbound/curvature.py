"""Pointwise curvature from metric jets.

Conventions (all batched, batch axis last):

* ``Gamma[a, b, c] = Gamma^a_{bc}``
* ``R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}``
  and ``Riem[a, b, c, d] = g_ae R^e_{bcd}``, so a unit sphere has
  ``Riem = g_ac g_bd - g_ad g_bc``.
* ``Ric_bd = R^a_{bad}``, ``R = g^bd Ric_bd`` (round unit S^4 gives 12).
* ``P = (Ric - R g / (2(n-1))) / (n-2)``, ``W = Riem - P (.) g``.
* ``|W|^2 = W_abcd W^abcd / 4``.

The pipeline is dimension-generic; boundary code reuses it for n = 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets as J
from .metric import MetricField, metric_jet

_LETTERS = "abcdefghijkl"


def kulkarni(P, g):
    """(P (.) g)_abcd = P_ac g_bd + P_bd g_ac - P_ad g_bc - P_bc g_ad for arrays or jets."""
    if isinstance(P, J.Jet):
        t1 = J.contract("ac,bd->abcd", P, g)
        t2 = J.contract("bd,ac->abcd", P, g)
        t3 = J.contract("ad,bc->abcd", P, g)
        t4 = J.contract("bc,ad->abcd", P, g)
        return t1 + t2 - t3 - t4
    return (
        np.einsum("ac...,bd...->abcd...", P, g)
        + np.einsum("bd...,ac...->abcd...", P, g)
        - np.einsum("ad...,bc...->abcd...", P, g)
        - np.einsum("bc...,ad...->abcd...", P, g)
    )


def covariant_derivative(T: J.Jet, Gamma: J.Jet) -> J.Jet:
    """Covariant derivative of an all-lower tensor; the new index goes last."""
    k = len(T.shape) - 1
    idx = _LETTERS[:k]
    out = T.grad()
    for s in range(k):
        replaced = idx[:s] + "m" + idx[s + 1 :]
        out = out - J.contract(f"mz{idx[s]},{replaced}->{idx}z", Gamma, T)
    return out


def covariant_derivative_values(dT: np.ndarray, T: np.ndarray, Gamma: np.ndarray) -> np.ndarray:
    """Value-level version: ``dT`` holds partials with derivative index last."""
    k = T.ndim - 1
    idx = _LETTERS[:k]
    out = dT.copy()
    for s in range(k):
        replaced = idx[:s] + "m" + idx[s + 1 :]
        out -= np.einsum(f"mz{idx[s]}...,{replaced}...->{idx}z...", Gamma, T)
    return out


class Curvature:
    """Lazily derived curvature jets of a metric jet ``g`` of order K.

    Each derivative costs one jet order: Gamma has order K-1, Riemann K-2,
    first covariant derivatives of curvature K-3.
    """

    def __init__(self, g: J.Jet):
        self.g = g
        self.n = g.shape[0]

    @cached_property
    def ginv(self) -> J.Jet:
        return J.inv(self.g)

    @cached_property
    def Gamma_lower(self) -> J.Jet:
        dg = self.g.grad()
        return J.Jet(
            0.5 * (np.swapaxes(dg.c, 2, 3) + dg.c - np.moveaxis(dg.c, 3, 1)),
            dg.n,
            dg.order,
        )

    @cached_property
    def Gamma(self) -> J.Jet:
        return J.contract("ad,dbc->abc", self.ginv, self.Gamma_lower)

    @cached_property
    def Riem_up(self) -> J.Jet:
        G = self.Gamma
        dG = G.grad()  # [a, b, c, e] = d_e Gamma^a_bc
        t1 = dG.map(lambda c: np.einsum("Zadbc...->Zabcd...", c))
        t2 = dG.map(lambda c: np.einsum("Zacbd...->Zabcd...", c))
        Q = J.contract("ace,edb->abcd", G, G)
        Qs = Q.map(lambda c: np.swapaxes(c, 3, 4))
        return t1 - t2 + Q - Qs

    @cached_property
    def Riem(self) -> J.Jet:
        return J.contract("ae,ebcd->abcd", self.g, self.Riem_up)

    @cached_property
    def Ric(self) -> J.Jet:
        return self.Riem_up.map(lambda c: np.einsum("Zabad...->Zbd...", c))

    @cached_property
    def R(self) -> J.Jet:
        return J.contract("bd,bd->", self.ginv, self.Ric)

    @cached_property
    def P(self) -> J.Jet:
        n = self.n
        g = self.g.truncate(self.Ric.order)
        return (self.Ric - J.mul(self.R[None, None], g) * (1.0 / (2 * (n - 1)))) * (1.0 / (n - 2))

    @cached_property
    def E(self) -> J.Jet:
        g = self.g.truncate(self.Ric.order)
        return self.Ric - J.mul(self.R[None, None], g) * (1.0 / self.n)

    @cached_property
    def W(self) -> J.Jet:
        return self.Riem - kulkarni(self.P, self.g.truncate(self.P.order))

    # -- covariant derivatives --------------------------------------------
    @cached_property
    def dW(self) -> J.Jet:
        return covariant_derivative(self.W, self.Gamma)

    @cached_property
    def dRiem(self) -> J.Jet:
        return covariant_derivative(self.Riem, self.Gamma)

    @cached_property
    def dP(self) -> J.Jet:
        return covariant_derivative(self.P, self.Gamma)

    @cached_property
    def dRic(self) -> J.Jet:
        return covariant_derivative(self.Ric, self.Gamma)


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature values at a batch of points (batch axis last)."""

    g: np.ndarray
    ginv: np.ndarray
    Gamma: np.ndarray
    Riem: np.ndarray
    Ric: np.ndarray
    R: np.ndarray
    E: np.ndarray
    P: np.ndarray
    W: np.ndarray
    weylNormSq: np.ndarray
    sigma2P: np.ndarray

    @property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(np.moveaxis(self.g, -1, 0)))


def weyl_norm_sq(W: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    Wup = np.einsum("abcd...,ae...,bf...,cg...,dh...->efgh...", W, ginv, ginv, ginv, ginv, optimize=True)
    return 0.25 * np.einsum("abcd...,abcd...->...", W, Wup)


def sigma2(P: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    A = np.einsum("ab...,bc...->ac...", ginv, P)
    tr = np.einsum("aa...->...", A)
    tr2 = np.einsum("ab...,ba...->...", A, A)
    return 0.5 * (tr**2 - tr2)


def bundle_from(curv: Curvature) -> CurvatureBundle:
    ginv = curv.ginv.value
    W = curv.W.value
    P = curv.P.value
    return CurvatureBundle(
        g=curv.g.value,
        ginv=ginv,
        Gamma=curv.Gamma.value,
        Riem=curv.Riem.value,
        Ric=curv.Ric.value,
        R=curv.R.value,
        E=curv.E.value,
        P=P,
        W=W,
        weylNormSq=weyl_norm_sq(W, ginv),
        sigma2P=sigma2(P, ginv),
    )


def curvature_bundle(field: MetricField, points: np.ndarray) -> CurvatureBundle:
    return bundle_from(Curvature(metric_jet(field, points, order=2)))


def bach_from(curv: Curvature) -> np.ndarray:
    """B_ab = nabla^c nabla^d W_acbd + P^cd W_acbd from an order >= 4 metric jet."""
    ginv = curv.ginv.value
    ddW = covariant_derivative(curv.dW, curv.Gamma).value  # [a,c,b,d,e1,e2] = nabla_e2 nabla_e1 W_acbd
    div2 = np.einsum("acbdfe...,ce...,df...->ab...", ddW, ginv, ginv, optimize=True)
    P = curv.P.value
    W = curv.W.value
    Pup = np.einsum("ab...,ac...,bd...->cd...", P, ginv, ginv)
    return div2 + np.einsum("cd...,acbd...->ab...", Pup, W)


def bach_rewritten_from(curv: Curvature, parts: bool = False):
    """Bach tensor assembled from E, R and W (second-Bianchi form).

    The seven-term sum, with this module's curvature signs, equals minus
    the definition above (it comes from a source whose Bach tensor carries
    the opposite overall sign), so it is negated before returning.
    ``parts`` returns the seven summands before negation.
    """
    g = curv.g.value
    ginv = curv.ginv.value
    E = curv.E.value
    R = curv.R.value
    W = curv.W.value
    ddE = covariant_derivative(covariant_derivative(curv.E, curv.Gamma), curv.Gamma).value
    lapE = np.einsum("ijkl...,kl...->ij...", ddE, ginv)
    dR = curv.R.grad()
    ddR = covariant_derivative(dR, curv.Gamma).value  # [i, j] = nabla_j nabla_i R (symmetric)
    lapR = np.einsum("ij...,ij...->...", ddR, ginv)
    Eup = np.einsum("kl...,ka...,lb...->ab...", E, ginv, ginv)
    Emix = np.einsum("ik...,kl...->il...", E, ginv)  # E_i^l
    normE = np.einsum("ab...,ab...->...", E, Eup)
    terms = [
        -0.5 * lapE,
        ddR / 6.0,
        -lapR * g / 24.0,
        -np.einsum("kl...,ikjl...->ij...", Eup, W),
        np.einsum("ik...,jk...->ij...", Emix, E),
        -0.25 * normE * g,
        R * E / 6.0,
    ]
    total = -sum(terms)
    return (total, terms) if parts else total


def bach(field: MetricField, points: np.ndarray) -> np.ndarray:
    return bach_from(Curvature(metric_jet(field, points, order=4)))


def bach_rewritten(field: MetricField, points: np.ndarray) -> np.ndarray:
    return bach_rewritten_from(Curvature(metric_jet(field, points, order=4)))


def bianchi_residuals(field: MetricField, points: np.ndarray) -> dict:
    """Sup-norm residuals of the first Bianchi identity and div(Ric - R g / 2)."""
    curv = Curvature(metric_jet(field, points, order=3))
    Rm = curv.Riem.value
    first = Rm + np.einsum("abcd...->acdb...", Rm) + np.einsum("abcd...->adbc...", Rm)
    pair = Rm - np.einsum("abcd...->cdab...", Rm)
    anti = Rm + np.einsum("abcd...->bacd...", Rm)
    dRic = curv.dRic.value  # [a, b, c] = nabla_c Ric_ab
    dR = curv.R.grad().value  # [c]
    ginv = curv.ginv.value
    div = np.einsum("abc...,ac...->b...", dRic, ginv) - 0.5 * dR
    return {
        "firstBianchi": float(np.max(np.abs(first))),
        "pairSymmetry": float(np.max(np.abs(pair))),
        "antisymmetry": float(np.max(np.abs(anti))),
        "contractedSecondBianchi": float(np.max(np.abs(div))),
    }


def weyl_trace_norm(W: np.ndarray, ginv: np.ndarray) -> float:
    """Largest single trace of W (all should vanish)."""
    tr = [
        np.einsum("abcd...,ac...->bd...", W, ginv),
        np.einsum("abcd...,ad...->bc...", W, ginv),
        np.einsum("abcd...,bd...->ac...", W, ginv),
        np.einsum("abcd...,bc...->ad...", W, ginv),
    ]
    return float(max(np.max(np.abs(t)) for t in tr))
