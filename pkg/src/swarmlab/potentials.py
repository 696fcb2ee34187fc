"""Interaction potentials with Newtonian repulsion and quadratic attraction.

Two kinds are shipped:

``c0``
    ``K(x) = -|x|/2 + x**2/2``, continuous with a kink at the origin.
``c2``
    the kink of ``-|x|/2`` replaced on ``[-eps, eps]`` by the even quartic
    ``x**4/(16 eps**3) - 3 x**2/(8 eps) - 3 eps/16`` which matches the outer
    branch up to the second derivative.

``K(0) = 0`` for ``c0`` while ``c2`` gives ``K(0) = -3 eps/16``. Derivatives
are odd with ``dK(0) = 0`` exactly, so a particle never pushes itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

C0 = "c0"
C2 = "c2"
DEFAULT_EPSILON = 0.1


@dataclass(frozen=True)
class PotentialSpec:
    """Selects the interaction potential.

    Parameters
    ----------
    kind : {"c0", "c2"}
        Potential family.
    epsilon : float
        Half-width of the regularized core, used only by ``"c2"``.
    """

    kind: str = C2
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.kind not in (C0, C2):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == C2 and not self.epsilon > 0:
            raise ValueError("epsilon must be positive for the c2 potential")

    @classmethod
    def parse(cls, kind: str, epsilon: float = DEFAULT_EPSILON) -> "PotentialSpec":
        return cls(kind=kind.lower(), epsilon=epsilon)


def _phi(spec, ax):
    # ax = |x|
    if spec.kind == C0:
        return -0.5 * ax
    eps = spec.epsilon
    inner = ax**4 / (16.0 * eps**3) - 3.0 * ax**2 / (8.0 * eps) - 3.0 * eps / 16.0
    return np.where(ax <= eps, inner, -0.5 * ax)


def _dphi(spec, ax):
    # derivative of phi with respect to |x|, for |x| > 0
    if spec.kind == C0:
        return np.full_like(ax, -0.5)
    eps = spec.epsilon
    inner = ax**3 / (4.0 * eps**3) - 3.0 * ax / (4.0 * eps)
    return np.where(ax <= eps, inner, -0.5)


def eval_K(spec: PotentialSpec, x):
    """Potential value ``K(x)``; even in ``x``. Accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = _phi(spec, ax) + 0.5 * ax * ax
    return out if out.ndim else float(out)


def eval_dK(spec: PotentialSpec, x):
    """Derivative ``K'(x)``; odd in ``x`` with ``K'(0) = 0``."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    # sign(0) = 0 removes the self force of the c0 kink
    out = np.sign(x) * _dphi(spec, ax) + x
    return out if out.ndim else float(out)


def eval_d2K(spec: PotentialSpec, x):
    """Second derivative away from the origin (``c0``) or everywhere (``c2``)."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if spec.kind == C0:
        out = np.ones_like(ax)
    else:
        eps = spec.epsilon
        out = np.where(ax <= eps, 3.0 * ax**2 / (4.0 * eps**3) - 3.0 / (4.0 * eps), 0.0) + 1.0
    return out if out.ndim else float(out)


def external_potential(x):
    """External potential hook. Always zero for the shipped experiments."""
    return np.zeros_like(np.asarray(x, dtype=float))
