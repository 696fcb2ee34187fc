"""Interaction and diffusive energies.

All density integrals use the midpoint rule on cell centers, the natural
quadrature for cell averages. With the c0 potential the kink of ``|x - y|``
on the diagonal makes the density-density term first order in ``h``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz

from .measures import DensityField, Grid1D, as_measure
from .potentials import PotentialSpec, eval_K


@dataclass(frozen=True)
class EnergyBreakdown:
    interaction: float
    entropy: float
    external: float = 0.0

    @property
    def total(self) -> float:
        return self.interaction + self.entropy + self.external


@lru_cache(maxsize=8)
def kernel_matrix(grid: Grid1D, spec: PotentialSpec) -> np.ndarray:
    """``K(x_i - x_j)`` between all pairs of cell centers (read-only)."""
    col = eval_K(spec, grid.h * np.arange(grid.n_cells))
    mat = toeplitz(col)
    mat.setflags(write=False)
    return mat


def convolve(density: DensityField, spec: PotentialSpec) -> np.ndarray:
    """``(K * rho)`` at cell centers by direct midpoint summation."""
    return density.grid.h * (kernel_matrix(density.grid, spec) @ density.values)


def potential_field(m, spec: PotentialSpec, x) -> np.ndarray:
    """``(K * m)(x)`` at arbitrary points."""
    m = as_measure(m)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros_like(flat)
    for loc, w in zip(m.atom_locations, m.atom_masses):
        out += w * eval_K(spec, flat - loc)
    if m.density is not None:
        g = m.density.grid
        support = np.flatnonzero(m.density.values)
        xc = g.centers[support]
        rho = m.density.values[support]
        for start in range(0, flat.size, 512):
            block = flat[start:start + 512]
            out[start:start + 512] += g.h * (eval_K(spec, block[:, None] - xc[None, :]) @ rho)
    return out.reshape(x.shape)


def interaction_energy(m, spec: PotentialSpec) -> float:
    """``1/2 int int K(x - y) dm(x) dm(y)``, self pairs of atoms included."""
    m = as_measure(m)
    x, w = m.atom_locations, m.atom_masses
    energy = 0.0
    if x.size:
        energy += 0.5 * float(w @ eval_K(spec, x[:, None] - x[None, :]) @ w)
    if m.density is not None:
        d = m.density
        h = d.grid.h
        energy += 0.5 * h * float(d.values @ convolve(d, spec))
        if x.size:
            energy += h * float(w @ eval_K(spec, x[:, None] - d.grid.centers[None, :]) @ d.values)
    return energy


def entropy_energy(rho: DensityField, nu: float, alpha: float = 1.0, m: float = 2.0) -> float:
    """``nu**alpha / (m - 1) * int rho**m``."""
    if not m > 1:
        raise ValueError("diffusion exponent m must exceed 1")
    if nu < 0:
        raise ValueError("diffusivity must be nonnegative")
    if nu == 0:
        return 0.0
    return nu**alpha / (m - 1.0) * rho.grid.h * float(np.sum(rho.values**m))


def diffusive_energy(rho: DensityField, nu: float, alpha: float = 1.0, m: float = 2.0,
                     spec: PotentialSpec | None = None) -> EnergyBreakdown:
    spec = spec or PotentialSpec()
    return EnergyBreakdown(
        interaction=interaction_energy(rho, spec),
        entropy=entropy_energy(rho, nu, alpha, m),
    )
