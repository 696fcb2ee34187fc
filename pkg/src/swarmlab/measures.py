"""Probability measures on a bounded interval.

A measure is stored as a :class:`MixedMeasure`: finitely many atoms plus an
optional piecewise-constant density on a uniform grid. Particle ensembles and
finite-volume densities both convert into this form, and the transport and
energy routines only ever see mixed measures.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DOMAIN = (0.0, 1.5)
DEFAULT_CELLS = 1500


@dataclass(frozen=True)
class Grid1D:
    left: float = DOMAIN[0]
    right: float = DOMAIN[1]
    n_cells: int = DEFAULT_CELLS

    def __post_init__(self):
        if not self.right > self.left:
            raise ValueError("grid needs right > left")
        if self.n_cells < 1:
            raise ValueError("grid needs at least one cell")

    @property
    def h(self) -> float:
        return (self.right - self.left) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        e = self.left + self.h * np.arange(self.n_cells + 1)
        e[-1] = self.right
        return e

    @property
    def centers(self) -> np.ndarray:
        return self.left + self.h * (np.arange(self.n_cells) + 0.5)


@dataclass
class DensityField:
    """Cell averages of a nonnegative density."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_cells,):
            raise ValueError(
                f"expected {self.grid.n_cells} cell values, got {self.values.shape}")

    @property
    def mass(self) -> float:
        return self.grid.h * float(np.sum(self.values))

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.values.copy())


@dataclass
class ParticleEnsemble:
    """Weighted Dirac masses, kept sorted by position."""

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1:
            raise ValueError("positions and weights must be 1-D arrays of equal length")
        if np.any(w <= 0):
            raise ValueError("particle weights must be positive")
        order = np.argsort(x, kind="stable")
        self.positions = x[order]
        self.weights = w[order]

    @property
    def n(self) -> int:
        return self.positions.size

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.positions.copy(), self.weights.copy())

    def to_measure(self, merge_tol: float = 1e-6) -> "MixedMeasure":
        """Atoms of the ensemble, fusing particles closer than ``merge_tol``."""
        x, w = self.positions, self.weights
        if x.size == 0:
            return MixedMeasure()
        breaks = np.flatnonzero(np.diff(x) > merge_tol) + 1
        starts = np.concatenate(([0], breaks))
        mass = np.add.reduceat(w, starts)
        loc = np.add.reduceat(w * x, starts) / mass
        # keep exact boundary locations when a whole cluster sits on a wall
        lo = np.minimum.reduceat(x, starts)
        hi = np.maximum.reduceat(x, starts)
        loc = np.where(lo == hi, lo, np.clip(loc, lo, hi))
        return MixedMeasure(loc, mass)


@dataclass
class MixedMeasure:
    atom_locations: np.ndarray = field(default_factory=lambda: np.empty(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.empty(0))
    density: DensityField | None = None

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.atom_locations, dtype=float))
        mass = np.atleast_1d(np.asarray(self.atom_masses, dtype=float))
        if loc.shape != mass.shape:
            raise ValueError("atom locations and masses differ in length")
        if np.any(mass <= 0):
            raise ValueError("atom masses must be positive")
        order = np.argsort(loc, kind="stable")
        self.atom_locations = loc[order]
        self.atom_masses = mass[order]
        if self.density is not None:
            if np.any(self.density.values < 0):
                raise ValueError("density must be nonnegative")
            g = self.density.grid
            if loc.size and (loc[0] < g.left or loc[-1] > g.right):
                raise ValueError("atoms must lie inside the density grid")

    @classmethod
    def from_density(cls, density: DensityField) -> "MixedMeasure":
        return cls(density=density)

    @property
    def n_atoms(self) -> int:
        return self.atom_locations.size


def as_measure(obj) -> MixedMeasure:
    """Coerce a density, ensemble or measure to :class:`MixedMeasure`."""
    if isinstance(obj, MixedMeasure):
        return obj
    if isinstance(obj, DensityField):
        return MixedMeasure(density=obj)
    if isinstance(obj, ParticleEnsemble):
        return obj.to_measure()
    raise TypeError(f"cannot interpret {type(obj).__name__} as a measure")


def total_mass(m) -> float:
    m = as_measure(m)
    mass = float(np.sum(m.atom_masses))
    if m.density is not None:
        mass += m.density.mass
    return mass


def cdf(m, x):
    """Right-continuous cumulative mass ``m((-inf, x])``."""
    m = as_measure(m)
    xs = np.asarray(x, dtype=float)
    out = np.zeros_like(xs)
    if m.n_atoms:
        cum = np.concatenate(([0.0], np.cumsum(m.atom_masses)))
        out = out + cum[np.searchsorted(m.atom_locations, xs, side="right")]
    if m.density is not None:
        g = m.density.grid
        cell_mass = g.h * m.density.values
        cum = np.concatenate(([0.0], np.cumsum(cell_mass)))
        s = np.clip((xs - g.left) / g.h, 0.0, g.n_cells)
        k = np.minimum(np.floor(s).astype(int), g.n_cells - 1)
        frac = s - k
        out = out + cum[k] + frac * cell_mass[k]
    return out if out.ndim else float(out)


def quantile_pieces(m, normalize: bool = True):
    """Quantile function of ``m`` as a list of linear pieces.

    Returns arrays ``(u0, u1, x0, x1)``: on ``(u0[k], u1[k]]`` the quantile runs
    linearly from ``x0[k]`` to ``x1[k]``. Atoms give pieces with ``x0 == x1``;
    empty cells are dropped, so the function jumps across gaps in the support.
    """
    m = as_measure(m)
    xl = [m.atom_locations]
    xr = [m.atom_locations]
    mass = [m.atom_masses]
    if m.density is not None:
        g = m.density.grid
        edges = g.edges
        inner = m.atom_locations[(m.atom_locations > g.left) & (m.atom_locations < g.right)]
        if inner.size:
            edges = np.union1d(edges, inner)
        cell = np.clip(np.searchsorted(g.edges, 0.5 * (edges[:-1] + edges[1:])) - 1,
                       0, g.n_cells - 1)
        rho = m.density.values[cell]
        if inner.size:
            pm = rho * np.diff(edges)
        else:
            pm = g.h * rho
        keep = pm > 0
        xl.append(edges[:-1][keep])
        xr.append(edges[1:][keep])
        mass.append(pm[keep])
    xl = np.concatenate(xl)
    xr = np.concatenate(xr)
    mass = np.concatenate(mass)
    order = np.lexsort((xr, xl))
    xl, xr, mass = xl[order], xr[order], mass[order]
    u1 = np.cumsum(mass)
    if normalize and u1.size:
        u1 = u1 / u1[-1]
        u1[-1] = 1.0
    u0 = np.concatenate(([0.0], u1[:-1]))
    return u0, u1, xl, xr


def quantile(m, u):
    """Left-continuous generalized inverse ``inf{x : cdf(x) >= u}``."""
    us = np.asarray(u, dtype=float)
    if np.any((us < 0) | (us > 1)) or np.any(np.isnan(us)):
        raise ValueError("quantile levels must lie in [0, 1]")
    if abs(total_mass(m) - 1.0) > 1e-12:
        raise ValueError("quantile requires a probability measure")
    u0, u1, x0, x1 = quantile_pieces(m)
    k = np.minimum(np.searchsorted(u1, us, side="left"), u1.size - 1)
    width = u1[k] - u0[k]
    t = np.where(width > 0, (us - u0[k]) / np.where(width > 0, width, 1.0), 0.0)
    out = x0[k] + (x1[k] - x0[k]) * np.clip(t, 0.0, 1.0)
    return out if out.ndim else float(out)


def indicator_density(a: float, b: float, height: float, grid: Grid1D | None = None) -> DensityField:
    """Cell averages of ``height * 1_[a, b]``."""
    grid = grid or Grid1D()
    if not a < b:
        raise ValueError("indicator needs a < b")
    if a < grid.left or b > grid.right:
        raise ValueError("indicator interval must lie inside the grid")
    e = grid.edges
    overlap = np.clip(np.minimum(e[1:], b) - np.maximum(e[:-1], a), 0.0, None)
    return DensityField(grid, height * overlap / grid.h)


def initial_density(grid: Grid1D | None = None) -> DensityField:
    """The block ``4 * 1_[0, 0.25]`` used as initial data everywhere."""
    return indicator_density(0.0, 0.25, 4.0, grid)


def moment(m, k: int = 2) -> float:
    """``int x**k dm`` with midpoint quadrature on density cells."""
    m = as_measure(m)
    val = float(np.sum(m.atom_masses * m.atom_locations**k))
    if m.density is not None:
        g = m.density.grid
        val += g.h * float(np.sum(m.density.values * g.centers**k))
    return val


# -- CSV ---------------------------------------------------------------------

def write_measure_csv(path, m) -> Path:
    """Write ``x,rho`` rows for the density and ``!atom,location,mass`` rows.

    A ``!grid,left,right,n_cells`` row records the grid so that reading the
    file back reproduces the measure bit for bit.
    """
    m = as_measure(m)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "rho"])
        if m.density is not None:
            g = m.density.grid
            w.writerow(["!grid", repr(float(g.left)), repr(float(g.right)), g.n_cells])
            for x, r in zip(g.centers, m.density.values):
                w.writerow([repr(float(x)), repr(float(r))])
        for x, a in zip(m.atom_locations, m.atom_masses):
            w.writerow(["!atom", repr(float(x)), repr(float(a))])
    return path


def read_measure_csv(path) -> MixedMeasure:
    grid = None
    rho = []
    atoms = []
    with Path(path).open(newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        if header != ["x", "rho"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in rows:
            if not row:
                continue
            if row[0] == "!grid":
                grid = Grid1D(float(row[1]), float(row[2]), int(row[3]))
            elif row[0] == "!atom":
                atoms.append((float(row[1]), float(row[2])))
            else:
                rho.append(float(row[1]))
    density = None
    if rho:
        if grid is None:
            raise ValueError(f"{path}: density rows without a !grid row")
        density = DensityField(grid, np.array(rho))
    loc = np.array([a[0] for a in atoms])
    mass = np.array([a[1] for a in atoms])
    return MixedMeasure(loc, mass, density)
