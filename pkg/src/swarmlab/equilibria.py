"""Equilibria and energy minimizers with the c0 potential.

For quadratic diffusion (``m = 2``, ``alpha = 1``) the minimizer of the
diffusive energy supported on ``[0, L]`` has the form

    rho(x) = c1 exp(x/s) + c2 exp(-x/s) + 1,    s = sqrt(2 nu),

because ``Lambda'' = 2 nu rho'' + 1 - rho`` must vanish on the support. The
three unknowns are fixed by a flat ``Lambda`` (``Lambda'(0) = 0``), unit mass
and ``rho(L) = 0``, solved here by damped Newton with continuation in ``nu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .energy import potential_field
from .measures import DensityField, Grid1D, MixedMeasure, as_measure, indicator_density
from .potentials import C0, PotentialSpec

RESIDUAL_TOL = 1e-10
MAX_NEWTON = 100
# c1 ~ -exp(-L/s) keeps full relative precision only above tiny/eps
EXP_LIMIT = -math.log(np.finfo(float).tiny / np.finfo(float).eps)


class ConvergenceError(RuntimeError):
    def __init__(self, msg, iterate=None, residual=None):
        super().__init__(msg)
        self.iterate = iterate
        self.residual = residual


class ConditioningError(RuntimeError):
    """The equilibrium system cannot be resolved in double precision."""


@dataclass(frozen=True)
class DiffusiveEquilibrium:
    nu: float
    c1: float
    c2: float
    L: float

    @property
    def s(self) -> float:
        return math.sqrt(2.0 * self.nu)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, self.L)
        val = self.c1 * np.exp(xc / self.s) + self.c2 * np.exp(-xc / self.s) + 1.0
        return np.where((x >= 0) & (x <= self.L), val, 0.0)

    def cumulative(self, x) -> np.ndarray:
        """``int_0^x rho``."""
        s = self.s
        xc = np.clip(np.asarray(x, dtype=float), 0.0, self.L)
        return (s * self.c1 * np.expm1(xc / s) + s * self.c2 * -np.expm1(-xc / s) + xc)

    def first_moment(self, x) -> np.ndarray:
        """``int_0^x y rho(y) dy``."""
        s = self.s
        xc = np.clip(np.asarray(x, dtype=float), 0.0, self.L)
        ep = np.exp(xc / s)
        em = np.exp(-xc / s)
        return (self.c1 * (s * ep * (xc - s) + s * s)
                + self.c2 * (s * s - s * em * (xc + s)) + 0.5 * xc * xc)

    def second_moment(self) -> float:
        s, L = self.s, self.L
        ep = math.exp(L / s)
        em = math.exp(-L / s)
        return (self.c1 * (s * ep * (L * L - 2 * s * L + 2 * s * s) - 2 * s**3)
                + self.c2 * (2 * s**3 - s * em * (L * L + 2 * s * L + 2 * s * s)) + L**3 / 3.0)

    @property
    def mass(self) -> float:
        return float(self.cumulative(self.L))

    def potential(self, x) -> np.ndarray:
        """``(K * rho)(x)`` for the c0 potential, in closed form, ``x >= 0``."""
        x = np.asarray(x, dtype=float)
        f0 = self.cumulative(x)
        f1 = self.first_moment(x)
        m0 = self.mass
        m1 = float(self.first_moment(self.L))
        m2 = self.second_moment()
        left = x * f0 - f1
        right = (m1 - f1) - x * (m0 - f0)
        return -0.5 * (left + right) + 0.5 * (x * x * m0 - 2.0 * x * m1 + m2)

    def to_density(self, grid: Grid1D | None = None) -> DensityField:
        """Exact cell averages on ``grid``."""
        grid = grid or Grid1D()
        e = grid.edges
        return DensityField(grid, np.diff(self.cumulative(e)) / grid.h)

    def to_measure(self, grid: Grid1D | None = None) -> MixedMeasure:
        return MixedMeasure(density=self.to_density(grid))


@dataclass
class LambdaProfile:
    """First variation sampled at ``x`` with multiplier estimate ``lam``."""

    x: np.ndarray
    values: np.ndarray
    lam: float
    support: np.ndarray

    @property
    def support_deviation(self) -> float:
        return float(np.max(np.abs(self.values[self.support] - self.lam)))

    @property
    def off_support_excess(self) -> float:
        """``min(Lambda - lam)`` outside the support (``inf`` if none)."""
        off = ~self.support
        return float(np.min(self.values[off] - self.lam)) if np.any(off) else math.inf


def plain_minimizer(grid: Grid1D | None = None) -> MixedMeasure:
    """The unit block on ``[0, 1]``, minimizer of the interaction energy."""
    return MixedMeasure(density=indicator_density(0.0, 1.0, 1.0, grid or Grid1D()))


def w2_to_plain_minimizer(eq: DiffusiveEquilibrium) -> float:
    """Exact distance from ``eq`` to the unit block on ``[0, 1]``.

    The block has quantile ``Q(u) = u``, so with ``F`` the cumulative mass of
    ``eq`` the squared distance is ``int_0^L (x - F(x))**2 rho(x) dx``.
    """
    def integrand(x):
        return (x - float(eq.cumulative(x))) ** 2 * float(eq.density(x))

    layer = min(30.0 * eq.s, 0.5 * eq.L)
    total = 0.0
    for a, b in ((0.0, layer), (layer, eq.L - layer), (eq.L - layer, eq.L)):
        if b > a:
            total += quad(integrand, a, b, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    return math.sqrt(max(total, 0.0))


def lambda_profile(measure, nu: float = 0.0, alpha: float = 1.0, m_exp: float = 2.0,
                   spec: PotentialSpec | None = None, x=None) -> LambdaProfile:
    """Energy per unit mass felt by a test particle.

    ``Lambda = nu**alpha m/(m-1) rho**(m-1) + K * mu``. For a
    :class:`DiffusiveEquilibrium` the profile is evaluated in closed form at
    ``x`` (default: default-grid centers); otherwise at the cell centers of the
    density by midpoint quadrature.
    """
    spec = spec or PotentialSpec(C0)
    if isinstance(measure, DiffusiveEquilibrium):
        if spec.kind != C0 or alpha != 1.0 or m_exp != 2.0:
            raise ValueError("closed-form profile needs the c0 potential with m=2, alpha=1")
        eq = measure
        x = Grid1D().centers if x is None else np.asarray(x, dtype=float)
        rho = eq.density(x)
        vals = 2.0 * eq.nu * rho + eq.potential(x)
        support = (x >= 0) & (x <= eq.L)
        weights = rho[support]
        lam = float(np.sum(weights * vals[support]) / np.sum(weights))
        return LambdaProfile(x, vals, lam, support)

    m = as_measure(measure)
    if m.density is None:
        if nu > 0:
            raise ValueError("diffusive first variation needs a density")
        x = m.atom_locations if x is None else np.asarray(x, dtype=float)
        vals = potential_field(m, spec, x)
        support = np.isin(x, m.atom_locations)
        w = np.interp(x[support], m.atom_locations, m.atom_masses) if support.any() else None
        lam = float(np.average(vals[support], weights=w)) if support.any() else math.nan
        return LambdaProfile(x, vals, lam, support)
    d = m.density
    x = d.grid.centers
    vals = potential_field(m, spec, x)
    if nu > 0:
        vals = vals + nu**alpha * m_exp / (m_exp - 1.0) * np.power(d.values, m_exp - 1.0)
    support = d.values > 0
    lam = float(np.sum(d.values[support] * vals[support]) / np.sum(d.values[support]))
    return LambdaProfile(x, vals, lam, support)


# -- nonlinear system ----------------------------------------------------------

def _moments(c1, c2, L, s):
    ep = math.exp(L / s)
    em = math.exp(-L / s)
    m0 = s * c1 * (ep - 1.0) - s * c2 * (em - 1.0) + L
    m1 = c1 * (s * ep * (L - s) + s * s) + c2 * (s * s - s * em * (L + s)) + 0.5 * L * L
    return ep, em, m0, m1


def equilibrium_residuals(c1: float, c2: float, L: float, nu: float) -> np.ndarray:
    """``(Lambda'(0), mass - 1, rho(L))`` for the exponential ansatz."""
    if not (L > 0 and nu > 0):
        raise ValueError("need L > 0 and nu > 0")
    s = math.sqrt(2.0 * nu)
    ep, em, m0, m1 = _moments(c1, c2, L, s)
    r1 = s * (c1 - c2) + 0.5 * m0 - m1
    r2 = m0 - 1.0
    r3 = c1 * ep + c2 * em + 1.0
    return np.array([r1, r2, r3])


def equilibrium_jacobian(c1: float, c2: float, L: float, nu: float) -> np.ndarray:
    s = math.sqrt(2.0 * nu)
    ep, em, _, _ = _moments(c1, c2, L, s)
    rho_L = c1 * ep + c2 * em + 1.0
    dm0 = np.array([s * (ep - 1.0), s * (1.0 - em), rho_L])
    dm1 = np.array([s * ep * (L - s) + s * s, s * s - s * em * (L + s), L * rho_L])
    dr1 = np.array([s, -s, 0.0]) + 0.5 * dm0 - dm1
    dr3 = np.array([ep, em, (c1 * ep - c2 * em) / s])
    return np.vstack([dr1, dm0, dr3])


def _check_conditioning(nu, L):
    s = math.sqrt(2.0 * nu)
    if L / s > EXP_LIMIT:
        raise ConditioningError(
            f"nu={nu:g}: exp(L/s) with L/s={L / s:.1f} exceeds double precision range")


def _newton(p, nu, tol=RESIDUAL_TOL, max_iter=MAX_NEWTON):
    """Damped Newton; keeps polishing past ``tol`` until progress stalls.

    The root is a fold (the Jacobian is singular there), so convergence is
    linear and the error in the null direction is about ``sqrt(residual)``.
    """
    p = np.array(p, dtype=float)
    r = equilibrium_residuals(*p, nu)
    norm = np.max(np.abs(r))
    for _ in range(max_iter):
        if norm <= 1e-15:
            break
        _check_conditioning(nu, p[2])
        J = equilibrium_jacobian(*p, nu)
        scale = np.max(np.abs(J), axis=0)
        scale[scale == 0] = 1.0
        try:
            step = np.linalg.solve(J / scale, -r) / scale
        except np.linalg.LinAlgError as exc:
            raise ConditioningError(f"nu={nu:g}: singular Jacobian") from exc
        lam = 1.0
        accepted = False
        while lam > 1e-6:
            trial = p + lam * step
            if trial[2] > 0:
                rt = equilibrium_residuals(*trial, nu)
                nt = np.max(np.abs(rt))
                if np.isfinite(nt) and nt < (1.0 - 1e-4 * lam) * norm:
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            break
        stalled = norm <= tol and nt > 0.5 * norm
        p, r, norm = trial, rt, nt
        if stalled:
            break
    if norm <= tol:
        return p, r
    raise ConvergenceError(f"nu={nu:g}: Newton stopped at residual {norm:.3e}", p, r)


def solve_equilibrium(nu: float, guess=None, start_nu: float = 1e-1,
                      steps_per_decade: int = 10) -> DiffusiveEquilibrium:
    """Equilibrium at ``nu`` by Newton, continued from ``start_nu`` without a guess."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    _check_conditioning(nu, guess[2] if guess is not None else 1.0)
    if guess is not None:
        p, _ = _newton(guess, nu)
        return DiffusiveEquilibrium(nu, *p)
    start = max(nu, start_nu)
    p, _ = _newton(_start_guess(start), start)
    eq = DiffusiveEquilibrium(start, *p)
    return eq if start == nu else _continue(eq, nu, steps_per_decade)


def _start_guess(nu):
    # coarse scan of L with c1, c2 eliminated through mass and rho(L) = 0
    s = math.sqrt(2.0 * nu)
    best = None
    for L in np.linspace(0.8, 2.0, 49):
        ep, em = math.exp(L / s), math.exp(-L / s)
        # rho(L) = 0 and mass = 1 are linear in (c1, c2)
        A = np.array([[ep, em], [s * (ep - 1.0), -s * (em - 1.0)]])
        c1, c2 = np.linalg.solve(A, [-1.0, 1.0 - L])
        r = abs(equilibrium_residuals(c1, c2, L, nu)[0])
        if best is None or r < best[0]:
            best = (r, c1, c2, L)
    return np.array(best[1:])


def sweep(nus, steps_per_decade: int = 10):
    """Solve along decreasing ``nus`` with warm starts; stops at the first failure.

    Returns ``(solved, error)`` where ``error`` is the exception that ended the
    sweep, or ``None``.
    """
    nus = sorted(nus, reverse=True)
    out = []
    prev = None
    for nu in nus:
        try:
            if prev is None:
                eq = solve_equilibrium(nu, steps_per_decade=steps_per_decade)
            else:
                eq = _continue(prev, nu, steps_per_decade)
        except (ConditioningError, ConvergenceError) as exc:
            return out, (nu, exc)
        out.append(eq)
        prev = eq
    return out, None


def _continue(eq: DiffusiveEquilibrium, nu: float, steps_per_decade: int) -> DiffusiveEquilibrium:
    _check_conditioning(nu, eq.L)
    n = max(1, int(math.ceil(steps_per_decade * math.log10(eq.nu / nu))))
    path = np.geomspace(eq.nu, nu, n + 1)
    p = np.array([eq.c1, eq.c2, eq.L])
    for prev, cur in zip(path[:-1], path[1:]):
        # carry c1 exp(L/s), which stays O(1), across the change of s
        a = p[0] * math.exp(p[2] / math.sqrt(2 * prev))
        _check_conditioning(cur, p[2])
        p, _ = _newton([a * math.exp(-p[2] / math.sqrt(2 * cur)), p[1], p[2]], cur)
    return DiffusiveEquilibrium(nu, *p)
