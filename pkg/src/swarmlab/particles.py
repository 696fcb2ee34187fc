"""Particle method for the plain aggregation model on an interval.

Each particle moves with ``v_i = -sum_j w_j K'(x_i - x_j)``. On a wall the
outward part of the velocity is removed (slip, no-flux): a particle may land on
the wall, stays there while pushed outward and leaves as soon as the field
points inward. Time stepping is forward Euler followed by clamping to the
domain.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .energy import interaction_energy
from .measures import DOMAIN, ParticleEnsemble
from .potentials import C2, PotentialSpec, eval_dK


@dataclass
class ParticleSolverConfig:
    n_particles: int = 200
    dt: float = 1e-3
    t_end: float = 5.0
    equilibrium_tol: float = 1e-8
    potential: PotentialSpec | None = field(default_factory=PotentialSpec)
    bounds: tuple = DOMAIN
    output_times: tuple | None = None
    stop_at_equilibrium: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if not self.equilibrium_tol > 0:
            raise ValueError("equilibrium_tol must be positive")


@dataclass
class ParticleTrajectory:
    times: list
    states: list
    energies: list
    max_speeds: list
    equilibrium: bool = False
    equilibrium_time: float | None = None

    def at(self, t: float) -> ParticleEnsemble:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise KeyError(f"no snapshot at t={t}")
        return self.states[i]

    def write_summary_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "energy", "max_speed"])
            for t, e, s in zip(self.times, self.energies, self.max_speeds):
                w.writerow([f"{t:.6e}", f"{e:.6e}", f"{s:.6e}"])
        return path


def initial_particles(n: int, a: float = 0.0, b: float = 0.25) -> ParticleEnsemble:
    """``n`` equal weights at the mid-quantiles of the uniform block on ``[a, b]``."""
    k = np.arange(1, n + 1)
    return ParticleEnsemble(a + (b - a) * (k - 0.5) / n, np.full(n, 1.0 / n))


@njit(cache=True)
def _velocity_kernel(x, w, smooth, eps):
    n = x.size
    v = np.empty(n)
    c3 = 1.0 / (4.0 * eps**3)
    c1 = 3.0 / (4.0 * eps)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            d = x[i] - x[j]
            if smooth and abs(d) <= eps:
                dk = d * d * d * c3 - c1 * d + d
            elif d > 0.0:
                dk = d - 0.5
            elif d < 0.0:
                dk = d + 0.5
            else:
                dk = 0.0
            acc += w[j] * dk
        v[i] = -acc
    return v


def velocities(e: ParticleEnsemble, spec: PotentialSpec | None) -> np.ndarray:
    """``-sum_j w_j K'(x_i - x_j)`` before projection; ``spec=None`` means ``K = 0``."""
    if spec is None:
        return np.zeros(e.n)
    return _velocity_kernel(e.positions, e.weights, spec.kind == C2, float(spec.epsilon))


def velocities_dense(e: ParticleEnsemble, spec: PotentialSpec) -> np.ndarray:
    """Same field through the vectorized potential; used as a cross-check."""
    x = e.positions
    return -(eval_dK(spec, x[:, None] - x[None, :]) @ e.weights)


def project(x, v, bounds=DOMAIN):
    """Drop the outward component of ``v`` at the walls."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    left, right = bounds
    if np.any((x < left) | (x > right)):
        raise ValueError("position outside the domain")
    out = np.where(((x <= left) & (v < 0)) | ((x >= right) & (v > 0)), 0.0, v)
    return out if out.ndim else float(out)


def step(e: ParticleEnsemble, cfg: ParticleSolverConfig, dt: float | None = None,
         v: np.ndarray | None = None) -> ParticleEnsemble:
    dt = cfg.dt if dt is None else dt
    if v is None:
        v = project(e.positions, velocities(e, cfg.potential), cfg.bounds)
    x = np.clip(e.positions + dt * v, *cfg.bounds)
    return ParticleEnsemble(x, e.weights)


def run(initial: ParticleEnsemble, cfg: ParticleSolverConfig) -> ParticleTrajectory:
    """Integrate to ``cfg.t_end``, recording snapshots at the output times.

    Stops early once the largest projected speed drops below
    ``cfg.equilibrium_tol``; the remaining output times then repeat the
    stationary state.
    """
    out_times = cfg.output_times
    if out_times is None:
        out_times = np.linspace(0.0, cfg.t_end, 11)
    out_times = [float(t) for t in out_times if t <= cfg.t_end + 1e-12]
    if any(b <= a for a, b in zip(out_times, out_times[1:])):
        raise ValueError("output times must be strictly increasing")

    spec = cfg.potential
    e = initial.copy()
    t = 0.0
    traj = ParticleTrajectory([], [], [], [])
    v = project(e.positions, velocities(e, spec), cfg.bounds)

    def record(time):
        traj.times.append(time)
        traj.states.append(e.copy())
        traj.energies.append(
            interaction_energy(e.to_measure(0.0), spec) if spec is not None else 0.0)
        traj.max_speeds.append(float(np.max(np.abs(v))) if v.size else 0.0)

    for target in out_times:
        span = target - t
        n = int(np.floor(span / cfg.dt + 1e-9))
        steps = [cfg.dt] * n
        if span - n * cfg.dt > 1e-12:
            steps.append(span - n * cfg.dt)
        for k, dt in enumerate(steps):
            if traj.equilibrium:
                break
            e = step(e, cfg, dt, v)
            v = project(e.positions, velocities(e, spec), cfg.bounds)
            if cfg.stop_at_equilibrium and np.max(np.abs(v)) < cfg.equilibrium_tol:
                traj.equilibrium = True
                traj.equilibrium_time = t + sum(steps[:k + 1])
        t = target
        record(target)
    return traj
