"""Batch drivers: early-time tables, long runs, minimizer sweeps and rates.

Every driver writes plain CSV (fixed column order, ``%.6e``) into the output
directory and returns the rows it wrote, so tests can check numbers without
re-reading files. Figures, when requested, are rendered next to the CSVs by
:mod:`swarmlab.plotting`.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import equilibria
from .fv import FVConfig, FVTrajectory, run_fv
from .measures import DEFAULT_CELLS, DOMAIN, Grid1D, initial_density, write_measure_csv
from .particles import ParticleSolverConfig, ParticleTrajectory, initial_particles, run
from .potentials import C0, C2, PotentialSpec
from .transport import w2_mixed

EXPERIMENTS = ("early", "longrun", "minimizers", "rate")

# times at which the early tables are reported
TABLE_TIMES = {C2: (0.5, 1.0, 5.0), C0: (0.1, 0.5, 3.0)}
DEFAULT_NUS = {
    "early": (1e-3, 1e-4, 1e-5, 1e-6, 1e-7),
    "longrun": (1e-5, 1e-7),
    "minimizers": (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
    "rate": (1e-3, 1e-4, 1e-5),
}
LONGRUN_T_END = {C2: 16.0, C0: 10.0}


@dataclass
class ExperimentConfig:
    """Everything a driver needs; JSON documents map one-to-one onto fields."""

    experiment: str = "early"
    potential: str = C2
    nus: tuple = ()
    m_exp: float = 2.0
    alpha: float = 1.0
    output_times: tuple = ()
    out_dir: str = "results"
    seeds: tuple = (0,)  # for the randomized property suites; solvers are deterministic
    cells: int = DEFAULT_CELLS
    n_particles: int = 200
    particle_dt: float = 1e-3
    cfl: float = 0.4
    t_end: float | None = None
    snapshot_dt: float = 0.1
    particle_t_end: float = 200.0
    rate_time: float | None = None
    workers: int = 1
    figures: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        PotentialSpec.parse(self.potential)
        if not self.nus:
            self.nus = DEFAULT_NUS[self.experiment]
        self.nus = tuple(float(v) for v in self.nus)
        if any(b >= a for a, b in zip(self.nus, self.nus[1:])):
            raise ValueError("nu list must be strictly decreasing")
        if any(v <= 0 for v in self.nus):
            raise ValueError("nu values must be positive")
        if not self.output_times:
            self.output_times = TABLE_TIMES[self.potential]
        self.output_times = tuple(float(t) for t in self.output_times)
        if any(b <= a for a, b in zip(self.output_times, self.output_times[1:])):
            raise ValueError("output times must be strictly increasing")
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.cells < 2:
            raise ValueError("need at least two cells")

    @property
    def spec(self) -> PotentialSpec:
        return PotentialSpec.parse(self.potential)

    @property
    def grid(self) -> Grid1D:
        return Grid1D(*DOMAIN, self.cells)

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text()) if path else {}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


@dataclass
class RateEstimate:
    slope: float
    intercept: float
    beta: float
    t: float
    n_points: int
    monotone: bool

    @property
    def reference(self) -> float:
        """``beta / 2``: the exponent of ``nu`` in the distance bound."""
        return 0.5 * self.beta


@dataclass
class LongrunResult:
    nu: float
    series: list
    events: list
    argmin_t: float
    min_w2_to_mubar: float
    max_mass_drift: float = 0.0
    min_density: float = 0.0


@dataclass
class LongrunReport:
    runs: list = field(default_factory=list)
    particle_equilibrium: bool = False
    particle_equilibrium_time: float | None = None
    files: list = field(default_factory=list)


class SolverFailure(RuntimeError):
    """A solver failed inside a sweep; carries the offending parameters."""

    def __init__(self, msg, **context):
        super().__init__(msg)
        self.context = context

    def record(self) -> dict:
        return {"error": type(self.__cause__).__name__ if self.__cause__ else "SolverFailure",
                "message": str(self), **self.context}


def theoretical_beta(alpha: float = 1.0, m: float = 2.0, d: int = 1) -> float:
    """``min(alpha - d m / (d + 2), 1 / (d + 2))``."""
    return min(alpha - d * m / (d + 2.0), 1.0 / (d + 2.0))


def _fmt(v) -> str:
    return f"{v:.6e}"


def _write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# -- solvers shared by the drivers ---------------------------------------------

def particle_run(cfg: ExperimentConfig, times, t_end=None, stop=False) -> ParticleTrajectory:
    times = tuple(times)
    pcfg = ParticleSolverConfig(n_particles=cfg.n_particles, dt=cfg.particle_dt,
                                t_end=t_end if t_end is not None else times[-1],
                                potential=cfg.spec, output_times=times,
                                stop_at_equilibrium=stop)
    return run(initial_particles(cfg.n_particles), pcfg)


def fv_run(cfg: ExperimentConfig, nu: float, times) -> FVTrajectory:
    times = tuple(times)
    fcfg = FVConfig(grid=cfg.grid, nu=nu, alpha=cfg.alpha, m=cfg.m_exp, cfl=cfg.cfl,
                    t_end=times[-1], potential=cfg.spec, output_times=times)
    return run_fv(initial_density(cfg.grid), fcfg)


# -- early-time tables -----------------------------------------------------------

def _early_one(args):
    cfg, nu, ptraj = args
    try:
        traj = fv_run(cfg, nu, cfg.output_times)
    except Exception as exc:  # re-raised with the offending nu attached
        raise SolverFailure(f"finite-volume run failed at nu={nu:g}: {exc}", nu=nu) from exc
    rows = []
    for t in cfg.output_times:
        rows.append((nu, t, w2_mixed(traj.at(t), ptraj.at(t))))
    return rows, traj.max_mass_drift, traj.min_density


def early_table(cfg: ExperimentConfig):
    """Rows ``(nu, t, w2)`` without touching the file system."""
    ptraj = particle_run(cfg, cfg.output_times)
    results = _map(_early_one, [(cfg, nu, ptraj) for nu in cfg.nus], cfg.workers)
    return [row for rows, _, _ in results for row in rows]


def run_early(cfg: ExperimentConfig):
    """Distance between diffusive and plain solutions at the table times.

    Writes ``early_<potential>.csv`` with columns ``nu,t,w2``.
    """
    rows = early_table(cfg)
    out = Path(cfg.out_dir)
    path = _write_csv(out / f"early_{cfg.potential}.csv", ["nu", "t", "w2"], rows)
    files = [path]
    if cfg.figures:
        from .plotting import plot_early
        files.append(plot_early(rows, out / f"early_{cfg.potential}.png", cfg.potential))
    return rows, files


def pivot(rows):
    """``{nu: {t: w2}}`` from early-table rows."""
    table: dict = {}
    for nu, t, w in rows:
        table.setdefault(float(nu), {})[float(t)] = float(w)
    return table


# -- long runs --------------------------------------------------------------------

def _longrun_times(cfg):
    t_end = cfg.t_end if cfg.t_end is not None else LONGRUN_T_END[cfg.potential]
    n = int(round(t_end / cfg.snapshot_dt))
    return tuple(float(v) for v in np.round(np.arange(n + 1) * cfg.snapshot_dt, 12))


def _longrun_one(args):
    cfg, nu, times, ptraj, mubar = args
    try:
        traj = fv_run(cfg, nu, times)
    except Exception as exc:
        raise SolverFailure(f"finite-volume run failed at nu={nu:g}: {exc}", nu=nu) from exc
    series = []
    for t, snap, e in zip(traj.times, traj.snapshots, traj.energies):
        series.append((t, w2_mixed(snap, ptraj.at(t)), w2_mixed(snap, mubar), e.total))
    d = [row[2] for row in series]
    i = int(np.argmin(d))
    return LongrunResult(nu, series, list(traj.events), series[i][0], d[i],
                         traj.max_mass_drift, traj.min_density), traj


def run_longrun(cfg: ExperimentConfig) -> LongrunReport:
    """Long-time comparison with the plain model and its limiting equilibrium.

    The plain model is first integrated to ``particle_t_end`` (stopping early
    at equilibrium) and its final state is taken as the equilibrium ``mubar``.
    If the particle speeds never drop below tolerance the report is flagged
    and the series are still written.
    """
    times = _longrun_times(cfg)
    pcfg_end = max(cfg.particle_t_end, times[-1])
    long = particle_run(cfg, (0.0, pcfg_end), t_end=pcfg_end, stop=True)
    mubar = long.states[-1]
    if not long.equilibrium:
        warnings.warn(f"plain model not at equilibrium by t={pcfg_end:g} "
                      f"(max speed {long.max_speeds[-1]:.3e})", RuntimeWarning, stacklevel=2)
    ptraj = particle_run(cfg, times)

    report = LongrunReport(particle_equilibrium=long.equilibrium,
                           particle_equilibrium_time=long.equilibrium_time)
    out = Path(cfg.out_dir)
    tag = f"longrun_{cfg.potential}"
    report.files.append(write_measure_csv(out / f"{tag}_mubar.csv", mubar))
    report.files.append(ptraj.write_summary_csv(out / f"{tag}_particles.csv"))
    results = _map(_longrun_one, [(cfg, nu, times, ptraj, mubar) for nu in cfg.nus], cfg.workers)
    for res, traj in results:
        report.runs.append(res)
        name = f"{tag}_nu{res.nu:.0e}"
        report.files.append(_write_csv(out / f"{name}.csv",
                                       ["t", "w2_to_particle", "w2_to_mubar", "energy_total"],
                                       res.series))
        report.files.append(traj.write_summary_csv(out / f"{name}_summary.csv"))
    event_rows = []
    for res in report.runs:
        first = res.events[0] if res.events else math.nan
        event_rows.append((res.nu, first, res.argmin_t, res.min_w2_to_mubar,
                           int(report.particle_equilibrium)))
    report.files.append(_write_csv(
        out / f"{tag}_events.csv",
        ["nu", "first_transfer", "argmin_t", "min_w2_to_mubar", "particle_equilibrium"],
        event_rows))
    if cfg.figures:
        from .plotting import plot_longrun
        report.files.extend(plot_longrun(report, ptraj, out, tag))
    return report


# -- minimizers ---------------------------------------------------------------------

def minimizer_table(cfg: ExperimentConfig):
    """Rows for each solved ``nu`` and the error that truncated the sweep."""
    solved, failure = equilibria.sweep(cfg.nus)
    rows = []
    for eq in solved:
        s = eq.s
        rows.append((eq.nu, eq.c1, eq.c2, eq.L, abs(eq.mass - 1.0),
                     equilibria.w2_to_plain_minimizer(eq),
                     eq.c1 * math.exp(eq.L / s), eq.c1 * math.exp((eq.L - 1e-2) / s)))
    return rows, solved, failure


MINIMIZER_COLUMNS = ["nu", "c1", "c2", "L", "mass_residual", "w2_to_plain_minimizer",
                     "c1_exp_L", "c1_exp_L_minus_0.01"]


def run_minimizers(cfg: ExperimentConfig):
    """Sweep of diffusive minimizers; writes ``minimizers.csv``.

    A conditioning failure truncates the sweep; the failure is returned (and
    written to ``minimizers_truncated.json``) rather than raised, since running
    out of double precision at small ``nu`` is the expected outcome.
    """
    rows, solved, failure = minimizer_table(cfg)
    out = Path(cfg.out_dir)
    files = [_write_csv(out / "minimizers.csv", MINIMIZER_COLUMNS, rows)]
    record = None
    if failure is not None:
        nu, exc = failure
        record = {"error": type(exc).__name__, "nu": nu, "message": str(exc)}
        path = out / "minimizers_truncated.json"
        path.write_text(json.dumps(record, indent=2) + "\n")
        files.append(path)
    if cfg.figures and solved:
        from .plotting import plot_minimizers
        files.extend(plot_minimizers(solved, rows, out))
    return rows, record, files


# -- rates ---------------------------------------------------------------------------

def estimate_rate(rows, t: float, alpha: float = 1.0, m: float = 2.0) -> RateEstimate:
    """Least-squares slope of ``log w2`` against ``log nu`` at time ``t``.

    A non-monotone column still yields a slope, with a :class:`RuntimeWarning`
    and ``monotone=False``.
    """
    col = sorted((nu, w) for nu, tt, w in rows if abs(tt - t) < 1e-12)
    if len(col) < 3:
        raise ValueError(f"need at least 3 nu values at t={t:g}, got {len(col)}")
    nu = np.array([c[0] for c in col])
    w = np.array([c[1] for c in col])
    if np.any(w <= 0):
        raise ValueError("distances must be positive for a log fit")
    slope, intercept = np.polyfit(np.log(nu), np.log(w), 1)
    if not np.isfinite(slope):
        raise ValueError("slope is not finite")
    monotone = bool(np.all(np.diff(w) > 0))
    if not monotone:
        warnings.warn(f"distance column at t={t:g} is not monotone in nu", RuntimeWarning,
                      stacklevel=2)
    return RateEstimate(float(slope), float(intercept), theoretical_beta(alpha, m), float(t),
                        len(col), monotone)


def run_rate(cfg: ExperimentConfig):
    """Early table at one time followed by a log-log fit; writes ``rate_<potential>.csv``."""
    t = cfg.rate_time if cfg.rate_time is not None else cfg.output_times[0]
    sub = ExperimentConfig(**{**asdict(cfg), "experiment": "early", "output_times": (t,)})
    rows = early_table(sub)
    est = estimate_rate(rows, t, cfg.alpha, cfg.m_exp)
    out = Path(cfg.out_dir)
    files = [
        _write_csv(out / f"rate_{cfg.potential}_points.csv", ["nu", "t", "w2"], rows),
        _write_csv(out / f"rate_{cfg.potential}.csv",
                   ["t", "slope", "intercept", "beta", "beta_half", "n_points", "monotone"],
                   [(est.t, est.slope, est.intercept, est.beta, est.reference, est.n_points,
                     int(est.monotone))]),
    ]
    if cfg.figures:
        from .plotting import plot_rate
        files.append(plot_rate(rows, est, out / f"rate_{cfg.potential}.png"))
    return est, files
