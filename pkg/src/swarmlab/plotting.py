"""PNG figures rendered next to the experiment CSVs.

Uses the non-interactive Agg backend; every function writes files and closes
its figures, returning the paths.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .measures import as_measure  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "savefig.dpi": 120,
})


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_early(rows, path, potential: str = "") -> Path:
    """``w2`` against ``nu`` on log axes, one line per table time."""
    fig, ax = plt.subplots()
    times = sorted({t for _, t, _ in rows})
    for t in times:
        pts = sorted((nu, w) for nu, tt, w in rows if tt == t)
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"t = {t:g}")
    ax.set_xlabel(r"$\nu$")
    ax.set_ylabel(r"$d_W(\mu_\nu(t), \mu(t))$")
    ax.set_title(f"diffusive vs plain ({potential})")
    ax.legend()
    return _save(fig, path)


def plot_measure(ax, m, label=None, atom_scale: float = 10.0, **kw):
    """Density as a step curve, atoms as stems scaled by ``atom_scale``."""
    m = as_measure(m)
    line = None
    if m.density is not None:
        d = m.density
        (line,) = ax.step(d.grid.centers, d.values, where="mid", label=label, **kw)
        label = None
    if m.n_atoms:
        color = line.get_color() if line is not None else None
        ax.vlines(m.atom_locations, 0.0, atom_scale * m.atom_masses, colors=color, label=label)
        ax.plot(m.atom_locations, atom_scale * m.atom_masses, "o", color=color, ms=3)


def plot_longrun(report, ptraj, out_dir, tag: str) -> list:
    out_dir = Path(out_dir)
    files = []
    fig, (a, b) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    for res in report.runs:
        s = np.asarray(res.series)
        a.semilogy(s[:, 0], s[:, 1], label=fr"$\nu$ = {res.nu:.0e}")
        b.plot(s[:, 0], s[:, 3], label=fr"$\nu$ = {res.nu:.0e}")
    b.plot(ptraj.times, ptraj.energies, "k-", lw=1.2, label="particles")
    a.set_xlabel("t")
    a.set_ylabel("distance to plain solution")
    b.set_xlabel("t")
    b.set_ylabel("energy")
    a.legend()
    b.legend()
    files.append(_save(fig, out_dir / f"{tag}_w2_energy.png"))

    fig, ax = plt.subplots()
    for res in report.runs:
        s = np.asarray(res.series)
        (line,) = ax.semilogy(s[:, 0], s[:, 2], label=fr"$\nu$ = {res.nu:.0e}")
        ax.plot([res.argmin_t], [res.min_w2_to_mubar], "*", color=line.get_color(), ms=10)
        for t in res.events[:1]:
            ax.axvline(t, color=line.get_color(), ls=":", lw=1)
    ax.set_xlabel("t")
    ax.set_ylabel("distance to plain equilibrium")
    ax.legend()
    files.append(_save(fig, out_dir / f"{tag}_w2_mubar.png"))
    return files


def plot_minimizers(solved, rows, out_dir) -> list:
    out_dir = Path(out_dir)
    files = []
    fig, (a, b) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    for eq in solved:
        x = np.linspace(0.0, eq.L, 2001)
        a.plot(x, eq.density(x), label=fr"$\nu$ = {eq.nu:.0e}")
    a.plot([0, 0, 1, 1], [0, 1, 1, 0], "k--", lw=1, label="unit block")
    a.set_xlabel("x")
    a.set_ylabel("density")
    a.legend()
    nus = [r[0] for r in rows]
    b.loglog(nus, [r[5] for r in rows], "o-")
    b.set_xlabel(r"$\nu$")
    b.set_ylabel("distance to unit block")
    files.append(_save(fig, out_dir / "minimizers_profiles.png"))

    fig, (a, b) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    for col, name in ((1, "c1"), (2, "c2"), (3, "L")):
        a.semilogx(nus, [r[col] for r in rows], "o-", label=name)
    a.set_xlabel(r"$\nu$")
    a.legend()
    b.semilogx(nus, [r[6] for r in rows], "o-", label="at x = L")
    b.semilogx(nus, [r[7] for r in rows], "s-", label="at x = L - 0.01")
    b.set_xlabel(r"$\nu$")
    b.set_ylabel(r"$c_1 e^{x/s}$")
    b.legend()
    files.append(_save(fig, out_dir / "minimizers_constants.png"))
    return files


def plot_rate(rows, est, path) -> Path:
    fig, ax = plt.subplots()
    pts = sorted((nu, w) for nu, t, w in rows)
    nu = np.array([p[0] for p in pts])
    ax.loglog(nu, [p[1] for p in pts], "o", label="measured")
    ax.loglog(nu, np.exp(est.intercept) * nu**est.slope, "-",
              label=f"fit, slope {est.slope:.3f}")
    ax.set_xlabel(r"$\nu$")
    ax.set_ylabel(f"distance at t = {est.t:g}")
    ax.legend()
    return _save(fig, path)
