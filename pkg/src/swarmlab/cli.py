"""Command-line entry point: ``swarmlab {early,longrun,minimizers,rate}``.

Configuration comes from an optional JSON file (``--config``); flags given on
the command line override it. On a solver failure the process exits with
status 1 and prints one JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import experiments as ex


def _nu_list(text: str):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty nu list")
    return tuple(vals)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmlab",
        description="Aggregation with and without nonlinear diffusion on [0, 1.5].")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--potential", choices=["c0", "c2"])
    common.add_argument("--nu", type=_nu_list, dest="nus",
                        help="diffusivities, comma or space separated, decreasing")
    common.add_argument("--m", type=float, dest="m_exp", help="diffusion exponent m > 1")
    common.add_argument("--alpha", type=float, help="diffusivity exponent")
    common.add_argument("--cells", type=int, help="finite-volume cells on [0, 1.5]")
    common.add_argument("--out", dest="out_dir", help="output directory")
    common.add_argument("--times", type=_nu_list, dest="output_times",
                        help="output times (early/rate)")
    common.add_argument("--particles", type=int, dest="n_particles")
    common.add_argument("--t-end", type=float, dest="t_end", help="long-run final time")
    common.add_argument("--workers", type=int, help="processes for the nu sweep")
    common.add_argument("--no-figures", action="store_false", dest="figures", default=None,
                        help="write CSVs only")

    sub = parser.add_subparsers(dest="experiment", required=True)
    sub.add_parser("early", parents=[common], help="distances at early table times")
    sub.add_parser("longrun", parents=[common], help="long runs, transfers, distance to mubar")
    sub.add_parser("minimizers", parents=[common], help="sweep of diffusive minimizers")
    rate = sub.add_parser("rate", parents=[common], help="log-log slope in nu")
    rate.add_argument("--at", type=float, dest="rate_time", help="time of the fitted column")
    return parser


def _config(args) -> ex.ExperimentConfig:
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    return ex.ExperimentConfig.from_json(args.config, **overrides)


def _emit_error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"status": "error", "error": kind, "message": message, **extra}),
          file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
    except (ValueError, TypeError, OSError) as exc:
        _emit_error("ConfigError", str(exc))
        return 2

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            summary = _run(cfg)
    except ex.SolverFailure as exc:
        _emit_error(**_failure(exc))
        return 1
    except Exception as exc:  # any other solver breakdown
        _emit_error(type(exc).__name__, str(exc), experiment=cfg.experiment)
        return 1
    summary["warnings"] = [str(w.message) for w in caught]
    print(json.dumps(summary, indent=2))
    return 0


def _failure(exc: ex.SolverFailure) -> dict:
    rec = exc.record()
    return {"kind": rec.pop("error"), "message": rec.pop("message"), **rec}


def _run(cfg: ex.ExperimentConfig) -> dict:
    if cfg.experiment == "early":
        rows, files = ex.run_early(cfg)
        return {"status": "ok", "rows": len(rows), "files": [str(f) for f in files]}
    if cfg.experiment == "longrun":
        rep = ex.run_longrun(cfg)
        return {
            "status": "ok",
            "particle_equilibrium": rep.particle_equilibrium,
            "runs": [{"nu": r.nu, "transfers": r.events[:5], "argmin_t": r.argmin_t,
                      "min_w2_to_mubar": r.min_w2_to_mubar} for r in rep.runs],
            "files": [str(f) for f in rep.files],
        }
    if cfg.experiment == "minimizers":
        rows, record, files = ex.run_minimizers(cfg)
        return {"status": "ok", "solved": [r[0] for r in rows], "truncated": record,
                "files": [str(f) for f in files]}
    est, files = ex.run_rate(cfg)
    return {"status": "ok", "t": est.t, "slope": est.slope, "beta": est.beta,
            "beta_half": est.reference, "monotone": est.monotone,
            "files": [str(f) for f in files]}


if __name__ == "__main__":
    sys.exit(main())
