"""Command-line interface.

Exit codes: 0 success, 1 verification failure (verify-mmi only),
2 invalid input, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .complexity import complexity_report
from .data import estimate_covariance, fit_mvar, history_transfer_entropy, read_csv, write_csv
from .errors import EmptyGrid, GaussPidError, NumericalError, ValidationError
from .flows import FlowQuery, InfiniteLags, dynamic_mmi_pid, granger_causality, parse_lags, transfer_entropy
from .gaussian import CovarianceMatrix, InfoUnit
from .mvar import MvarModel, simulate
from .pid import GaussianTriplet, TripletSpec, linear_grid, mmi_pid, sweep_univariate
from .union import verify_mmi

SCHEMA_VERSION = "1"
GAP_LIMIT = 1e-5

EXIT_OK, EXIT_VERIFY, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3, 4

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("gausspid")


@dataclass(frozen=True)
class RunConfig:
    unit: InfoUnit = InfoUnit.NATS
    infinite_tol: float = 1e-10
    lag_mode: object = 1
    output_format: str = "json"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.infinite_tol <= 1e-4:
            raise ValidationError(f"--tol must lie in (0, 1e-4], got {self.infinite_tol}")
        if self.output_format not in ("json", "csv"):
            raise ValidationError(f"unknown output format {self.output_format!r}")
        object.__setattr__(self, "unit", InfoUnit.parse(self.unit))
        object.__setattr__(self, "lag_mode", parse_lags(self.lag_mode, self.infinite_tol))

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(unit=getattr(args, "unit", "nats"), infinite_tol=getattr(args, "tol", 1e-10),
                   lag_mode=getattr(args, "lags", 1), output_format=getattr(args, "format", "json"),
                   seed=getattr(args, "seed", 0))


# -- output helpers --------------------------------------------------------------

def _emit_json(payload: dict, unit: InfoUnit | None, lags_used, out) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "unit": None if unit is None else unit.value,
           "lags_used": lags_used, **payload}
    out.write(json.dumps(doc, indent=2) + "\n")


def _emit_csv(records: list[dict], out) -> None:
    if not records:
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})
    out.write(buf.getvalue())


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _var(token: str):
    return int(token) if token.lstrip("-").isdigit() else token


def _load_model(path: str) -> MvarModel:
    try:
        return MvarModel.load(path)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from None


def _load_covariance(path: str) -> CovarianceMatrix:
    """JSON file holding either a nested list or {"matrix": ..., "labels": [...]}."""
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from None
    if isinstance(doc, dict):
        if "matrix" not in doc:
            raise ValidationError(f"{path} has no 'matrix' key")
        return CovarianceMatrix(np.asarray(doc["matrix"], dtype=float), doc.get("labels"))
    return CovarianceMatrix(np.asarray(doc, dtype=float))


def _columns(cov: CovarianceMatrix, spec: str) -> tuple[int, ...]:
    out = []
    for tok in _split(spec):
        v = _var(tok)
        if isinstance(v, int):
            out.append(v)
        elif cov.labels is not None and v in cov.labels:
            out.append(cov.labels.index(v))
        else:
            raise ValidationError(f"unknown column {tok!r}")
    return tuple(out)


def _lags_used(lags) -> int | str:
    return "inf" if isinstance(lags, InfiniteLags) else lags


# -- commands --------------------------------------------------------------------

def cmd_pid_static(args, out) -> int:
    cfg = RunConfig.from_args(args)
    if args.cov:
        if any(v is not None for v in (args.a, args.b, args.c)):
            raise ValidationError("use either --a/--b/--c or --cov, not both")
        if not (args.target and args.source1 and args.source2):
            raise ValidationError("--cov needs --target, --source1 and --source2")
        cov = _load_covariance(args.cov)
        triplet = GaussianTriplet(cov, _columns(cov, args.target), _columns(cov, args.source1),
                                  _columns(cov, args.source2))
    else:
        if any(v is None for v in (args.a, args.b, args.c)):
            raise ValidationError("pid-static needs --a, --b and --c (or --cov)")
        triplet = TripletSpec(args.a, args.b, args.c)
    res = mmi_pid(triplet, cfg.unit)
    _emit_json(res.to_dict(), cfg.unit, None, out)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    cfg = RunConfig.from_args(args)
    grid = linear_grid(args.b_min, args.b_max, args.steps)
    workers = max(1, args.threads)
    if workers > 1 and len(grid) > 1:
        chunks = [grid[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda g: _sweep_safe(args.a, args.c, g, cfg.unit), chunks))
        rows = sorted((r for part in parts for r in part), key=lambda r: r["b"])
    else:
        rows = _sweep_safe(args.a, args.c, grid, cfg.unit)
    if not rows:
        raise EmptyGrid(f"no valid b in [{args.b_min}, {args.b_max}] for a={args.a}, c={args.c}")
    if cfg.output_format == "json":
        _emit_json({"a": args.a, "c": args.c, "rows": rows}, cfg.unit, None, out)
    else:
        _emit_csv(rows, out)
    return EXIT_OK


def _sweep_safe(a, c, grid, unit) -> list[dict]:
    try:
        return sweep_univariate(a, c, grid, unit).as_records()
    except EmptyGrid:
        return []


def cmd_pid_dynamic(args, out) -> int:
    cfg = RunConfig.from_args(args)
    m = _load_model(args.model)
    res = dynamic_mmi_pid(m, _var(args.target), _var(args.sourceA), _var(args.sourceB), cfg.lag_mode, cfg.unit)
    payload = res.to_dict()
    payload.pop("lags_used")
    payload |= {"target": args.target, "sourceA": args.sourceA, "sourceB": args.sourceB,
                "lags": _lags_used(cfg.lag_mode)}
    _emit_json(payload, cfg.unit, res.lags_used, out)
    return EXIT_OK


def cmd_te(args, out) -> int:
    cfg = RunConfig.from_args(args)
    if bool(args.model) == bool(args.data):
        raise ValidationError("te needs exactly one of --model or --data")
    cond = [_var(v) for v in _split(args.cond)] if args.cond else []
    measure = "granger_causality" if args.granger else "transfer_entropy"
    meta = {}
    if args.data:
        d = read_csv(args.data)
        if isinstance(cfg.lag_mode, InfiniteLags):
            # infinite past from data: fit an MVAR model and evaluate it analytically
            fit = fit_mvar(d, args.order)
            meta = {"estimator": "mvar_fit", "fit_order": args.order, "fit_stable": fit.stable}
            model = fit.model
        else:
            h = estimate_covariance(d, cfg.lag_mode)
            names = [d.labels[d.index(v)] for v in [args.source, args.target, *cond]]
            val = history_transfer_entropy(h, names[0], names[1], names[2:], cfg.unit, args.granger)
            meta = {"estimator": "sample_covariance", **h.metadata}
            return _emit_te(measure, args, cfg, val, meta, out)
    else:
        model = _load_model(args.model)
    q = FlowQuery(model, _var(args.source), _var(args.target), tuple(cond), cfg.lag_mode, cfg.unit)
    val = granger_causality(q) if args.granger else transfer_entropy(q)
    return _emit_te(measure, args, cfg, val, meta, out)


def _emit_te(measure, args, cfg, val, meta, out) -> int:
    payload = {"measure": measure, "source": args.source, "target": args.target,
               "conditionals": _split(args.cond) if args.cond else [],
               "lags": _lags_used(cfg.lag_mode), "value": val.value}
    if meta:
        payload["metadata"] = meta
    _emit_json(payload, cfg.unit, val.lags_used, out)
    return EXIT_OK


def cmd_complexity(args, out) -> int:
    cfg = RunConfig.from_args(args)
    m = _load_model(args.model)
    rep = complexity_report(m, cfg.lag_mode, cfg.unit, workers=max(1, args.threads))
    _emit_json(rep.to_dict(), cfg.unit, rep.lags_used, out)
    return EXIT_OK


def cmd_verify_mmi(args, out) -> int:
    cfg = RunConfig.from_args(args)
    records = verify_mmi(args.trials, args.seed, args.n, args.p, workers=max(1, args.threads))
    worst = max((abs(r["gap"]) for r in records), default=0.0)
    failed = [r["trial"] for r in records if not abs(r["gap"]) <= GAP_LIMIT]
    if cfg.output_format == "csv":
        _emit_csv(records, out)
    else:
        _emit_json({"trials": args.trials, "seed": args.seed, "gap_limit": GAP_LIMIT,
                    "max_abs_gap": worst, "failed_trials": failed, "records": records},
                   InfoUnit.NATS, None, out)
    if failed:
        log.error("%d of %d trials exceeded the gap limit %.0e", len(failed), len(records), GAP_LIMIT)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    m = _load_model(args.model)
    x = simulate(m, args.steps, seed=args.seed, burn_in=args.burn_in)
    write_csv(args.out, x, m.labels)
    log.info("wrote %d steps to %s", args.steps, args.out)
    return EXIT_OK


def cmd_fit(args, out) -> int:
    d = read_csv(args.data)
    fit = fit_mvar(d, args.order)
    fit.model.save(args.out)
    _emit_json({"stable": fit.stable, "spectral_radius": fit.spectral_radius, "order": args.order,
                "n_samples": fit.n_samples, "warnings": list(fit.warnings), "out": str(args.out)},
               None, None, out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gausspid", description="Gaussian partial information decomposition tools")
    sub = p.add_subparsers(dest="command", required=True)
    threads_default = os.cpu_count() or 1

    def common(sp, lags=False, fmt=False):
        sp.add_argument("--unit", choices=["nats", "bits"], default="nats")
        if lags:
            sp.add_argument("--lags", default="1", help="number of past lags, or 'inf'")
            sp.add_argument("--tol", type=float, default=1e-10, help="relative tolerance for --lags inf")
        if fmt:
            sp.add_argument("--format", choices=["json", "csv"], default="json")

    sp = sub.add_parser("pid-static", help="MMI PID of a static Gaussian triplet")
    common(sp)
    sp.add_argument("--a", type=float, help="corr(X, Y)")
    sp.add_argument("--b", type=float, help="corr(Y, Z)")
    sp.add_argument("--c", type=float, help="corr(X, Z)")
    sp.add_argument("--cov", help="JSON covariance file")
    sp.add_argument("--target")
    sp.add_argument("--source1")
    sp.add_argument("--source2")
    sp.set_defaults(func=cmd_pid_static)

    sp = sub.add_parser("sweep", help="net synergy and MMI PID along a grid of b")
    common(sp)
    sp.add_argument("--format", choices=["json", "csv"], default="csv")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--b-min", type=float, default=-0.99)
    sp.add_argument("--b-max", type=float, default=0.99)
    sp.add_argument("--steps", type=_positive_int, default=199)
    sp.add_argument("--threads", type=_positive_int, default=threads_default)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("pid-dynamic", help="MMI PID of two variables' pasts about a present")
    common(sp, lags=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--sourceA", required=True)
    sp.add_argument("--sourceB", required=True)
    sp.set_defaults(func=cmd_pid_dynamic)

    sp = sub.add_parser("te", help="transfer entropy or Granger causality")
    common(sp, lags=True)
    sp.add_argument("--model")
    sp.add_argument("--data")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--cond", help="comma-separated conditioning variables")
    sp.add_argument("--granger", action="store_true")
    sp.add_argument("--order", type=_positive_int, default=1, help="MVAR order fitted for --data with --lags inf")
    sp.set_defaults(func=cmd_te)

    sp = sub.add_parser("complexity", help="causal density, global TE and synergistic complexity")
    common(sp, lags=True)
    sp.set_defaults(lags="inf")
    sp.add_argument("--model", required=True)
    sp.add_argument("--threads", type=_positive_int, default=threads_default)
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("verify-mmi", help="check the optimizer against the MMI union-information bound")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--n", type=_positive_int, help="dimension of source Y (default: random in 1..3)")
    sp.add_argument("--p", type=_positive_int, help="dimension of source Z (default: random in 1..3)")
    sp.add_argument("--trials", type=_positive_int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=_positive_int, default=threads_default)
    sp.set_defaults(func=cmd_verify_mmi)

    sp = sub.add_parser("simulate", help="simulate an MVAR model to CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--steps", type=_positive_int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=1000)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="least-squares MVAR fit of CSV data")
    sp.add_argument("--data", required=True)
    sp.add_argument("--order", type=_positive_int, default=1)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_fit)
    return p


def _configure_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("GAUSSPID_LOG", "warn").strip().lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None, out=None) -> int:
    _configure_logging()
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ValidationError as e:
        log.error("%s", e)
        return EXIT_VALIDATION
    except NumericalError as e:
        log.error("%s", e)
        return EXIT_NUMERICAL
    except OSError as e:
        log.error("%s", e)
        return EXIT_IO
    except GaussPidError as e:
        log.error("%s", e)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
