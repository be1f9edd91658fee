"""Command line entry point: ``minorclt predict | simulate | verify``.

Exit codes: 0 all verdicts pass, 1 a statistical verdict failed,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import platform
import sys
from importlib import metadata
from pathlib import Path

from .ensembles import get_ensemble
from .functions import get_function
from .harness import (KNOWN_CHECKS, WORKERS_ENV, AllTrialsFailed, ConfigError, ExperimentConfig,
                      MCReport, convergence_sweep, gaussian_moment_suite, run_experiment, worker_count)
from .predictor import PredictionReport, predict
from .spectral import DomainError, Ratio, UnsupportedRegime
from .verify import VerifyReport, run_verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CONFIG_HEADER = "minorclt-config v1"
CSV_COLUMNS = ("N", "statistic", "value", "stderr", "predicted", "verdict")


class UsageError(Exception):
    pass


# -- config file -------------------------------------------------------------

def _csv_list(conv):
    def parse(raw):
        items = [s.strip() for s in raw.replace(";", ",").split(",")]
        return tuple(conv(s) for s in items if s)
    return parse


def _bool(raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


CONFIG_SCHEMA = {
    "ensemble": str,
    "function": str,
    "phi": float,
    "N_list": _csv_list(int),
    "trials": int,
    "seed": int,
    "eta0": float,
    "checks": _csv_list(str),
    "sweep": _bool,
}
REQUIRED_KEYS = ("ensemble", "function", "phi", "N_list", "trials", "seed")


def parse_config(text: str) -> dict:
    """Parse the flat ``key = value`` format.

    The first non-blank, non-comment line must be the version header
    ``minorclt-config v1``. Blank lines and ``#`` comments are ignored;
    unknown or repeated keys are errors.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != CONFIG_HEADER:
        raise ConfigError(f"config must start with the header line {CONFIG_HEADER!r}")
    out = {}
    for ln in lines[1:]:
        key, sep, raw = ln.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"expected 'key = value', got {ln!r}")
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}; known: {', '.join(CONFIG_SCHEMA)}")
        if key in out:
            raise ConfigError(f"duplicate config key {key!r}")
        try:
            out[key] = CONFIG_SCHEMA[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    return out


def format_config(cfg: dict) -> str:
    lines = [CONFIG_HEADER]
    for key in CONFIG_SCHEMA:
        if key not in cfg:
            continue
        v = cfg[key]
        if isinstance(v, (list, tuple)):
            v = ", ".join(str(a) for a in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


# -- output helpers ----------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_json(path: Path, obj, loader=None):
    """Write JSON and check that it parses back to the same object."""
    text = _dump(obj)
    path.write_text(text)
    back = json.loads(path.read_text())
    if back != json.loads(text) or (loader is not None and loader(back) != loader(obj)):
        raise RuntimeError(f"round-trip validation failed for {path}")


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(["" if v is None else v for v in (r[c] for c in CSV_COLUMNS)])
    return buf.getvalue()


def _write_csv(path: Path, rows):
    text = _csv_text(rows)
    path.write_text(text)
    with path.open(newline="") as fh:
        back = list(csv.reader(fh))
    expected = list(csv.reader(io.StringIO(text)))
    if back != expected or tuple(back[0]) != CSV_COLUMNS or any(len(r) != len(CSV_COLUMNS) for r in back):
        raise RuntimeError(f"round-trip validation failed for {path}")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _run_id(resolved: dict) -> str:
    return hashlib.sha256(_dump(resolved).encode()).hexdigest()[:12]


def _manifest(command, resolved, outputs):
    return {
        "command": command,
        "resolved_config": resolved,
        "seed": resolved.get("seed"),
        "code_version": _version(),
        "python": platform.python_version(),
        "started": _now(),
        "finished": None,
        "status": "running",
        "outputs": outputs,
    }


def _fmt(x):
    return None if x is None else repr(float(x))


# -- predict -----------------------------------------------------------------

def cmd_predict(args) -> int:
    # the regime is checked first so that a bad phi is reported as such
    ratio = Ratio(args.phi)
    if args.function is None:
        raise UsageError("predict needs a test function (-f LABEL)")
    f = get_function(args.function)
    ens = get_ensemble(args.ensemble)
    rep = predict(f, ratio, ens)
    d = rep.to_dict()
    sys.stdout.write(_dump(d))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        resolved = {"function": args.function, "phi": args.phi, "ensemble": args.ensemble}
        rid = _run_id(resolved)
        paths = {"manifest": f"{rid}.manifest.json", "report": f"{rid}.prediction.json"}
        man = _manifest("predict", resolved, paths)
        _write_json(out / paths["manifest"], man)
        d["manifest"] = paths["manifest"]
        _write_json(out / paths["report"], d,
                    loader=lambda x: PredictionReport.from_dict({k: v for k, v in x.items() if k != "manifest"}))
        man.update(finished=_now(), status="done")
        _write_json(out / paths["manifest"], man)
    return EXIT_OK


# -- simulate ----------------------------------------------------------------

def _resolve_simulate(args) -> dict:
    cfg = {"eta0": 1e-3, "checks": (), "sweep": False}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        cfg.update(parse_config(text))
    overrides = {
        "ensemble": args.ensemble, "function": args.function, "phi": args.phi,
        "N_list": tuple(args.N) if args.N else None, "trials": args.trials,
        "seed": args.seed, "eta0": args.eta0,
        "checks": tuple(args.checks) if args.checks is not None else None,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    missing = [k for k in REQUIRED_KEYS if k not in cfg]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    cfg["N_list"] = list(cfg["N_list"])
    cfg["checks"] = list(cfg["checks"])
    return cfg


def _rows(report: MCReport, moments, sweep, sweep_enforced):
    rows = []
    for s in report.per_N:
        def verdict(ok):
            return "na" if ok is None else ("pass" if ok else "fail")
        rows.append(dict(N=s.N, statistic="mean", value=_fmt(s.mean), stderr=_fmt(s.mean_se),
                         predicted=_fmt(s.omega), verdict=verdict(s.mean_ok)))
        rows.append(dict(N=s.N, statistic="variance", value=_fmt(s.variance), stderr=_fmt(s.variance_se),
                         predicted=_fmt(s.v_f), verdict=verdict(s.variance_ok)))
        for k, e in (("3", 0.0), ("4", 3.0), ("5", 0.0), ("6", 15.0)):
            mv = next((m for m in moments if m.N == s.N and str(m.order) == k), None)
            rows.append(dict(N=s.N, statistic=f"moment{k}", value=_fmt(s.moments[k]), stderr=None,
                             predicted=_fmt(e), verdict=mv.status if mv else "info"))
        rows.append(dict(N=s.N, statistic="failed_trials", value=s.failed, stderr=None,
                         predicted=0, verdict="info"))
        for name, count in s.check_violations.items():
            rows.append(dict(N=s.N, statistic=f"check_{name}", value=count, stderr=None,
                             predicted=0, verdict="pass" if count == 0 else "fail"))
    if sweep is not None:
        for key in ("mean", "variance"):
            mono = getattr(sweep, f"{key}_monotone")
            rows.append(dict(N="sweep", statistic=f"{key}_slope", value=_fmt(getattr(sweep, f"{key}_slope")),
                             stderr=None, predicted=None,
                             verdict=("pass" if mono else "fail") if sweep_enforced else "info"))
    return rows


def cmd_simulate(args) -> int:
    resolved = _resolve_simulate(args)
    cfg = ExperimentConfig(
        ensemble=resolved["ensemble"], function=resolved["function"], phi=resolved["phi"],
        N_list=resolved["N_list"], trials=resolved["trials"], seed=resolved["seed"],
        eta0=resolved["eta0"], checks=resolved["checks"])
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    rid = _run_id(resolved)
    paths = {"manifest": f"{rid}.manifest.json", "report": f"{rid}.report.json", "csv": f"{rid}.csv"}
    man = _manifest("simulate", resolved, paths)
    man["workers"] = worker_count()
    _write_json(out / paths["manifest"], man)

    report = run_experiment(cfg)
    moments = gaussian_moment_suite(report)
    sweep = None
    if len(cfg.N_list) >= 3:
        try:
            sweep = convergence_sweep(cfg, report)
        except ConfigError:
            sweep = None
    rows = _rows(report, moments, sweep, resolved["sweep"])

    doc = report.to_dict()
    doc["manifest"] = paths["manifest"]
    doc["run_id"] = rid
    doc["moment_suite"] = [m.__dict__ | {"ci": list(m.ci) if m.ci else None} for m in moments]
    doc["sweep"] = None if sweep is None else sweep.__dict__
    _write_json(out / paths["report"], doc,
                loader=lambda x: MCReport.from_dict(x).to_dict())
    _write_csv(out / paths["csv"], rows)
    failed = any(r["verdict"] == "fail" for r in rows)
    man.update(finished=_now(), status="fail" if failed else "pass")
    _write_json(out / paths["manifest"], man)
    for r in rows:
        print(",".join("" if r[c] is None else str(r[c]) for c in CSV_COLUMNS))
    print(f"wrote {out / paths['report']} and {out / paths['csv']}")
    return EXIT_FAIL if failed else EXIT_OK


# -- verify ------------------------------------------------------------------

def cmd_verify(args, w_func=None) -> int:
    kw = {} if w_func is None else {"w_func": w_func}
    rep = run_verify(grid=args.grid, **kw)
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (tol {c.tolerance:.0e})")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        resolved = {"grid": args.grid}
        rid = _run_id(resolved)
        paths = {"manifest": f"{rid}.manifest.json", "report": f"{rid}.verify.json"}
        man = _manifest("verify", resolved, paths)
        _write_json(out / paths["manifest"], man)
        d = rep.to_dict() | {"manifest": paths["manifest"]}
        _write_json(out / paths["report"], d, loader=lambda x: VerifyReport.from_dict(x).to_dict())
        man.update(finished=_now(), status="pass" if rep.passed else "fail")
        _write_json(out / paths["manifest"], man)
    print("verify: " + ("pass" if rep.passed else "FAIL"))
    return EXIT_OK if rep.passed else EXIT_FAIL


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="minorclt",
        description="Limits and Monte Carlo checks for Tr f(W~) - Tr f(W).",
        epilog=f"Set {WORKERS_ENV} to run trials in several processes.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("predict", help="deterministic mean and variance")
    pp.add_argument("-f", "--function")
    pp.add_argument("--phi", type=float, required=True)
    pp.add_argument("--ensemble", default="complex-gaussian")
    pp.add_argument("--out")
    pp.set_defaults(handler=cmd_predict)

    ps = sub.add_parser("simulate", help="Monte Carlo experiment")
    ps.add_argument("config", nargs="?", help="key-value config file")
    ps.add_argument("-f", "--function")
    ps.add_argument("--phi", type=float)
    ps.add_argument("--ensemble")
    ps.add_argument("--N", type=int, nargs="+")
    ps.add_argument("--trials", type=int)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--eta0", type=float)
    ps.add_argument("--checks", nargs="*", choices=KNOWN_CHECKS)
    ps.add_argument("--out")
    ps.set_defaults(handler=cmd_simulate)

    pv = sub.add_parser("verify", help="analytic property suite, no sampling")
    pv.add_argument("--grid", choices=("standard", "fine"), default="standard")
    pv.add_argument("--out")
    pv.set_defaults(handler=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.handler(args)
    except UnsupportedRegime as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError, KeyError, UsageError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except AllTrialsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
