"""Command-line front end: ingestion -> extraction -> diagnostics/risk reports.

Subcommands::

    hsvar extract  prices.csv --model constant --sigma 1 --out runs/x
    hsvar var      prices.csv --model proportional --sigma 1 --a0 1e-6 --a1 0.08 --b1 0.9 --confidence 0.99
    hsvar var      prices.csv ... --stressed --stressed-from 2020-02-01 --stressed-to 2020-06-30
    hsvar fit      prices.csv --model proportional --sigma 1 --stochvol garch
    hsvar diagnose prices.csv --model proportional --sigma 1

Options may come from a ``key = value`` config file (``--config``); flags
override the file. Reports are JSON with floats at 17 significant digits, so
identical config + input bytes produce byte-identical outputs. Exit codes:
0 success, 1 input/model error, 2 numerical failure; errors are printed as
a machine-readable JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import json as _json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import DEFAULT_LAGS, run_diagnostics
from .errors import ConstraintViolation, HsvarError
from .estimation import OptimOptions, fit_qmle
from .innovations import (
    extract_innovations,
    innovations_to_csv,
    scenarios_to_csv,
    simulate_scenarios,
    simulate_stressed_scenarios,
    volpath_to_csv,
)
from .risk import pnl_to_csv, var
from .timeseries import ingest_csv
from .volatility import spec_from_config, spec_to_config

_MODEL_KEYS = (
    "localvol.kind",
    "localvol.sigma",
    "localvol.alpha",
    "localvol.beta",
    "stochvol.kind",
    "stochvol.lambda",
    "stochvol.a0",
    "stochvol.a1",
    "stochvol.b1",
)


@dataclass
class RunConfig:
    """Fully resolved run description; echoed into every report."""

    input: str
    label: str = ""
    model_kv: dict = field(default_factory=dict)
    confidence: float = 0.99
    base_s0: float | None = None
    base_v0: float | None = None
    stressed: bool = False
    stressed_from: str | None = None
    stressed_to: str | None = None
    seed: int = 0
    out: str | None = None
    fit_free: tuple[str, ...] | None = None
    diag_lags: int = DEFAULT_LAGS
    diag_significance: float = 0.05
    pnl_csv: bool = False

    def echo(self) -> dict:
        return {
            "input": self.input,
            "label": self.label,
            "model": dict(sorted(self.model_kv.items())),
            "confidence": self.confidence,
            "base": {"s0": self.base_s0, "v0": self.base_v0},
            "stressed": {
                "enabled": self.stressed,
                "from": self.stressed_from,
                "to": self.stressed_to,
            },
            "seed": self.seed,
            "fit_free": list(self.fit_free) if self.fit_free else None,
            "diagnostics": {"lags": self.diag_lags, "significance": self.diag_significance},
        }


# ---------------------------------------------------------------------------
# Deterministic JSON (17 significant digits, sorted keys)
# ---------------------------------------------------------------------------


def render_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(f'{pad}  {_json.dumps(str(key))}: {render_json(obj[key], indent + 1)}')
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return _json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            return _json.dumps(str(obj))
        return format(obj, ".17g")
    if hasattr(obj, "isoformat"):
        return _json.dumps(obj.isoformat())
    return _json.dumps(str(obj))


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Config assembly
# ---------------------------------------------------------------------------


def parse_config_file(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConstraintViolation(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _build_config(args) -> RunConfig:
    kv: dict[str, str] = {}
    if args.config:
        kv = parse_config_file(Path(args.config).read_text(encoding="utf-8"))

    model_kv = {k: v for k, v in kv.items() if k in _MODEL_KEYS}
    flag_model = {
        "localvol.kind": args.model,
        "localvol.sigma": args.sigma,
        "localvol.alpha": args.alpha,
        "localvol.beta": args.beta,
        "stochvol.kind": args.stochvol,
        "stochvol.lambda": args.lam,
        "stochvol.a0": args.a0,
        "stochvol.a1": args.a1,
        "stochvol.b1": args.b1,
    }
    for key, value in flag_model.items():
        if value is not None:
            model_kv[key] = str(value)
    if "stochvol.kind" not in model_kv:
        if "stochvol.lambda" in model_kv:
            model_kv["stochvol.kind"] = "ewma"
        elif any(f"stochvol.{p}" in model_kv for p in ("a0", "a1", "b1")):
            model_kv["stochvol.kind"] = "garch"
        else:
            model_kv["stochvol.kind"] = "none"

    def pick(flag, key, cast, default):
        if flag is not None:
            return cast(flag)
        if key in kv:
            return cast(kv[key])
        return default

    free = pick(getattr(args, "free", None), "fit.free", str, None)
    return RunConfig(
        input=pick(args.input, "input", str, None),
        label=pick(args.label, "label", str, ""),
        model_kv=model_kv,
        confidence=pick(getattr(args, "confidence", None), "confidence", float, 0.99),
        base_s0=pick(args.base_s0, "base.s0", float, None),
        base_v0=pick(args.base_v0, "base.v0", float, None),
        stressed=bool(getattr(args, "stressed", False) or kv.get("stressed", "") == "true"),
        stressed_from=pick(getattr(args, "stressed_from", None), "stressed.from", str, None),
        stressed_to=pick(getattr(args, "stressed_to", None), "stressed.to", str, None),
        seed=pick(args.seed, "seed", int, 0),
        out=pick(args.out, "out", str, None),
        fit_free=tuple(p.strip() for p in free.split(",")) if free else None,
        diag_lags=pick(getattr(args, "lags", None), "diag.lags", int, DEFAULT_LAGS),
        diag_significance=pick(
            getattr(args, "significance", None), "diag.significance", float, 0.05
        ),
        pnl_csv=bool(getattr(args, "pnl_csv", False) or kv.get("pnl.csv", "") == "true"),
    )


def _resolve(config: RunConfig):
    if not config.input:
        raise ConstraintViolation("no input CSV given (positional argument or 'input' config key)")
    if not 0.5 < config.confidence < 1.0:
        raise ConstraintViolation(f"confidence must be in (0.5, 1), got {config.confidence}")
    data = Path(config.input).read_bytes()
    series = ingest_csv(data, label=config.label)
    lv, sv = spec_from_config(config.model_kv)
    # normalized echo: exact reproduction of the specs actually used
    config.model_kv = spec_to_config(lv, sv)
    digest = hashlib.sha256()
    digest.update(render_json(config.echo()).encode("utf-8"))
    digest.update(data)
    return series, lv, sv, digest.hexdigest()


def _out_dir(config: RunConfig, config_hash: str) -> Path:
    if config.out:
        return Path(config.out)
    return Path(f"hsvar-{config_hash[:12]}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_extract(config: RunConfig) -> int:
    series, lv, sv, config_hash = _resolve(config)
    innov, path = extract_innovations(series, lv, sv)
    out = _out_dir(config, config_hash)
    _write(out / "innovations.csv", innovations_to_csv(innov))
    _write(out / "volpath.csv", volpath_to_csv(path, series.dates))
    print(str(out / "innovations.csv"))
    print(str(out / "volpath.csv"))
    return 0


def cmd_var(config: RunConfig) -> int:
    series, lv, sv, config_hash = _resolve(config)
    if config.stressed:
        if config.stressed_from is None and config.stressed_to is None:
            raise ConstraintViolation("stressed mode needs --stressed-from/--stressed-to")
        sub = series.restrict(config.stressed_from, config.stressed_to)
        innov, _ = extract_innovations(sub, lv)
        s0 = float(series.values[-1]) if config.base_s0 is None else config.base_s0
        scen = simulate_stressed_scenarios(innov, sub, lv, base_s0=s0)
        report = var(scen, config.confidence)
    else:
        innov, path = extract_innovations(series, lv, sv)
        base = None
        if config.base_s0 is not None or config.base_v0 is not None:
            s0 = series.values[-1] if config.base_s0 is None else config.base_s0
            v0 = path.values[-1] if config.base_v0 is None else config.base_v0
            base = (float(s0), float(v0))
        scen = simulate_scenarios(innov, path, series, base=base)
        report = var(scen, config.confidence)
    payload = {
        "confidence": report.confidence,
        "var": report.var_value,
        "n_scenarios": report.n_scenarios,
        "mode": report.mode,
        "quantile_rule": report.quantile_rule,
        "model_echo": config.model_kv,
        "config": config.echo(),
        "config_hash": config_hash,
    }
    out = _out_dir(config, config_hash)
    _write(out / "var_report.json", render_json(payload) + "\n")
    _write(out / "scenarios.csv", scenarios_to_csv(scen))
    if config.pnl_csv:
        _write(out / "pnl.csv", pnl_to_csv(scen))
    print(str(out / "var_report.json"))
    return 0


def cmd_fit(config: RunConfig) -> int:
    series, lv, sv, config_hash = _resolve(config)
    fit = fit_qmle(
        series,
        lv,
        sv,
        free=config.fit_free,
        opts=OptimOptions(seed=config.seed),
    )
    payload = {
        "parameters": fit.params,
        "model": spec_to_config(fit.local_vol, fit.stoch_vol),
        "loglik": fit.loglik,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "gradient_norm": fit.gradient_norm,
        "n_obs": fit.n_obs,
        "starts": list(fit.starts),
        "config": config.echo(),
        "config_hash": config_hash,
    }
    out = _out_dir(config, config_hash)
    _write(out / "fit_report.json", render_json(payload) + "\n")
    print(str(out / "fit_report.json"))
    return 0


def cmd_diagnose(config: RunConfig) -> int:
    series, lv, sv, config_hash = _resolve(config)
    innov, _ = extract_innovations(series, lv, sv)
    report = run_diagnostics(
        innov.values, lags=config.diag_lags, significance=config.diag_significance
    )
    payload = dict(report)
    payload["config"] = config.echo()
    payload["config_hash"] = config_hash
    out = _out_dir(config, config_hash)
    _write(out / "diagnostics.json", render_json(payload) + "\n")
    print(str(out / "diagnostics.json"))
    return 0


_COMMANDS = {
    "extract": cmd_extract,
    "var": cmd_var,
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("input", nargs="?", help="price/rate CSV with header date,value")
        p.add_argument("--config", help="key = value config file; flags override it")
        p.add_argument("--label", default=None)
        p.add_argument("--model", choices=["constant", "proportional", "displaced"])
        p.add_argument("--sigma", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--stochvol", choices=["none", "ewma", "garch"])
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--a0", type=float)
        p.add_argument("--a1", type=float)
        p.add_argument("--b1", type=float)
        p.add_argument("--base-s0", dest="base_s0", type=float)
        p.add_argument("--base-v0", dest="base_v0", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if name == "var":
            p.add_argument("--confidence", type=float)
            p.add_argument("--stressed", action="store_true")
            p.add_argument("--stressed-from", dest="stressed_from")
            p.add_argument("--stressed-to", dest="stressed_to")
            p.add_argument("--pnl-csv", dest="pnl_csv", action="store_true")
        if name == "fit":
            p.add_argument("--free", help="comma-separated parameter names to optimize")
        if name == "diagnose":
            p.add_argument("--lags", type=int)
            p.add_argument("--significance", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _build_config(args)
        return _COMMANDS[args.command](config)
    except HsvarError as exc:
        print(render_json({"error": exc.payload()}))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
