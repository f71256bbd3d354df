"""Command-line experiment runner.

Usage::

    purity-vqa fig2 --phi-grid 0.1:3.0:0.1 --out runs/fig2
    purity-vqa fig3 --n 3,6,9 --workers 4
    purity-vqa bpl-scan --family sphere --R 2:20 --k 4
    purity-vqa rank --state product:1.0:3
    purity-vqa oracle --state random:4:7 --sigma mixed:4

Every command resolves its configuration as defaults < ``--config`` JSON
file < command-line flags, echoes the resolved configuration into
``<out>/record.json`` and writes the rows to ``<out>/data.csv``. On failure a
JSON error object is printed to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import traceback
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, applications, experiments
from .ansatz import eigenbasis_sphere, product_diagonal, product_diagonal_family, diagonal_qubit_family
from .errors import ConfigInvalid, PurityVQAError
from .kernels import BACKEND
from .optimizer import OptimizerConfig
from .state import DensityMatrix, exact_oracles, maximally_mixed, qubit_diagonal, random_density_matrix, tensor

SEED_ENV = "PURITY_VQA_SEED"

# -- schema -----------------------------------------------------------------

FLOAT, INT, STR, GRID, BOOL = "float", "int", "str", "grid", "bool"


@dataclass(frozen=True)
class Field:
    kind: str
    default: Any
    optional: bool = False
    choices: tuple = ()
    help: str = ""


def _common(pipeline: bool) -> dict[str, Field]:
    out = {
        "seed": Field(INT, None, help=f"global seed (default ${SEED_ENV} or 0)"),
        "out": Field(STR, None, optional=True, help="output directory (default out/<command>)"),
        "workers": Field(INT, None, optional=True, help="thread-pool size for sweep points"),
    }
    if pipeline:
        out["shots"] = Field(INT, None, optional=True, help="SWAP-test shots per estimate (default: exact)")
    return out


_FAMILY = Field(STR, "auto", choices=("auto", "sphere", "product"), help="ansatz family for each stage")
_STATE = Field(STR, "qubit:1.0", help="qubit:PHI | product:PHI:N | mixed:D | random:D[:SEED] | diag:a,b,... | FILE.json")

SCHEMAS: dict[str, dict[str, Field]] = {
    "fig2": {
        "phi_grid": Field(GRID, "0.1:3.0:0.1"),
        "alpha": Field(FLOAT, 0.5),
    },
    "fig3": {
        "n": Field(GRID, "3,6,9", help="qubit counts"),
        "phi_grid": Field(GRID, "0.1:3.0:0.1"),
        "alpha": Field(FLOAT, 0.5),
    },
    "landscape": {
        "lam": Field(FLOAT, 0.5),
        "k": Field(INT, 1),
        "points": Field(INT, 101),
        "mu": Field(FLOAT, None, optional=True, help="ansatz spectrum (default: fully expressive)"),
    },
    "bpl-scan": {
        "family": Field(STR, "sphere", choices=("sphere", "product")),
        "R": Field(GRID, "2:20:1", help="ranks (sphere family)"),
        "n": Field(GRID, "2:10:1", help="qubit counts (product family)"),
        "k": Field(INT, 4),
        "lam": Field(FLOAT, 0.75, help="lambda_1 (product family)"),
        "samples": Field(INT, 2000),
        "fd_step": Field(FLOAT, 0.005),
    },
    "bpl-correlated": {
        "n": Field(GRID, "3:8:1"),
        "lam": Field(GRID, "0.6,0.75,0.9"),
        "delta": Field(GRID, "0.02,0.05"),
        "samples": Field(INT, 2000),
        "fd_step": Field(FLOAT, 0.005),
        "slope_n": Field(GRID, "6:14:1"),
    },
    "rank": {"state": _STATE, "family": _FAMILY},
    "entropy": {
        "state": _STATE,
        "alpha": Field(FLOAT, 0.5),
        "kind": Field(STR, "renyi", choices=("renyi", "tsallis")),
        "family": _FAMILY,
    },
    "fidelity": {"state": _STATE, "sigma": Field(STR, "mixed"), "family": _FAMILY},
    "qfi": {
        "path": Field(STR, "qubit", help="qubit | product:N  (diagonal family rho_theta)"),
        "theta": Field(FLOAT, math.pi / 2),
        "delta": Field(FLOAT, 1e-2),
        "family": _FAMILY,
    },
    "frac-power": {"state": _STATE, "alpha": Field(FLOAT, 0.5), "family": _FAMILY},
    "learn-state": {"state": _STATE, "family": _FAMILY},
    "oracle": {"state": _STATE, "sigma": Field(STR, None, optional=True), "alpha": Field(FLOAT, 0.5)},
}
PIPELINES = {"fig2", "fig3", "rank", "entropy", "fidelity", "qfi", "frac-power", "learn-state"}
OPTIMIZER_FIELDS = {f.name: f for f in fields(OptimizerConfig)}


def schema_for(command: str) -> dict[str, Field]:
    return {**SCHEMAS[command], **_common(command in PIPELINES)}


def _coerce(name: str, spec: Field, value):
    if value is None:
        if spec.optional or spec.default is None:
            return None
        raise ConfigInvalid(f"{name}: null is not allowed")
    try:
        if spec.kind == FLOAT:
            if isinstance(value, bool):
                raise TypeError
            value = float(value)
            if not math.isfinite(value):
                raise ValueError
        elif spec.kind == INT:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            value = int(value)
        elif spec.kind == BOOL:
            if not isinstance(value, bool):
                value = str(value).lower() in ("1", "true", "yes")
        elif spec.kind == GRID:
            if isinstance(value, (list, tuple)):
                value = ",".join(repr(float(v)) if not isinstance(v, int) else str(v) for v in value)
            value = str(value)
            experiments.parse_grid(value)
        else:
            if not isinstance(value, str):
                raise TypeError
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{name}: invalid {spec.kind} value {value!r}") from exc
    if spec.choices and value not in spec.choices:
        raise ConfigInvalid(f"{name}: must be one of {list(spec.choices)}, got {value!r}")
    return value


def resolve_config(command: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, a config mapping and overrides; reject unknown keys."""
    schema = schema_for(command)
    file_cfg = dict(file_cfg or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if file_cfg.pop("command", command) != command:
        raise ConfigInvalid(f"config is for a different command than {command!r}")
    allowed = set(schema) | ({"optimizer"} if command in PIPELINES else set())
    unknown = sorted(set(file_cfg) - allowed)
    if unknown:
        raise ConfigInvalid(f"unknown config keys for {command}: {unknown}")

    cfg: dict[str, Any] = {}
    for name, spec in schema.items():
        raw = overrides.get(name, file_cfg.get(name, spec.default))
        cfg[name] = _coerce(name, spec, raw)
    if cfg["seed"] is None:
        env = os.environ.get(SEED_ENV)
        cfg["seed"] = _coerce("seed", schema["seed"], env) if env not in (None, "") else 0
    if cfg["out"] is None:
        cfg["out"] = os.path.join("out", command)

    if command in PIPELINES:
        opt_in = file_cfg.get("optimizer", {})
        if not isinstance(opt_in, dict):
            raise ConfigInvalid("optimizer must be an object")
        bad = sorted(set(opt_in) - set(OPTIMIZER_FIELDS))
        if bad:
            raise ConfigInvalid(f"unknown optimizer keys: {bad}")
        opt_in = {**opt_in, **(overrides.get("optimizer") or {})}
        default = applications.QFI_CONFIG if command == "qfi" else OptimizerConfig()
        opt = {}
        for f in fields(OptimizerConfig):
            kind = INT if f.type in ("int", int) else FLOAT
            opt[f.name] = _coerce(f"optimizer.{f.name}", Field(kind, getattr(default, f.name)), opt_in.get(f.name, getattr(default, f.name)))
        try:
            OptimizerConfig(**opt)
        except ValueError as exc:
            raise ConfigInvalid(f"optimizer: {exc}") from exc
        cfg["optimizer"] = opt
    return cfg


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON of everything that can change the results.

    ``out`` and ``workers`` are excluded: they change where and how fast a
    run happens, never what it computes.
    """
    payload = {k: v for k, v in cfg.items() if k not in ("out", "workers")}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# -- states -------------------------------------------------------------------


def parse_state(text: str) -> DensityMatrix:
    """Build a state from a short spec string or a JSON file path."""
    if text.endswith(".json") or os.path.isfile(text):
        return DensityMatrix.from_json(Path(text).read_text())
    kind, _, rest = text.partition(":")
    args = [a for a in rest.split(":") if a] if rest else []
    try:
        if kind == "qubit":
            return qubit_diagonal(float(args[0]))
        if kind == "product":
            q = qubit_diagonal(float(args[0]))
            return tensor(*[q] * int(args[1]))
        if kind == "mixed":
            return maximally_mixed(int(args[0]))
        if kind == "random":
            seed = int(args[1]) if len(args) > 1 else 0
            return random_density_matrix(int(args[0]), np.random.default_rng(seed))
        if kind == "diag":
            return DensityMatrix(np.array([float(v) for v in rest.split(",")]))
    except (IndexError, ValueError) as exc:
        raise ConfigInvalid(f"bad state spec {text!r}: {exc}") from exc
    raise ConfigInvalid(f"unknown state spec {text!r}")


def _is_product_spec(text: str) -> bool:
    return text.split(":", 1)[0] in ("qubit", "product")


def _families(choice: str, state_text: str | None, dim: int):
    if choice == "auto":
        choice = "product" if state_text is not None and _is_product_spec(state_text) else "sphere"
    if choice == "sphere":
        return eigenbasis_sphere
    n = int(round(math.log2(dim)))
    if 2**n != dim:
        raise ConfigInvalid("the product family needs a qubit-register dimension")
    return diagonal_qubit_family() if n == 1 else product_diagonal_family(n)


# -- single-point commands -----------------------------------------------------


def _report_row(report: applications.PipelineReport, **inputs) -> dict:
    row = dict(inputs)
    row.update(estimate=report.estimate, oracle=report.oracle, abs_error=report.abs_error, converged=report.converged)
    for key, val in report.constants.items():
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            row[key] = val
    return row


def _run_pipeline(command: str, cfg: dict) -> tuple[list[dict], dict]:
    opt = OptimizerConfig(**cfg["optimizer"])
    kw = dict(shots=cfg["shots"], seed=cfg["seed"])
    if command == "qfi":
        path = cfg["path"]
        if path == "qubit":
            n = 1
        elif path.startswith("product:"):
            n = int(path.split(":")[1])
        else:
            raise ConfigInvalid(f"unknown qfi path {path!r}")

        def rho_family(t):
            return product_diagonal(t, n)

        fam = _families(cfg["family"], "qubit" if cfg["family"] == "auto" else None, 2**n)
        rep = applications.estimate_qfi(rho_family, cfg["theta"], cfg["delta"], fam, opt, **kw)
        return [_report_row(rep, path=path, theta=cfg["theta"], delta=cfg["delta"])], rep.to_dict()

    rho = parse_state(cfg["state"])
    fam = _families(cfg["family"], cfg["state"], rho.dim)
    if command == "rank":
        rep = applications.estimate_rank(rho, fam, opt, **kw)
        summary = rep.to_dict()
        summary["constants"].pop("anytime_lower_bounds", None)
        return [_report_row(rep, state=cfg["state"])], summary
    if command == "entropy":
        rep = applications.estimate_entropy(rho, cfg["alpha"], cfg["kind"], fam, opt, **kw)
        return [_report_row(rep, state=cfg["state"], alpha=cfg["alpha"], kind=cfg["kind"])], rep.to_dict()
    if command == "fidelity":
        sigma = parse_state(cfg["sigma"] if cfg["sigma"] != "mixed" else f"mixed:{rho.dim}")
        rep = applications.estimate_fidelity(rho, sigma, fam, opt, **kw)
        return [_report_row(rep, state=cfg["state"], sigma=cfg["sigma"])], rep.to_dict()
    if command == "frac-power":
        state, rep = applications.fractional_power_state(rho, cfg["alpha"], fam, opt, **kw)
        summary = rep.to_dict()
        summary["state"] = state.to_dict()
        return [_report_row(rep, state=cfg["state"], alpha=cfg["alpha"])], summary
    if command == "learn-state":
        state, rep = applications.learn_state(rho, fam, opt, **kw)
        summary = rep.to_dict()
        summary["state"] = state.to_dict()
        return [_report_row(rep, state=cfg["state"])], summary
    raise ConfigInvalid(f"unknown command {command!r}")


def run_oracle(cfg: dict) -> dict:
    rho = parse_state(cfg["state"]).normalize()
    sigma = None
    if cfg["sigma"] is not None:
        sigma = parse_state(cfg["sigma"] if cfg["sigma"] != "mixed" else f"mixed:{rho.dim}").normalize()
    ov = exact_oracles(rho, sigma, cfg["alpha"])
    return {
        "state": cfg["state"],
        "sigma": cfg["sigma"],
        "alpha": cfg["alpha"],
        "rank": ov.rank,
        "renyi": ov.renyi,
        "tsallis": ov.tsallis,
        "fidelity": ov.fidelity,
        "qfi_supported": ov.qfi_supported,
    }


# -- records ------------------------------------------------------------------


@dataclass
class ExperimentRecord:
    experiment_id: str
    command: str
    config_hash: str
    tool_version: str
    backend: str
    config: dict
    summary: dict
    rows: list[dict]

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "command": self.command,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "backend": self.backend,
            "config": self.config,
            "summary": self.summary,
            "rows": self.rows,
        }


def run(command: str, cfg: dict) -> ExperimentRecord:
    """Execute ``command`` on a resolved config and return its record."""
    if command in experiments.EXPERIMENTS:
        rows, summary = experiments.EXPERIMENTS[command](cfg)
    elif command == "oracle":
        summary = run_oracle(cfg)
        rows = [dict(summary)]
    else:
        rows, summary = _run_pipeline(command, cfg)
    if not rows:
        raise PurityVQAError("experiment produced no rows")
    h = config_hash(cfg)
    return ExperimentRecord(f"{command}-{h[:12]}", command, h, __version__, BACKEND, cfg, _clean(summary), _clean(rows))


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, rows: Sequence[dict]) -> None:
    columns: list[str] = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([format_value(_unclean(r.get(c))) for c in columns])


def _unclean(v):
    # rows hold non-finite floats as strings after _clean; write them back as numbers
    if isinstance(v, str) and v in ("nan", "inf", "-inf"):
        return float(v)
    return v


def write_outputs(record: ExperimentRecord, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec_path, csv_path = out / "record.json", out / "data.csv"
    rec_path.write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_csv(csv_path, record.rows)
    return rec_path, csv_path


# -- plot scripts ----------------------------------------------------------------

_PLOTS = {
    "fig2": ("phi", ["rank", "renyi", "fidelity"]),
    "fig3": ("phi", ["rank", "renyi", "fidelity"]),
}


def emit_plot_script(record: ExperimentRecord, out_dir: str | Path) -> Path:
    """Write ``plot.gp``, a gnuplot script rendering ``data.csv``."""
    if not record.rows:
        raise ValueError("record has no rows")
    cols = list(record.rows[0])
    col = {name: i + 1 for i, name in enumerate(cols)}
    lines = ["set datafile separator ','", "set key autotitle columnhead", "set terminal pngcairo size 1200,400"]
    lines.append(f"set output '{record.command}.png'")
    if record.command in _PLOTS:
        x, quantities = _PLOTS[record.command]
        lines.append(f"set multiplot layout 1,{len(quantities)}")
        for q in quantities:
            lines += [
                f"set title '{q}'",
                f"set xlabel '{x}'",
                f"plot 'data.csv' using {col[x]}:{col[q + '_oracle']} with lines dt 2 title 'exact', "
                f"'' using {col[x]}:{col[q + '_estimate']} with points pt 8 title 'estimate'",
            ]
        lines.append("unset multiplot")
    elif record.command == "landscape":
        lines += [
            "set view map",
            "set xlabel 'theta1'",
            "set ylabel 'theta2'",
            f"splot 'data.csv' using {col['theta1']}:{col['theta2']}:{col['estimate']} with image title 'C(theta)'",
        ]
    elif record.command in ("bpl-scan", "bpl-correlated"):
        x = "size" if "size" in col else "n"
        lines += [
            "set logscale y",
            f"set xlabel '{x}'",
            f"plot 'data.csv' using {col[x]}:{col['estimate']}:{col['std_error']} with yerrorbars title 'Monte Carlo', "
            f"'' using {col[x]}:{col['oracle']} with lines title 'reference'",
        ]
    else:
        lines.append(f"plot 'data.csv' using 0:{col['estimate']} with points title 'estimate'")
    path = Path(out_dir) / "plot.gp"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# -- argument parsing ------------------------------------------------------------


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="purity-vqa", description="Purity-minimization VQA experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in SCHEMAS:
        p = sub.add_parser(command, help=(experiments.EXPERIMENTS.get(command).__doc__ or "").split("\n")[0] if command in experiments.EXPERIMENTS else None)
        p.add_argument("--config", help="JSON config file (strict schema)")
        p.add_argument("--plot", action="store_true", help="also write a gnuplot script")
        for name, spec in schema_for(command).items():
            p.add_argument(_flag(name), dest=name, default=None, help=spec.help or f"default {spec.default!r}")
        if command in PIPELINES:
            for name in OPTIMIZER_FIELDS:
                if name in SCHEMAS[command] or name == "seed":
                    continue
                p.add_argument(_flag(name), dest=f"opt_{name}", default=None, help=f"optimizer {name}")
    return parser


def _error_payload(exc: BaseException) -> dict:
    frames = traceback.extract_tb(exc.__traceback__)
    module = None
    for fr in reversed(frames):
        if "purity_vqa" in fr.filename:
            module = Path(fr.filename).stem
            break
    payload = {"error": type(exc).__name__, "message": str(exc), "module": module}
    for attr in ("stage", "subsystem"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    return payload


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        file_cfg = {}
        if args.config:
            try:
                file_cfg = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigInvalid(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(file_cfg, dict):
                raise ConfigInvalid("config must be a JSON object")
        overrides = {name: getattr(args, name) for name in schema_for(command)}
        opt = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_") and v is not None}
        if opt:
            overrides["optimizer"] = opt
        cfg = resolve_config(command, file_cfg, overrides)
        record = run(command, cfg)
        if command == "oracle" and args.out is None:
            print(json.dumps(record.summary, indent=2, sort_keys=True))
            return 0
        write_outputs(record, cfg["out"])
        if args.plot:
            emit_plot_script(record, cfg["out"])
        print(json.dumps({"experiment_id": record.experiment_id, "out": cfg["out"], "summary": record.summary}, sort_keys=True))
        return 0
    except Exception as exc:  # noqa: BLE001 - every failure becomes a JSON error
        print(json.dumps(_error_payload(exc)), file=sys.stderr)
        return 2 if isinstance(exc, ConfigInvalid) else 1


if __name__ == "__main__":
    sys.exit(main())
