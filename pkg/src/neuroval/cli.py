"""Command-line entry point: run experiment configs to CSVs + figures, or
describe a config's plan without computing.

`run` writes one CSV per curve family, a manifest.json with the config
hash, seed, versions, and wall time, an errors.csv when any sweep point was
out of regime, and (unless --no-plots) a PNG per table. CSV bytes are
deterministic for a fixed config, so reruns overwrite identically.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from .errors import ConfigError, NeurovalError
from .experiments import ERROR_FIELDS, describe, run_experiment


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _write_csv(path: Path, fields, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    out_dir = Path(args.output_dir or cfg.get("output") or ".")
    if args.seed_override is not None:
        cfg.setdefault("mc", {})
        cfg["mc"] = {**cfg["mc"], "seed": args.seed_override}
        if isinstance(cfg.get("model"), dict):
            cfg["model"] = {**cfg["model"], "seed": args.seed_override}
    start = time.monotonic()
    result = run_experiment(cfg, n_jobs=args.threads)

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (fields, rows) in result.tables.items():
        path = out_dir / f"{name}.csv"
        _write_csv(path, fields, rows)
        written.append(path.name)
    if result.errors:
        _write_csv(out_dir / "errors.csv", ERROR_FIELDS, result.errors)
        written.append("errors.csv")
    if not args.no_plots:
        from . import figures

        for name, (_, rows) in result.tables.items():
            fig_path = out_dir / f"{name}.png"
            if figures.render_table(name, rows, fig_path):
                written.append(fig_path.name)

    import matplotlib
    import numpy
    import scipy

    manifest = {
        "config": cfg,
        "config_hash": _config_hash(cfg),
        "seed": (cfg.get("mc") or {}).get("seed"),
        "versions": {
            "neuroval": "0.1.0",
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
            "python": sys.version.split()[0],
        },
        "wall_time_s": round(time.monotonic() - start, 3),
        "files": sorted(written),
        "n_errors": len(result.errors),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    total_rows = sum(len(rows) for _, rows in result.tables.values())
    print(f"wrote {len(written)} files + manifest.json to {out_dir} "
          f"({total_rows} rows, {len(result.errors)} point errors)")
    if total_rows == 0:
        print("error: every sweep point failed", file=sys.stderr)
        return 1
    return 0


def _cmd_describe(args) -> int:
    cfg = _load_config(args.config)
    print(describe(cfg))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="neuroval",
        description="Risk laws, Monte Carlo validation, and data-value planning "
                    "for brain-regularized linear regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config to CSVs and figures")
    p_run.add_argument("config", help="JSON experiment config")
    p_run.add_argument("--output-dir", default=None, help="override the config's output directory")
    p_run.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker processes for Monte Carlo trials (results are identical for any value)")
    p_run.add_argument("--seed-override", type=int, default=None, help="replace the config seeds")
    p_run.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_run.set_defaults(fn=_cmd_run)

    p_desc = sub.add_parser("describe", help="print a config's plan without computing")
    p_desc.add_argument("config", help="JSON experiment config")
    p_desc.set_defaults(fn=_cmd_describe)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NeurovalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
