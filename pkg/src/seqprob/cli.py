"""Command-line scenario runner.

Exit codes: 0 success, 1 assertion failure under ``--check``, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import time
from pathlib import Path
from typing import List, Optional

import jsonschema
import numpy as np
import scipy

from . import __version__
from .scenarios import SCENARIOS, ScenarioResult, config_schema, merged_params

log = logging.getLogger("seqprob")


class UsageError(Exception):
    pass


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(e) for k, e in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(e) for e in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    return v


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def validate_config(raw: dict) -> dict:
    """Validate a configuration document and fill in defaults."""
    try:
        jsonschema.validate(raw, config_schema())
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid configuration: {exc.message}") from None
    params = merged_params(raw["scenario"], raw.get("params", {}))
    return {"scenario": raw["scenario"], "seed": int(raw.get("seed", 0)), "params": params}


def versions() -> dict:
    return {"seqprob": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_outputs(result: ScenarioResult, config: dict, out: Path, fmt: str, runtime: float) -> dict:
    """Write data files, ``report.json`` and ``manifest.json``; return the manifest."""
    out.mkdir(parents=True, exist_ok=True)
    hashes = {}

    def put(name: str, text: str):
        data = text.encode()
        (out / name).write_bytes(data)
        hashes[name] = hashlib.sha256(data).hexdigest()

    if fmt == "csv":
        for name, (header, rows) in sorted(result.tables.items()):
            put(f"{name}.csv", table_csv(header, rows))
    else:
        tables = {name: {"columns": list(h), "rows": [[_jsonable(v) for v in r] for r in rows]}
                  for name, (h, rows) in sorted(result.tables.items())}
        put("tables.json", json.dumps(_jsonable(tables), sort_keys=True, indent=1) + "\n")
    report = {
        "scenario": config["scenario"],
        "passed": result.passed,
        "assertions": [a.to_dict() for a in result.assertions],
        "summary": _jsonable(result.summary),
        "runtime_seconds": runtime,
    }
    (out / "report.json").write_text(json.dumps(report, indent=1) + "\n")
    manifest = {
        "scenario": config["scenario"],
        "seed": config["seed"],
        "config": _jsonable(config),
        "config_sha256": config_hash(config),
        "format": fmt,
        "versions": versions(),
        "outputs": hashes,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def catalog() -> List[dict]:
    return [{"name": s.name, "description": s.description, "topic": s.topic} for s in SCENARIOS.values()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqprob", description="Run sequential-measurement scenarios.")
    p.add_argument("--scenario", help="scenario name (see --list)")
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--from-manifest", type=Path, help="re-run the configuration stored in a manifest.json")
    p.add_argument("--out", type=Path, help="output directory (default: seqprob-out/<scenario>)")
    p.add_argument("--seed", type=int, help="random seed (overrides the configuration)")
    p.add_argument("--check", action="store_true", help="exit 1 when any assertion fails")
    p.add_argument("--threads", type=int, help="worker threads (default: $SEQPROB_THREADS or 1)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="data table format")
    p.add_argument("--list", action="store_true", help="print the scenario catalog")
    p.add_argument("--json", action="store_true", help="machine-readable output for --list")
    p.add_argument("--schema", action="store_true", help="print the configuration JSON schema")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("SEQPROB_THREADS")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise UsageError(f"SEQPROB_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be at least 1")
    return n


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def resolve_config(args) -> dict:
    if args.config and args.from_manifest:
        raise UsageError("--config and --from-manifest are mutually exclusive")
    if args.from_manifest:
        raw = _load_json(args.from_manifest).get("config")
        if not isinstance(raw, dict):
            raise UsageError("manifest has no config section")
    elif args.config:
        raw = _load_json(args.config)
        if not isinstance(raw, dict):
            raise UsageError("configuration must be a JSON object")
    else:
        raw = {}
    raw = dict(raw)
    if args.scenario:
        if raw.get("scenario") not in (None, args.scenario):
            raise UsageError("--scenario conflicts with the configuration file")
        raw["scenario"] = args.scenario
    if "scenario" not in raw:
        raise UsageError("no scenario given")
    if raw["scenario"] not in SCENARIOS:
        raise UsageError(f"unknown scenario {raw['scenario']!r}; available: {', '.join(SCENARIOS)}")
    if args.seed is not None:
        raw["seed"] = args.seed
    return validate_config(raw)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.list:
        if args.json:
            print(json.dumps(catalog(), indent=1))
        else:
            for e in catalog():
                print(f"{e['name']:20s} {e['description']}  [{e['topic']}]")
        return 0
    if args.schema:
        print(json.dumps(config_schema(), indent=1))
        return 0
    try:
        threads = _threads(args.threads)
        config = resolve_config(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"seqprob: error: {exc}", file=sys.stderr)
        return 2
    scenario = SCENARIOS[config["scenario"]]
    out = args.out or Path("seqprob-out") / scenario.name
    log.info("running %s (seed %d, %d threads)", scenario.name, config["seed"], threads)
    t0 = time.perf_counter()
    result = scenario.run(config["params"], config["seed"], threads)
    runtime = time.perf_counter() - t0
    write_outputs(result, config, out, args.format, runtime)
    for a in result.assertions:
        print(f"{'PASS' if a.passed else 'FAIL'} {a.name}: {a.value!r} {a.op} {a.threshold!r}")
    print(f"wrote {out}")
    if args.check and not result.passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
