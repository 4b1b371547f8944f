#!/usr/bin/env python3
"""Validate shipped configs and CLI outputs against the JSON Schemas.

usage: schema_check.py HOLO_RMT SCHEMA_DIR CONFIG_DIR WORK_DIR
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema


def load(path):
    with open(path) as f:
        return json.load(f)


def main():
    exe, schema_dir, config_dir, work = (Path(a) for a in sys.argv[1:5])
    schemas = {p.stem.replace(".schema", ""): load(p) for p in schema_dir.glob("*.schema.json")}
    validators = {k: jsonschema.Draft202012Validator(v) for k, v in schemas.items()}
    for v in schemas.values():
        jsonschema.Draft202012Validator.check_schema(v)

    failures = []

    def check(kind, path):
        errors = sorted(validators[kind].iter_errors(load(path)), key=str)
        for e in errors:
            failures.append(f"{path}: {kind}: {e.message} at {list(e.absolute_path)}")
        print(f"{'ok  ' if not errors else 'FAIL'} {kind:<10} {path}")

    configs = sorted(config_dir.glob("*.json"))
    for cfg in configs:
        check("config", cfg)
    for m in sorted((config_dir / "data").glob("*.json")):
        check("matrix", m)

    if work.exists():
        shutil.rmtree(work)

    def run(args, out, ok_codes=(0,)):
        out.mkdir(parents=True, exist_ok=True)
        cmd = [str(exe), *args, "--out", str(out)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode not in ok_codes:
            failures.append(f"{' '.join(cmd)} exited {proc.returncode}: {proc.stderr.strip()}")
        return proc.returncode

    small = config_dir / "iid_small.json"
    desk = config_dir / "desk36.json"
    files = config_dir / "weichselberger_files.json"

    for name, cfg in [("iid", small), ("desk", desk), ("files", files)]:
        out = work / name
        run(["analyze", "--config", str(cfg)], out / "analyze")
        check("analysis", out / "analyze" / "analysis.json")
        run(["mc", "--config", str(cfg), "--samples", "200", "--snr-db", "10"], out / "mc")
        check("mc_summary", out / "mc" / "mc_summary.json")
        # Validation verdicts depend on sample size; only the report format is checked here.
        run(["validate", "--config", str(cfg), "--samples", "200", "--snr-db", "10"], out / "validate", (0, 1))
        check("validate", out / "validate" / "validate.json")

    out = work / "desk" / "profile"
    run(["profile", "--config", str(desk)], out)
    check("matrix", out / "profile.json")
    check("matrix", out / "los.json")
    check("lattice", out / "lattice_rx.json")
    check("lattice", out / "lattice_tx.json")

    # Low-sample MC output uses the nullable fields.
    out = work / "iid" / "mc1"
    run(["mc", "--config", str(small), "--samples", "1", "--snr-db", "0"], out)
    check("mc_summary", out / "mc_summary.json")

    if failures:
        print("\n".join(failures), file=sys.stderr)
        return 1
    print("all documents match their schemas")
    return 0


if __name__ == "__main__":
    sys.exit(main())
