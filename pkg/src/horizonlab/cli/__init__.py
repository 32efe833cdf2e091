"""Command-line front end.

Exit status: 0 success, 1 computational failure, 2 configuration error.
Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys

import numba
import numpy as np
import pydantic
import scipy

from .. import __version__
from ..errors import ConfigError, HorizonlabError
from ..waves.io import atomic_write_bytes
from .commands import DISPATCH, cmd_scan, dumps
from .config import COMMANDS, SCHEMA_VERSION, load_config

OUT_ENV = "HORIZONLAB_OUT"
DEFAULT_OUT = "horizonlab-out"


def build_parser():
    ap = argparse.ArgumentParser(prog="horizonlab", description="Cosmological black-hole numerical laboratory.")
    ap.add_argument("--version", action="version", version=f"horizonlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="config JSON or run manifest")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="dot-path override, value parsed as JSON when possible")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for scan")
    return ap


def _manifest(cfg, artifacts):
    return {
        "manifest_version": 1,
        "schema_version": SCHEMA_VERSION,
        "horizonlab_version": __version__,
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
                     "numba": numba.__version__, "pydantic": pydantic.VERSION},
        "config": cfg.model_dump(),
        "artifacts": {k: hashlib.sha256(v).hexdigest() for k, v in sorted(artifacts.items())},
    }


def _error(kind, message, path=None, out=None):
    rec = {"status": "error", "kind": kind, "message": message}
    if path is not None:
        rec["path"] = path
    text = json.dumps(rec, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            atomic_write_bytes(os.path.join(out, "error.json"), (text + "\n").encode())
        except OSError:
            pass


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1", path="--jobs")
        cfg = load_config(args.config, args.set, command=args.command)
    except ConfigError as exc:
        _error("config", str(exc), exc.path)
        return 2
    try:
        if cfg.command == "scan":
            artifacts = cmd_scan(cfg, jobs=args.jobs)
        else:
            artifacts = DISPATCH[cfg.command](cfg)
    except ConfigError as exc:
        _error("config", str(exc), exc.path, out)
        return 2
    except (HorizonlabError, ValueError, ArithmeticError) as exc:
        _error("computation", f"{type(exc).__name__}: {exc}", None, out)
        return 1
    try:
        for name, blob in sorted(artifacts.items()):
            atomic_write_bytes(os.path.join(out, name), blob)
        atomic_write_bytes(os.path.join(out, "manifest.json"), dumps(_manifest(cfg, artifacts)))
    except OSError as exc:
        _error("io", str(exc), "--out")
        return 1
    print(json.dumps({"status": "ok", "command": cfg.command, "out": out,
                      "artifacts": sorted(artifacts) + ["manifest.json"]}, sort_keys=True))
    return 0


def main(argv=None):
    sys.exit(run(argv))
