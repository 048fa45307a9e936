"""Command line: ``mpradon <experiment> --config <path> [--seed N] [--out DIR]``.

Exit status: 0 when every check passes, 1 when any check fails, 2 on an
invalid config or input, and the verdict codes 0/3/4/5 for a single
``newton`` classification.  ``mpradon gallery --out DIR`` writes the
ready-to-run config corpus.

``MPRADON_THREADS`` caps the threads used by the linear-algebra backends;
it has to be applied before numpy is imported, which is why this module
imports the numerical code lazily.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

EXPERIMENT_NAMES = ("synth-kernel", "check-cancellation", "gamma-roundtrip", "curvature", "cc-chart", "ao-decay",
                    "newton", "counterexample", "heisenberg", "transport", "control", "leaf")
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def apply_thread_cap(environ=os.environ):
    """Copy ``MPRADON_THREADS`` into the usual BLAS/OpenMP variables."""
    val = environ.get("MPRADON_THREADS")
    if val is None:
        return None
    try:
        n = int(val)
    except ValueError:
        raise ValueError(f"MPRADON_THREADS must be a positive integer (got {val!r})") from None
    if n < 1:
        raise ValueError(f"MPRADON_THREADS must be a positive integer (got {val!r})")
    for var in _THREAD_VARS:
        environ[var] = str(n)
    return n


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become strings so the output stays strict JSON."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    try:
        import numpy as np
        if isinstance(v, np.floating):
            return repr(float(v))
    except ImportError:  # pragma: no cover
        pass
    return str(v)


def write_bundle(outdir, resolved, rep, exit_code):
    """Write ``summary.json`` and the CSV tables; returns the summary dict."""
    from . import __version__

    os.makedirs(outdir, exist_ok=True)
    for name, (header, rows) in sorted(rep.tables.items()):
        with open(os.path.join(outdir, name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_cell(v) for v in r])
    summary = {
        "experiment": resolved["experiment"],
        "seed": resolved["seed"],
        "config": resolved["params"],
        "results": rep.results,
        "checks": rep.checks,
        "status": "PASS" if rep.passed else "FAIL",
        "exit_code": exit_code,
        "artifacts": sorted(rep.tables),
        "version": __version__,
    }
    summary = to_jsonable(summary)
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def run(resolved, outdir):
    """Run a validated config; returns ``(summary, exit_code)``."""
    from .experiments import RUNNERS, Report

    kind = resolved["experiment"]
    rep = Report(kind)
    RUNNERS[kind](resolved["params"], resolved["seed"], rep)
    if rep.exit_code is not None and rep.passed:
        code = rep.exit_code
    else:
        code = 0 if rep.passed else 1
    return write_bundle(outdir, resolved, rep, code), code


def _parser():
    p = argparse.ArgumentParser(prog="mpradon", description=__doc__.split("\n\n")[0])
    p.add_argument("experiment", choices=EXPERIMENT_NAMES + ("gallery",),
                   help="experiment kind, or 'gallery' to write the example configs")
    p.add_argument("--config", help="JSON config file (required for experiments)")
    p.add_argument("--seed", type=int, default=None, help="seed (overrides the config)")
    p.add_argument("--out", default=None, help="output directory (default: mpradon-out/<experiment>)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        apply_thread_cap()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.experiment == "gallery":
        from .gallery import emit_gallery
        try:
            paths = emit_gallery(args.out or "gallery")
        except OSError as exc:
            print(f"error: cannot write gallery: {exc}", file=sys.stderr)
            return 2
        for path in paths:
            print(path)
        return 0
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return 2
    from .config import ConfigError, load
    try:
        resolved = load(args.config, args.seed)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    if resolved["experiment"] != args.experiment:
        print(f"error: config is for {resolved['experiment']!r}, not {args.experiment!r}", file=sys.stderr)
        return 2
    outdir = args.out or os.path.join("mpradon-out", args.experiment)
    try:
        summary, code = run(resolved, outdir)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for c in summary["checks"]:
        print(f"{c['status']} {c['name']}: {c['value']} {c['comparison']} {c['tolerance']}")
    print(f"{summary['status']} {args.experiment} (exit {code}) -> {outdir}")
    return code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
