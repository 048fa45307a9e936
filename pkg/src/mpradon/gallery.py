"""Ready-to-run example configs.

:func:`emit_gallery` writes one JSON config per example; each is valid
against the config schema and runs with ``mpradon <experiment> --config``.
The examples cover nilpotent-group surfaces, single-parameter surfaces,
failure fixtures (a flat perturbation leaving its leaf, a list that is not
finitely generated), the translation-invariant polynomial corpus, the
flag-versus-product control fixture and the Heisenberg case study.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import catalog

_X = {"field": ["1", "0"], "degree": [1, 0]}
_FLAT_Y = "flat(x1)"
_BASE_2D = [[0.05, 0.0], [0.3, 0.0], [0.7, 0.1]]


def gallery_configs() -> dict:
    """``{filename: config}`` for every gallery entry."""
    heis_fields = [{"field": ["1", "0", "2*x2"], "degree": [1, 0]},
                   {"field": ["0", "1", "-2*x1"], "degree": [0, 1]},
                   {"field": ["0", "0", "-4"], "degree": [1, 1]}]
    sweep = [[1.0, float(2.0 ** -s)] for s in np.linspace(0.0, 20.0, 8)]
    cfgs = {
        "nilpotent-heisenberg-roundtrip": {
            "experiment": "gamma-roundtrip", "seed": 0,
            "description": "Heisenberg group translations as an ODE surface: W -> gamma -> W and scaling",
            "params": {"wspecs": ["heisenberg"], "surfaces": []}},
        "nilpotent-heisenberg-curvature": {
            "experiment": "curvature",
            "description": "Heisenberg surface: both curvature formulations hold at the origin",
            "params": {"cases": [{"surface": {"wspec": "heisenberg"}, "x0": [0.0, 0.0, 0.0], "expect": True}],
                       "modes": ["CZ", "CY", "CJ"]}},
        "nilpotent-heisenberg-chart": {
            "experiment": "cc-chart", "seed": 0,
            "description": "Scaling chart for the Heisenberg fields at delta = (1/2, 1/4)",
            "params": {"charts": ["heisenberg"]}},
        "single-parameter-curvature": {
            "experiment": "curvature",
            "description": "Curvature catalog: curved surfaces hold, flat or degenerate ones fail",
            "params": {}},
        "single-parameter-roundtrip": {
            "experiment": "gamma-roundtrip", "seed": 0,
            "description": "Full generator catalog plus closed-form surfaces with known generators",
            "params": {}},
        "failure-flat-leaf": {
            "experiment": "leaf",
            "description": "gamma_t(x) = x - exp(-1/t^2): all Taylor fields vanish, yet the point moves",
            "params": {"surface": {"catalog": "flat-translate"}, "x0": [0.0], "t_probe": [0.5, 0.8],
                       "expect": "FAIL"}},
        "failure-finite-list": {
            "experiment": "control", "seed": 0,
            "description": "Flat coefficient field: brackets are not controlled as delta_2 -> 0",
            "params": {"members": [_X, {"field": ["0", _FLAT_Y], "degree": [0, 1]},
                                   {"field": ["0", "1"], "degree": [0, 2]}],
                       "target": {"word": [0, 0, 1]}, "base_points": _BASE_2D,
                       "checks": [{"name": "delta2-sweep", "lattice": {"kind": "product", "nu": 2},
                                   "deltas": sweep, "expect": "FAIL", "min_growth": 1000.0}]}},
        "flag-vs-product-control": {
            "experiment": "control", "seed": 0,
            "description": "Same list and target: controlled when delta_1 <= delta_2, not on the full product set",
            "params": {"members": [_X, {"field": ["0", _FLAT_Y], "degree": [2, 0]},
                                   {"field": ["0", "1"], "degree": [0, 1]}],
                       "target": {"word": [0, 1]}, "base_points": _BASE_2D,
                       "checks": [{"name": "flag", "lattice": {"kind": "custom", "nu": 2,
                                                               "inequalities": [[-1, 1, 0]]},
                                   "expect": "PASS"},
                                  {"name": "product", "lattice": {"kind": "product", "nu": 2},
                                   "expect": "FAIL"}]}},
        "heisenberg-control": {
            "experiment": "control", "seed": 0,
            "description": "d/dt is controlled by X, Y, [X, Y] with exact coefficients (0, 0, -1/4)",
            "params": {"members": heis_fields, "target": {"field": ["0", "0", "1"], "degree": [1, 1]},
                       "base_points": [[0.0, 0.0, 0.0], [0.3, -0.2, 0.1]],
                       "exact_coefficients": ["0", "0", "-1/4"],
                       "checks": [{"name": "product", "lattice": {"kind": "product", "nu": 2},
                                   "expect": "PASS"}]}},
        "translation-invariant-corpus": {
            "experiment": "newton",
            "description": "Hand-classified polynomials x - p(s, t)",
            "params": {"corpus": catalog.NEWTON_CORPUS}},
        "translation-invariant-single": {
            "experiment": "newton",
            "description": "p = s^3 + t^3 + st against product kernels (exit status 3: unbounded)",
            "params": {"polynomial": [[3, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1]]}},
        "translation-invariant-counterexample": {
            "experiment": "counterexample",
            "description": "Multiplier growth for p = s^3 + t^3 + st at tau = 2^20, with a bounded control",
            "params": {}},
        "heisenberg-demo": {
            "experiment": "heisenberg", "seed": 0,
            "description": "Euclidean multiplier diverges along the diagonal; group-side table stays bounded",
            "params": {}},
        "kernel-telescoping": {
            "experiment": "synth-kernel",
            "description": "Alternating-difference family telescopes to a single dilated bump",
            "params": {"exponents": [[1, 0], [0, 1]], "m": 3}},
        "kernel-cancellation": {
            "experiment": "check-cancellation",
            "description": "Cancellation conditions of the alternating-difference family",
            "params": {}},
        "almost-orthogonality": {
            "experiment": "ao-decay", "seed": 0,
            "description": "Decay of ||T_k^* T_j|| for the convolution model, Fourier cross-check and control",
            "params": {}},
        "transport-densities": {
            "experiment": "transport",
            "description": "Push-forward densities and their L^1 Hoelder seminorms",
            "params": {}},
        "charts-constant-grushin": {
            "experiment": "cc-chart", "seed": 0,
            "description": "Scaling charts for constant fields and for the Grushin pair at (1, 0)",
            "params": {"charts": ["constant", "grushin"]}},
    }
    return {f"{k}.json": v for k, v in cfgs.items()}


def emit_gallery(outdir) -> list:
    """Write every gallery config into ``outdir``; returns the written paths.

    Each config is validated before it is written.
    """
    from .config import validate

    os.makedirs(outdir, exist_ok=True)
    paths = []
    for name, cfg in sorted(gallery_configs().items()):
        validate(cfg)
        path = os.path.join(outdir, name)
        with open(path, "w") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    return paths
