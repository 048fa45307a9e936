"""Run configurations: JSON schemas, defaults and validation.

A config file is a single JSON object::

    {"experiment": "newton", "seed": 0, "params": {...}}

``params`` is validated against the schema of the experiment and then
merged over the defaults below; the merged block is echoed in the summary,
so every tolerance a report is judged by is visible there.
"""

from __future__ import annotations

import copy
import json

import jsonschema

from . import catalog

EXPERIMENTS = ("synth-kernel", "check-cancellation", "gamma-roundtrip", "curvature", "cc-chart", "ao-decay",
               "newton", "counterexample", "heisenberg", "transport", "control", "leaf")


class ConfigError(ValueError):
    """Invalid configuration (exit status 2)."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_posint = {"type": "integer", "minimum": 1}
_vec = {"type": "array", "items": _num}
_texts = {"type": "array", "items": {"type": "string"}, "minItems": 1}
_quads = {"type": "array", "minItems": 1,
          "items": {"type": "array", "items": _int, "minItems": 4, "maxItems": 4}}
_verdict = {"enum": ["PASS", "FAIL", "UNCERTIFIED"]}
_lattice = {"type": "object", "required": ["kind", "nu"],
            "properties": {"kind": {"enum": ["product", "flag", "custom"]}, "nu": _posint,
                           "inequalities": {"type": "array", "items": _vec}},
            "additionalProperties": False}
_exponents = {"type": "array", "minItems": 1, "items": {"type": "array", "items": {"type": "number", "minimum": 0},
                                                        "minItems": 1}}
_wspec_inline = {"type": "object", "required": ["N", "n", "terms"],
                 "properties": {"N": _posint, "n": _posint, "name": {"type": "string"},
                                "exponents": {"type": ["array", "null"]},
                                "terms": {"type": "array", "minItems": 1, "items": {
                                    "type": "object", "required": ["alpha", "field"],
                                    "properties": {"alpha": {"type": "array", "items": _int}, "field": _texts},
                                    "additionalProperties": False}}},
                 "additionalProperties": False}
_wspec_ref = {"oneOf": [{"enum": sorted(catalog.WSPECS)}, _wspec_inline]}
_surface_ref = {"oneOf": [
    {"type": "object", "required": ["catalog"], "properties": {"catalog": {"enum": sorted(catalog.SURFACES)}},
     "additionalProperties": False},
    {"type": "object", "required": ["wspec"], "properties": {"wspec": _wspec_ref}, "additionalProperties": False},
    {"type": "object", "required": ["N", "n", "forward"],
     "properties": {"N": _posint, "n": _posint, "forward": _texts, "inverse": _texts, "name": {"type": "string"},
                    "rho": _pos},
     "additionalProperties": False},
]}
_bump1d = {"type": "object",
           "properties": {"kind": {"enum": ["mollifier", "dmollifier", "polymollifier"]}, "order": _int,
                          "power": _int, "radius": _pos, "center": _num, "amp": _num},
           "additionalProperties": False}
_degreed = {"type": "object", "required": ["field", "degree"],
            "properties": {"field": _texts, "degree": _vec}, "additionalProperties": False}


def _params(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


PARAM_SCHEMAS = {
    "synth-kernel": _params({"exponents": _exponents, "m": {"type": "integer", "minimum": 0, "maximum": 3},
                             "grid": {"type": "integer", "minimum": 2}, "radius": _pos, "tol": _pos,
                             "write_grid": {"type": "boolean"}}),
    "check-cancellation": _params({"exponents": _exponents, "lattice": _lattice, "C": _pos,
                                   "family": {"oneOf": [{"const": "delta0"}, {"type": "object"}]},
                                   "radius": _pos, "bound": {"type": "integer", "minimum": 0},
                                   "quad_tol": _pos, "nodes": _posint, "expect": _verdict}),
    "gamma-roundtrip": _params({"wspecs": {"type": "array", "items": _wspec_ref},
                                "surfaces": {"type": "array", "items": {"enum": sorted(catalog.SURFACES)}},
                                "samples": _posint, "structure_samples": _posint, "t_radius": _pos,
                                "x_radius": _pos, "ode_tol": _pos, "fd_step": _pos, "eps0": _pos, "eps": _pos,
                                "tol": _pos, "semigroup_tol": _pos, "wsum_tol": _pos,
                                "integrability_tol": _pos}),
    "curvature": _params({"cases": {"type": "array", "minItems": 1, "items": {
                              "type": "object", "required": ["surface", "x0"],
                              "properties": {"surface": _surface_ref, "x0": _vec, "expect": {"type": "boolean"},
                                             "name": {"type": "string"}},
                              "additionalProperties": False}},
                          "modes": {"type": "array", "minItems": 1, "items": {"enum": ["CZ", "CY", "CJ"]}},
                          "M": _posint, "Mprime": _posint, "threshold": _pos, "ode_tol": _pos}),
    "leaf": _params({"surface": _surface_ref, "x0": _vec, "t_probe": _vec, "order": _posint, "tol": _pos,
                     "expect": _verdict, "ode_tol": _pos}, ["surface"]),
    "cc-chart": _params({"charts": {"type": "array", "minItems": 1, "items": {"oneOf": [
                             {"enum": sorted(catalog.CHARTS)},
                             {"type": "object", "required": ["fields", "x0"],
                              "properties": {"name": {"type": "string"},
                                             "fields": {"type": "array", "items": _texts, "minItems": 1},
                                             "degrees": {"type": "array", "items": _vec}, "delta": _vec,
                                             "x0": _vec, "det_bound": _pos},
                              "additionalProperties": False}]}},
                         "samples": {"type": "integer", "minimum": 2}, "paths": _posint, "ode_tol": _pos,
                         "eta1": _pos, "csv_points": _posint}),
    "control": _params({"members": {"type": "array", "minItems": 1, "items": _degreed},
                        "target": {"oneOf": [_degreed, {"type": "object", "required": ["word"],
                                                        "properties": {"word": {"type": "array", "items": _int,
                                                                                "minItems": 1},
                                                                       "degree": _vec},
                                                        "additionalProperties": False}]},
                        "checks": {"type": "array", "minItems": 1, "items": {
                            "type": "object", "required": ["name", "lattice", "expect"],
                            "properties": {"name": {"type": "string"}, "lattice": _lattice,
                                           "deltas": {"type": "array", "items": _vec}, "expect": _verdict,
                                           "min_growth": _pos},
                            "additionalProperties": False}},
                        "base_points": {"type": "array", "items": _vec, "minItems": 1},
                        "exact_coefficients": {"type": ["array", "null"], "items": {"type": "string"}},
                        "per_coord": {"type": "integer", "minimum": 2}, "smax": _pos, "m_max": _int,
                        "tol": _pos, "bound": _pos}, ["members", "target", "checks", "base_points"]),
    "newton": _params({"polynomial": _quads, "mode": {"enum": ["product", "flag"]},
                       "allow_swap": {"type": "boolean"},
                       "expect": {"enum": ["bounded", "unbounded", "unbounded_extended", "undecided"]},
                       "corpus": {"type": "array", "minItems": 1, "items": {
                           "type": "object", "required": ["polynomial", "expect"],
                           "properties": {"name": {"type": "string"}, "polynomial": _quads,
                                          "mode": {"enum": ["product", "flag"]}, "allow_swap": {"type": "boolean"},
                                          "expect": {"type": "string"},
                                          "witness": {"type": ["array", "null"], "items": _int}},
                           "additionalProperties": False}}}),
    "counterexample": _params({"polynomial": _quads, "tau_log2": _pos,
                               "M": {"type": "array", "items": _posint, "minItems": 2},
                               "ratio_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                               "control": {"type": ["object", "null"], "required": ["polynomial", "witness"],
                                           "properties": {"polynomial": _quads,
                                                          "witness": {"type": "array", "items": _int},
                                                          "max_ratio": _pos},
                                           "additionalProperties": False}}),
    "heisenberg": _params({"M": _posint, "compare_M": _posint, "grid_points": {"type": "integer", "minimum": 8},
                           "rel_tol": _pos, "stability": _pos, "slope_max": {"type": ["number", "null"]},
                           "norm_tol": _pos}),
    "ao-decay": _params({"grid_points": {"type": "integer", "minimum": 16}, "half_width": _pos,
                         "cutoff_outer": _pos, "jmax": {"type": "integer", "minimum": 2}, "bump": _bump1d,
                         "control_bump": _bump1d, "norm_tol": _pos, "slope_max": _num, "r2_min": _num,
                         "oracle_rel_tol": _pos, "control_slope_min": _num}),
    "transport": _params({"grid_points": {"type": "integer", "minimum": 16}, "l1_tol": _pos, "tent_tol": _pos,
                          "tent_shifts": _vec, "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                          "square_shifts": _vec}),
}

DEFAULTS = {
    "synth-kernel": {"exponents": [[1], [1]], "m": 3, "grid": 64, "radius": 0.25, "tol": 1e-12,
                     "write_grid": True},
    "check-cancellation": {"exponents": [[1, 0], [0, 1]], "lattice": None, "C": 1.0, "family": "delta0",
                           "radius": 0.25, "bound": 3, "quad_tol": 1e-10, "nodes": 64, "expect": "PASS"},
    "gamma-roundtrip": {"wspecs": sorted(catalog.WSPECS),
                        "surfaces": sorted(k for k in catalog.SURFACES if catalog.exact_w(k) is not None),
                        "samples": 200, "structure_samples": 20, "t_radius": 0.5, "x_radius": 0.5,
                        "ode_tol": 1e-10, "fd_step": 1e-4, "eps0": 0.3, "eps": 0.7, "tol": 1e-6,
                        "semigroup_tol": 1e-8, "wsum_tol": 1e-6, "integrability_tol": 1e-5},
    "curvature": {"cases": [{"surface": s, "x0": x0, "expect": e} for s, x0, e in catalog.CURVATURE_CASES],
                  "modes": ["CZ", "CJ"], "M": 2, "Mprime": 2, "threshold": 1e-8, "ode_tol": 1e-10},
    "leaf": {"x0": [0.0], "t_probe": [0.5, 0.8], "order": 4, "tol": 1e-8, "expect": "PASS", "ode_tol": 1e-10},
    "cc-chart": {"charts": sorted(catalog.CHARTS), "samples": 200, "paths": 200, "ode_tol": 1e-10,
                 "eta1": 0.25, "csv_points": 50},
    "control": {"exact_coefficients": None, "per_coord": 8, "smax": 20.0, "m_max": 1, "tol": 1e-8,
                "bound": 100.0},
    "newton": {"mode": "product", "allow_swap": False, "expect": None, "polynomial": None, "corpus": None},
    "counterexample": {"polynomial": [[3, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1]], "tau_log2": 20,
                       "M": [4, 8, 16], "ratio_range": [1.6, 2.4],
                       "control": {"polynomial": [[1, 0, 1, 1], [0, 1, 1, 1]], "witness": [0, 1],
                                   "max_ratio": 1.25}},
    "heisenberg": {"M": 4, "compare_M": 2, "grid_points": 32, "rel_tol": 0.01, "stability": 2.0,
                   "slope_max": -0.5, "norm_tol": 1e-6},
    "ao-decay": {"grid_points": 512, "half_width": 1.0, "cutoff_outer": 0.75, "jmax": 6,
                 "bump": {"kind": "dmollifier", "order": 1, "radius": 0.25},
                 "control_bump": {"kind": "mollifier", "radius": 0.25, "amp": 1.0},
                 "norm_tol": 1e-8, "slope_max": -0.9, "r2_min": 0.9, "oracle_rel_tol": 0.05,
                 "control_slope_min": -0.1},
    "transport": {"grid_points": 401, "l1_tol": 0.02, "tent_tol": 0.03, "tent_shifts": [0.01, 0.05, 0.1, 0.2],
                  "delta": 0.4, "square_shifts": [0.001, 0.003, 0.01, 0.03, 0.1]},
}

TOP_SCHEMA = {
    "type": "object",
    "required": ["experiment"],
    "properties": {"experiment": {"enum": list(EXPERIMENTS)}, "seed": {"type": "integer", "minimum": 0},
                   "params": {"type": "object"}, "description": {"type": "string"}},
    "additionalProperties": False,
}

# experiments whose outcome depends on random sampling; they need a seed
SAMPLED = frozenset({"gamma-roundtrip", "cc-chart", "ao-decay", "heisenberg", "control"})


def _first_error(validator, instance):
    errs = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if not errs:
        return None
    e = errs[0]
    where = "/".join(str(p) for p in e.absolute_path) or "<root>"
    return f"{where}: {e.message}"


def validate(cfg: dict, seed_override=None) -> dict:
    """Validate and resolve a config.

    Returns ``{"experiment", "seed", "params"}`` with defaults filled in.
    Raises :class:`ConfigError` on any schema violation, on a missing seed
    for a sampled experiment, or on an unknown experiment.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    msg = _first_error(jsonschema.Draft202012Validator(TOP_SCHEMA), cfg)
    if msg:
        raise ConfigError(msg)
    kind = cfg["experiment"]
    params = cfg.get("params", {})
    msg = _first_error(jsonschema.Draft202012Validator(PARAM_SCHEMAS[kind]), params)
    if msg:
        raise ConfigError(f"params/{msg}")
    seed = cfg.get("seed") if seed_override is None else seed_override
    if seed is not None and (not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed must be a nonnegative integer")
    if kind in SAMPLED and seed is None:
        raise ConfigError(f"experiment {kind!r} samples randomly and needs a seed")
    merged = copy.deepcopy(DEFAULTS[kind])
    merged.update(copy.deepcopy(params))
    if kind == "newton" and merged.get("polynomial") is None and merged.get("corpus") is None:
        raise ConfigError("newton needs 'polynomial' or 'corpus'")
    return {"experiment": kind, "seed": seed, "params": merged}


def load(path, seed_override=None) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate(cfg, seed_override)
