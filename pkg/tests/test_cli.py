import json
import os
import subprocess
import sys

import pytest

from mpradon import cli, config
from mpradon.gallery import emit_gallery, gallery_configs


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _summary(outdir):
    with open(os.path.join(outdir, "summary.json")) as fh:
        return json.load(fh)


def test_experiment_names_in_sync():
    assert tuple(cli.EXPERIMENT_NAMES) == tuple(config.EXPERIMENTS)


def test_gallery_configs_valid(tmp_path):
    paths = emit_gallery(tmp_path / "g")
    assert len(paths) >= 12
    kinds = set()
    for p in paths:
        with open(p) as fh:
            cfg = json.load(fh)
        kinds.add(config.validate(cfg)["experiment"])
    assert {"newton", "control", "heisenberg", "gamma-roundtrip", "curvature", "leaf"} <= kinds


def test_gallery_command(tmp_path, capsys):
    assert cli.main(["gallery", "--out", str(tmp_path / "g")]) == 0
    assert len(os.listdir(tmp_path / "g")) == len(gallery_configs())


def test_newton_single_exit_code(tmp_path):
    cfg = gallery_configs()["translation-invariant-single.json"]
    out = str(tmp_path / "o")
    assert cli.main(["newton", "--config", _write(tmp_path, cfg), "--out", out]) == 3
    s = _summary(out)
    assert s["results"]["witness"] == [1, 1]
    assert s["results"]["classification"] == "unbounded"


def test_newton_corpus_pass(tmp_path):
    cfg = gallery_configs()["translation-invariant-corpus.json"]
    out = str(tmp_path / "o")
    assert cli.main(["newton", "--config", _write(tmp_path, cfg), "--out", out]) == 0
    assert _summary(out)["status"] == "PASS"
    assert os.path.exists(os.path.join(out, "newton.csv"))


def test_flag_vs_product_control(tmp_path):
    cfg = gallery_configs()["flag-vs-product-control.json"]
    out = str(tmp_path / "o")
    assert cli.main(["control", "--config", _write(tmp_path, cfg), "--out", out]) == 0
    s = _summary(out)
    assert s["results"]["flag"]["status"] == "PASS"
    assert s["results"]["product"]["status"] == "FAIL"


def test_failing_check_gives_exit_1(tmp_path):
    cfg = {"experiment": "newton", "params": {"corpus": [
        {"name": "wrong", "polynomial": [[1, 1, 1, 1]], "expect": "bounded"}]}}
    assert cli.main(["newton", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1


def test_missing_seed_exit_2(tmp_path, capsys):
    cfg = {"experiment": "control", "params": gallery_configs()["heisenberg-control.json"]["params"]}
    assert cli.main(["control", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
    assert "seed" in capsys.readouterr().err


def test_seed_override_satisfies_requirement(tmp_path):
    cfg = {"experiment": "control", "params": gallery_configs()["heisenberg-control.json"]["params"]}
    out = str(tmp_path / "o")
    assert cli.main(["control", "--config", _write(tmp_path, cfg), "--seed", "5", "--out", out]) == 0
    assert _summary(out)["seed"] == 5


@pytest.mark.parametrize("cfg", [
    {"experiment": "newton", "params": {"polynomial": [[1, 0, 1]]}},
    {"experiment": "newton", "params": {"bogus": 1}},
    {"experiment": "nope", "params": {}},
    {"params": {}},
])
def test_invalid_configs_exit_2(tmp_path, cfg):
    assert cli.main(["newton", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["newton", "--config", str(p)]) == 2
    assert cli.main(["newton", "--config", str(tmp_path / "absent.json")]) == 2
    assert cli.main(["newton"]) == 2


def test_experiment_mismatch(tmp_path):
    cfg = gallery_configs()["translation-invariant-corpus.json"]
    assert cli.main(["control", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_unknown_experiment_argparse():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus"])
    assert exc.value.code == 2


def test_value_error_exit_2(tmp_path):
    # constant term: rejected by the polynomial constructor
    cfg = {"experiment": "newton", "params": {"polynomial": [[0, 0, 1, 1]]}}
    assert cli.main(["newton", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_outputs_deterministic(tmp_path):
    cfg = gallery_configs()["heisenberg-control.json"]
    path = _write(tmp_path, cfg)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["control", "--config", path, "--out", a]) == 0
    assert cli.main(["control", "--config", path, "--out", b]) == 0
    for name in sorted(os.listdir(a)):
        with open(os.path.join(a, name), "rb") as fa, open(os.path.join(b, name), "rb") as fb:
            assert fa.read() == fb.read(), name


def test_summary_echoes_resolved_params(tmp_path):
    cfg = {"experiment": "synth-kernel", "params": {"m": 2}}
    out = str(tmp_path / "o")
    assert cli.main(["synth-kernel", "--config", _write(tmp_path, cfg), "--out", out]) == 0
    s = _summary(out)
    assert s["config"]["m"] == 2
    assert s["config"]["grid"] == config.DEFAULTS["synth-kernel"]["grid"]
    for c in s["checks"]:
        assert set(c) >= {"name", "value", "comparison", "tolerance", "status"}


def test_synth_kernel_three_dimensional(tmp_path):
    cfg = {"experiment": "synth-kernel", "params": {"exponents": [[1, 0], [0, 1], [1, 1]], "m": 3, "grid": 32}}
    out = str(tmp_path / "o")
    assert cli.main(["synth-kernel", "--config", _write(tmp_path, cfg), "--out", out]) == 0


def test_to_jsonable_nonfinite():
    import numpy as np
    out = cli.to_jsonable({"a": np.float64("nan"), "b": [np.inf, -np.inf], "c": np.int64(3), "d": (1, 2)})
    assert out == {"a": "nan", "b": ["inf", "-inf"], "c": 3, "d": [1, 2]}


def test_thread_cap():
    env = {"MPRADON_THREADS": "2"}
    assert cli.apply_thread_cap(env) == 2
    assert env["OMP_NUM_THREADS"] == "2" and env["OPENBLAS_NUM_THREADS"] == "2"
    assert cli.apply_thread_cap({}) is None
    with pytest.raises(ValueError):
        cli.apply_thread_cap({"MPRADON_THREADS": "0"})


def test_module_entry_point(tmp_path):
    cfg = gallery_configs()["translation-invariant-single.json"]
    env = dict(os.environ, MPRADON_THREADS="1")
    r = subprocess.run([sys.executable, "-m", "mpradon", "newton", "--config", _write(tmp_path, cfg),
                        "--out", str(tmp_path / "o")], capture_output=True, text=True, env=env)
    assert r.returncode == 3
    assert "unbounded" in r.stdout or "PASS" in r.stdout
    bad = subprocess.run([sys.executable, "-m", "mpradon", "newton", "--config", _write(tmp_path, cfg)],
                         capture_output=True, text=True, env=dict(env, MPRADON_THREADS="x"), cwd=tmp_path)
    assert bad.returncode == 2


@pytest.mark.parametrize("demo", sorted(p for p in os.listdir(os.path.join(os.path.dirname(__file__), "..", "demos"))
                                        if p.endswith(".py")))
def test_demos_run(demo):
    import runpy
    runpy.run_path(os.path.join(os.path.dirname(__file__), "..", "demos", demo), run_name="__main__")
