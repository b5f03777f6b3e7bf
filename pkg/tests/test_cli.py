import json

import jsonschema
import pytest

from wienerchaos import algebra
from wienerchaos.cli import OUTPUT_ROOT_ENV, load_schema, main
from wienerchaos.experiments import REGISTRY, Metric
from wienerchaos.tensor import SymmetricTensor


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestListDescribe:
    def test_list(self, capsys):
        code, out, _ = run(capsys, "list")
        assert code == 0
        names = [e["name"] for e in json.loads(out)]
        assert len(names) >= 10
        assert names == list(REGISTRY)

    def test_describe_unknown(self, capsys):
        assert run(capsys, "describe", "no-such-thing")[0] == 2

    def test_describe_round_trips(self, capsys, tmp_path):
        code, out, _ = run(capsys, "describe", "multiplication-formula")
        assert code == 0
        cfg = json.loads(out)
        cfg["seed"] = 4
        cfg["params"]["pairs"] = 5
        jsonschema.validate(cfg, load_schema("config"))
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        code, _, _ = run(capsys, "run", "--config", str(path), "--out", str(tmp_path / "o"))
        assert code == 0
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["params"]["pairs"] == 5
        assert summary["seed"] == 4


class TestRun:
    def test_outputs(self, capsys, tmp_path):
        code, _, _ = run(capsys, "run", "counterexample-rm33", "--seed", "1", "--out", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "results.csv").read_text().splitlines()
        assert lines[0] == "n,replicate,stat_name,value"
        doc = json.loads((tmp_path / "summary.json").read_text())
        jsonschema.validate(doc, load_schema("summary"))
        assert {m["name"] for m in doc["metrics"]} == {"inner", "sym_contraction_norm", "contraction_norm_sq"}

    def test_flags_override_config(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiment": "fourth-moment", "seed": 2, "params": {"n": [1, 2], "samples": 500}}))
        code, _, _ = run(capsys, "run", "--config", str(path), "--n", "3", "--out", str(tmp_path / "o"))
        doc = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert doc["params"]["n"] == [3]
        assert code == 0

    def test_env_output_root(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
        assert run(capsys, "run", "counterexample-rm33", "--seed", "3")[0] == 0
        assert (tmp_path / "counterexample-rm33-seed3" / "summary.json").exists()

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "taqqu"],
            ["run", "taqqu", "--seed", "1", "--bogus", "2"],
            ["run", "taqqu", "--seed", "1", "--n", "abc"],
            ["run", "taqqu", "--seed", "1", "--n", "2.5"],
            ["run", "nope", "--seed", "1"],
            ["run", "taqqu", "--seed", "1", "--workers", "0"],
            ["run", "joint-limits", "--seed", "1", "--D", "0.1", "--q", "3"],
        ],
    )
    def test_invalid_config(self, capsys, argv, tmp_path):
        assert run(capsys, *argv, "--out", str(tmp_path))[0] == 2

    def test_unknown_config_key(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiment": "taqqu", "seed": 1, "colour": "red"}))
        assert run(capsys, "run", "--config", str(path))[0] == 2

    def test_numerical_failure(self, capsys, tmp_path):
        argv = ["run", "rosenblatt-cumulants", "--seed", "1", "--grid", "16", "--H", "0.51", "--out", str(tmp_path)]
        assert run(capsys, *argv)[0] == 3

    def test_failed_metric_exit(self, capsys, tmp_path):
        argv = ["run", "taqqu", "--seed", "1", "--n", "512", "--replicates", "20", "--grid", "64", "--out", str(tmp_path)]
        assert run(capsys, *argv)[0] == 1


class TestReproducible:
    @pytest.mark.parametrize(
        "argv",
        [
            ["breuer-major", "--n", "128,256", "--replicates", "50"],
            ["taqqu", "--n", "1024", "--replicates", "40", "--grid", "128"],
            ["joint-limits", "--n", "512", "--replicates", "40"],
        ],
    )
    def test_worker_count_invariant(self, capsys, tmp_path, argv):
        outs = []
        for w in ("1", "8"):
            d = tmp_path / f"w{w}"
            run(capsys, "run", *argv, "--seed", "7", "--workers", w, "--out", str(d))
            outs.append((d / "results.csv").read_bytes())
        assert outs[0] == outs[1]
        assert len(outs[0]) > 1000


class TestVerifyIdentities:
    def test_default_passes(self, capsys):
        code, out, _ = run(capsys, "verify-identities", "--seed", "1")
        assert code == 0
        assert json.loads(out)["trials"] == 200

    def test_vacuous(self, capsys):
        assert run(capsys, "verify-identities", "--seed", "1", "--trials", "0")[0] == 0

    def test_mutant_fails(self, capsys, monkeypatch):
        real = algebra.symmetrize

        def flipped(t):
            s = real(t)
            if not s.coeffs:
                return s
            key = min(s.coeffs)
            return SymmetricTensor(s.order, s.dim, {**s.coeffs, key: -s.coeffs[key]})

        monkeypatch.setattr(algebra, "symmetrize", flipped)
        code, out, _ = run(capsys, "verify-identities", "--seed", "1", "--trials", "20")
        assert code == 1
        assert not json.loads(out)["pass"]


def test_metric_relations():
    assert Metric("a", 1.0, 1.05, "rel", 0.1).passed
    assert not Metric("a", 1.0, 2.0, "abs", 0.5).passed
    assert Metric("a", 0.1, 0.2, "lt").passed
    assert not Metric("a", float("nan"), 0.2, "lt").passed
    with pytest.raises(ValueError):
        Metric("a", 1.0, 1.0, "approx")
