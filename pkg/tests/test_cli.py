import csv
import json

import pytest

from switchdiff.cli import EXIT, parse_config, run_scenario, main
from switchdiff.errors import ConfigError

from oracles import REFERENCE_MODEL


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestParseConfig:
    def test_minimal_criterion(self):
        cfg = parse_config(json.dumps({"command": "criterion", "model": REFERENCE_MODEL}))
        assert (cfg.dt, cfg.seed, cfg.record_stride) == (1e-3, 0, 1)
        assert set(cfg.defaults_applied) == {"dt", "seed", "record_stride", "out"}

    def test_typo_family(self):
        model = dict(REFERENCE_MODEL, drift_0={"family": "InverseRadail", "rho": 2})
        with pytest.raises(ConfigError) as exc:
            parse_config({"command": "criterion", "model": model})
        assert exc.value.field == "model.drift_0.family"

    def test_dt_zero(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({"command": "criterion", "model": REFERENCE_MODEL, "dt": 0})
        assert exc.value.field == "dt"

    @pytest.mark.parametrize("extra,field", [
        ({"bins": 4}, "bins"),
        ({"x0": 1, "z0": 0, "M1": 2, "n_paths": 10}, "n_paths"),
        ({"x0": 1, "z0": 2, "M1": 2, "n_paths": 100}, "z0"),
        ({"x0": [1, 2], "z0": 0, "M1": 2, "n_paths": 100}, "x0"),
        ({"x0": 1, "z0": 0, "n_paths": 100}, "M1"),
        ({"x0": 1, "z0": 0, "M1": -2, "n_paths": 100}, "M1"),
    ])
    def test_hit_errors(self, extra, field):
        command = "criterion" if field == "bins" else "hit"
        with pytest.raises(ConfigError) as exc:
            parse_config(dict({"command": command, "model": REFERENCE_MODEL}, **extra))
        assert exc.value.field == field

    def test_bad_json(self):
        with pytest.raises(ConfigError):
            parse_config("{not json")

    def test_unknown_command(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({"command": "fit", "model": REFERENCE_MODEL})
        assert exc.value.field == "command"

    def test_invariant_window(self):
        doc = {"command": "invariant", "model": REFERENCE_MODEL, "x0": 1, "z0": 0,
               "burn_in": 10, "horizon": 5, "bins": 4, "M1": 2}
        with pytest.raises(ConfigError):
            parse_config(doc)

    def test_manifest_round_trip(self):
        doc = {"command": "sweep", "model": REFERENCE_MODEL, "M1": 2, "n_paths": 100,
               "starts": [[5, 0], {"x0": [10], "z0": 1, "seed": 4}]}
        cfg = parse_config(doc)
        again = parse_config(json.dumps(cfg.to_dict()))
        assert again == cfg
        assert again.defaults_applied == []


class TestRunScenario:
    def test_criterion(self, tmp_path):
        cfg = parse_config({"command": "criterion", "model": REFERENCE_MODEL})
        assert run_scenario(cfg, out=str(tmp_path)) == EXIT["ok"]
        rows = {r["quantity"]: r["value"] for r in read_csv(tmp_path / "results.csv")}
        assert rows["recurrent"] == "true"
        assert float(rows["C_z0"]) == pytest.approx(1.06667, abs=1e-5)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["status"] == 0
        assert manifest["constants"]["c"] == 0.9375
        assert "numpy" in manifest["versions"]
        assert parse_config(manifest["config"]) == cfg

    def test_simulate_writes_paths(self, tmp_path):
        cfg = parse_config({"command": "simulate", "model": REFERENCE_MODEL, "x0": 2, "z0": 0,
                            "horizon": 2, "n_paths": 2, "record_stride": 100})
        assert run_scenario(cfg, out=str(tmp_path)) == 0
        for name in ("path_0.csv", "path_1.csv", "events_0.csv", "events_1.csv"):
            assert (tmp_path / name).exists()
        assert len(read_csv(tmp_path / "results.csv")) == 2

    def test_hit_all_censored(self, tmp_path, capsys):
        cfg = parse_config({"command": "hit", "model": REFERENCE_MODEL, "x0": 10, "z0": 0,
                            "M1": 2, "n_paths": 100, "max_time": 0.5})
        assert run_scenario(cfg, out=str(tmp_path)) == EXIT["estimation"]
        assert "censored" in capsys.readouterr().err
        assert json.loads((tmp_path / "manifest.json").read_text())["status"] == 4

    def test_sweep_refuses_nonrecurrent(self, tmp_path):
        model = dict(REFERENCE_MODEL, intensity_0={"family": "Constant", "lambda": 2})
        cfg = parse_config({"command": "sweep", "model": model, "M1": 2, "n_paths": 100,
                            "starts": [[5, 0]]})
        assert run_scenario(cfg, out=str(tmp_path)) == EXIT["criterion"]

    def test_blowup(self, tmp_path):
        model = dict(REFERENCE_MODEL, diffusion={"family": "ScalarPerRegime",
                                                 "sigma_0": 1e200, "sigma_1": 1e200})
        cfg = parse_config({"command": "simulate", "model": model, "x0": 1, "z0": 0,
                            "horizon": 1})
        assert run_scenario(cfg, out=str(tmp_path)) == EXIT["blowup"]

    def test_sweep_equals_hit_runs(self, tmp_path):
        starts = [[5, 0], [10, 0, 7], [20, 1]]
        sweep = parse_config({"command": "sweep", "model": REFERENCE_MODEL, "M1": 2,
                              "n_paths": 100, "starts": starts})
        run_scenario(sweep, out=str(tmp_path / "sweep"))
        swept = (tmp_path / "sweep" / "results.csv").read_text().splitlines()
        assert len(swept) == 4
        for i, s in enumerate(starts):
            doc = {"command": "hit", "model": REFERENCE_MODEL, "M1": 2, "n_paths": 100,
                   "x0": s[0], "z0": s[1], "seed": s[2] if len(s) > 2 else 0}
            run_scenario(parse_config(doc), out=str(tmp_path / f"hit{i}"))
            single = (tmp_path / f"hit{i}" / "results.csv").read_text().splitlines()
            assert single[0] == swept[0] and single[1] == swept[i + 1]

    def test_invariant(self, tmp_path):
        cfg = parse_config({"command": "invariant", "model": REFERENCE_MODEL, "x0": 1, "z0": 0,
                            "burn_in": 5, "horizon": 50, "bins": 6, "M1": 2})
        assert run_scenario(cfg, out=str(tmp_path)) == 0
        rows = read_csv(tmp_path / "histogram.csv")
        assert len(rows) == 7
        assert sum(float(r["mass"]) for r in rows) == pytest.approx(1.0, abs=1e-12)


class TestMain:
    def test_exit_codes_and_overrides(self, tmp_path):
        good = write(tmp_path, "hit.json", {"command": "hit", "model": REFERENCE_MODEL,
                                            "x0": 5, "z0": 0, "M1": 2, "n_paths": 100})
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main([good, "--out", str(out_a), "--seed", "3"]) == 0
        assert main([good, "--out", str(out_b), "--seed", "3", "--workers", "8"]) == 0
        a = (out_a / "results.csv").read_bytes()
        assert a == (out_b / "results.csv").read_bytes()
        assert read_csv(out_a / "results.csv")[0]["seed"] == "3"

    def test_parse_error(self, tmp_path):
        bad = write(tmp_path, "bad.json", {"command": "criterion", "model": REFERENCE_MODEL,
                                           "dt": 0})
        assert main([bad, "--out", str(tmp_path / "o")]) == EXIT["parse"]
        assert main([str(tmp_path / "missing.json")]) == EXIT["parse"]
