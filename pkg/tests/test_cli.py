import json
import os

import numpy as np
import pytest

from malab.cli import (
    ExperimentConfig,
    fr_holder_norm,
    fr_sample_template,
    main,
    model_solve,
    run_sections,
    verify_output,
)


def small_config(tmp, **kw):
    base = dict(
        gamma=2.0, grid_n=65, r_list=(0.3, 0.2, 0.1), refine=False,
        output_dir=str(tmp), newton_tol=1e-8,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_roundtrip_json(self, tmp_path):
        cfg = small_config(tmp_path)
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg.to_dict()))
        cfg2 = ExperimentConfig.from_json(p)
        assert cfg2 == cfg

    def test_nested_schema(self, tmp_path):
        raw = {
            "gamma": 2.0,
            "profile": {"t0": 0.1, "t0_tilde": 0.2},
            "solver": {"grid_n": 65, "refine": False},
            "r_list": [0.3, 0.2, 0.1],
            "output_dir": str(tmp_path),
        }
        cfg = ExperimentConfig.from_dict(raw)
        assert cfg.t0 == 0.1
        assert cfg.grid_n == 65
        assert not cfg.refine

    def test_r_list_must_decrease(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, r_list=(0.1, 0.2))

    def test_resolution_invariant(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, grid_n=17, r_list=(0.3, 0.2, 0.001))

    def test_alpha_rule(self, tmp_path):
        cfg = small_config(tmp_path, alpha={"c_over_log_r": 1.0})
        assert cfg.alpha_for(0.1) == pytest.approx(1.0 / abs(np.log(0.1)))


class TestMeasurements:
    def test_template_scales_with_r(self, tmp_path):
        cfg = small_config(tmp_path)
        t1 = fr_sample_template(cfg, 0.2)
        t2 = fr_sample_template(cfg, 0.1)
        assert t1.shape[1] == 2
        # the dilation image shrinks with r, the unit grid part stays
        assert np.max(np.abs(t1)) == np.max(np.abs(t2)) == 1.0

    def test_fr_norm_positive_and_decreasing_in_r(self, tmp_path):
        cfg = small_config(tmp_path)
        n1 = fr_holder_norm(cfg, 0.2, 0.5)["norm"]
        n2 = fr_holder_norm(cfg, 0.05, 0.5)["norm"]
        assert n2 > n1 > 0

    def test_model_solve_cached(self, tmp_path):
        cfg = small_config(tmp_path)
        a = model_solve(cfg, 0.2)
        b = model_solve(cfg, 0.2)
        assert a is b


class TestRunners:
    def test_sections_runner_and_verify(self, tmp_path):
        cfg = small_config(tmp_path)
        rep = run_sections(cfg)
        assert abs(rep.scalars["ecc_slope"] - 1 / 3) <= 0.05
        assert rep.scalars["sandwich_max"] <= 2.0
        assert os.path.exists(rep.files["summary"])
        assert verify_output(str(tmp_path))

    def test_rerun_identical_bytes(self, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        for out in (out1, out2):
            cfg = small_config(out)
            run_sections(cfg)
        f1 = (out1 / "sections_eccentricity.csv").read_bytes()
        f2 = (out2 / "sections_eccentricity.csv").read_bytes()
        assert f1 == f2


class TestCli:
    def test_profile_check(self, capsys):
        rc = main(["profile-check", "--gamma", "2.0"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "mollified" in out
        assert "lambda" in out

    def test_solve_subcommand(self, tmp_path, capsys):
        rc = main([
            "solve", "--grid-n", "33", "--output-dir", str(tmp_path),
            "--r-list", "0.3", "0.2", "0.1",
        ])
        out = capsys.readouterr().out
        assert rc == 0
        assert "solved exact" in out
        assert any(f.startswith("solve_exact") for f in os.listdir(tmp_path))

    def test_verify_subcommand_empty(self, tmp_path):
        rc = main(["verify", "--output-dir", str(tmp_path)])
        assert rc == 0
