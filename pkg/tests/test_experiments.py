import json
import math

import numpy as np
import pytest

from alpertlab.experiments import (
    EXPERIMENTS, ConfigError, ExperimentReport, Params, _pmap, _separation, run,
)


def test_defaults_are_valid_for_every_experiment():
    for name in EXPERIMENTS:
        Params().validate(name)


def test_derived_defaults():
    p = Params(delta=0.1, kappa=3)
    assert math.isclose(p.sigma, 0.2 / 0.9)
    assert p.tau_prime == 2


def test_violations_are_named_individually():
    p = Params(d=2, q=3.0, delta=0.0, eps=0.9, theta=2.0, eta=0.6, points_per_wavelength=3, kappa=2, sigma=0.0)
    msgs = p.violations("zero-case")
    joined = " ".join(msgs)
    for key in ("q=", "delta=", "eps=", "theta=", "eta=", "points_per_wavelength=", "kappa="):
        assert key in joined
    assert any("sigma=" in m for m in Params(delta=0.1, sigma=0.05).violations())
    with pytest.raises(ConfigError):
        p.validate("zero-case")


def test_q_threshold_depends_on_dimension():
    assert Params(d=3, q=3.5).violations() == []
    assert any("q=" in m for m in Params(d=3, q=3.0).violations())


def test_unknown_parameter_rejected():
    with pytest.raises(ConfigError):
        Params.from_mapping({"gamma": 1})


def test_report_json_round_trip(tmp_path):
    rep = run("dft", Params(s=3))
    back = ExperimentReport.from_json(rep.to_json())
    assert back.criteria == rep.criteria and back.rows == rep.rows
    assert "NaN" not in rep.to_json()
    d = rep.write(tmp_path)
    d2 = rep.write(tmp_path)
    assert d != d2
    assert Params.from_mapping(json.loads((d / "summary.json").read_text())["params"]).s == 3


def test_pmap_is_order_preserving():
    items = list(range(50))
    assert _pmap(lambda x: x * x, items, 4) == [x * x for x in items]


def test_patch_separation_check():
    nu = 0.25
    good = [(-0.625, -0.375), (-0.125, 0.125), (0.375, 0.625)]
    assert _separation(good, nu)["ok"]
    assert not _separation([(-0.1, 0.1), (0.05, 0.3), (0.4, 0.6)], nu)["ok"]


def test_trilinear_runs_and_reports_exponent():
    rep = run("trilinear", Params())
    assert rep.criterion("patches nu-disjoint on the parabola").passed
    assert "trilinear-growth" in rep.fits


def test_trilinear_rejects_d3():
    with pytest.raises(ConfigError):
        run("trilinear", Params(d=3, q=3.5, kappa=4))
