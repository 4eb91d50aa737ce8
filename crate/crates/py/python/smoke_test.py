"""Smoke test for the nullgeom_py extension module."""

import json

import pytest

import nullgeom_py as ng


def test_analyze_cone():
    report = json.loads(ng.analyze("nullcone:3", grid="5"))
    assert report["schema"] == ng.SCHEMA
    assert report["status"] == "pass"
    assert report["aggregates"]["point_count"] == 125


def test_verify_rigging_passes():
    report = json.loads(ng.verify("nullcone:3", "rigging", grid="5", seed=7))
    assert report["status"] == "pass"
    assert all(c["pass"] for c in report["checks"])


def test_tight_tolerance_fails():
    report = json.loads(ng.verify("warped6d_plane", "raychaudhuri", grid="5", tolerances={"curvature": 1e-30}))
    assert report["status"] == "fail"


def test_drag_csv():
    _, csv = ng.drag("schwarzschild_horizon", eps=[-0.01, 0.0, 0.01], grid="t=5,theta=9,phi=9")
    lines = csv.strip().splitlines()
    assert lines[0] == "epsilon,area,theta_out,theta_in"
    assert len(lines) == 4


def test_input_errors():
    with pytest.raises(ValueError):
        ng.analyze("monge:u1^2", grid="5")
    with pytest.raises(ValueError):
        ng.verify("nullcone:3", "bogus")
    with pytest.raises(ValueError):
        ng.analyze("nullcone:3", tolerances={"nul": 1e-9})


def test_cli_entry_point():
    assert ng.main(["verify", "--surface", "nullcone:3", "--grid", "5", "--suite", "raychaudhuri", "-o", "/dev/null"]) == 0
    assert ng.main(["analyze"]) == 2
