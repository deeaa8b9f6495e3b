from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from isohk.cli import main, parse_config, run_checks
from isohk.errors import ConfigError, UnsupportedOrders
from isohk.moduli import random_point


def config(**doc) -> str:
    return json.dumps({"kind": "general", "pole_orders": [7], **doc})


def write(tmp_path, doc, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc, encoding="utf-8")
    return str(path)


def test_minimal_config():
    cfg = parse_config(config(point={"a_inf": ["1", "0"], "q": ["2"], "v": ["0"]}, hbar=["1"]))
    assert cfg.orders.n == 1
    assert cfg.points[0].q == (2,)
    assert cfg.checks == ("potential", "flows", "two-forms", "metric", "genericity")
    assert cfg.mode == "auto"


def test_numbers_keep_exactness():
    cfg = parse_config(config(point={"a_inf": ["3/4", "-1/2"], "q": ["1/2"], "v": ["2/3"]}, hbar=["3/4", "2+3i"]))
    assert cfg.points[0].base.a_inf == (Fraction(3, 4), Fraction(-1, 2))
    assert cfg.exact_input
    cfg = parse_config(config(point={"a_inf": ["1.5e-2", "0"], "q": ["2"], "v": ["0"]}))
    assert not cfg.exact_input


def test_default_point_is_seed_zero():
    cfg = parse_config(config())
    assert cfg.points == (random_point(cfg.orders, 0),)


def test_random_points_follow_the_seed():
    cfg = parse_config(config(seed=4, random_points=2))
    assert cfg.points == (random_point(cfg.orders, 4), random_point(cfg.orders, 5))


@pytest.mark.parametrize(
    "text,path",
    [
        ("{not json", ""),
        (config(colour="red"), "colour"),
        (config(point={"a_inf": ["1", "0"], "q": ["2"], "v": ["0"], "extra": ["1"]}), "point.extra"),
        (config(hbar=[1]), "hbar[0]"),
        (config(point={"a_inf": [1, "0"], "q": ["2"], "v": ["0"]}), "point.a_inf[0]"),
        (config(random_points=2), "seed"),
        (config(checks=["flows", "bogus"]), "checks[1]"),
        (config(mode="fast"), "mode"),
        (config(hbar=["0"]), "hbar"),
        (config(tolerances={"residual": "-1"}), "tolerances.residual"),
        (config(point={"a_inf": ["1", "0"], "q": ["-1"], "v": ["0"]}), "point"),
        (json.dumps({"kind": "pvi", "checks": ["flows"]}), "checks[0]"),
        (json.dumps({"kind": "pvi", "point": {"a": "1", "w": "2", "q": "3"}}), "point.v"),
    ],
)
def test_config_errors_name_the_path(text, path):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == path


@pytest.mark.parametrize("orders", [[5], [6], [7, 2]])
def test_unsupported_orders(orders):
    with pytest.raises(UnsupportedOrders):
        parse_config(json.dumps({"kind": "general", "pole_orders": orders}))


def test_exact_mode_needs_rational_p():
    doc = {"kind": "pvi", "point": {"a": "1", "w": "2", "q": "3", "v": "1/2"}, "mode": "exact"}
    with pytest.raises(ConfigError):
        parse_config(json.dumps(doc))


def test_exit_code_two_on_config_errors(tmp_path, capsys):
    assert main(["verify", "--config", write(tmp_path, {"kind": "general", "pole_orders": [5]})]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["verify", "--config", write(tmp_path, "{oops")]) == 2
    assert main(["verify", "--config", write(tmp_path, {"kind": "general", "pole_orders": [7], "random_points": 1})]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["verify", "--config", write(tmp_path, config()), "--checks", "flows,nope"]) == 2


def test_cubic_all_checks_pass_and_reports_are_identical(tmp_path):
    path = write(tmp_path, {"kind": "general", "pole_orders": [7], "hbar": ["1", "2", "i"], "seed": 3, "random_points": 1})
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["verify", "--config", path, "--out", str(out1)]) == 0
    assert main(["verify", "--config", path, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    report = json.loads(out1.read_text())
    names = [c["name"] for c in report["checks"]]
    assert len(names) == len(set(names))
    assert all(c["status"] == "pass" for c in report["checks"])
    assert report["meta"]["mode"] == "exact" and report["meta"]["timing"] is None
    for c in report["checks"]:
        if c["residual"] is not None:
            mantissa = c["residual"].split("e")[0].lstrip("-").replace(".", "")
            assert len(mantissa) == 17


def test_float_mode_and_check_selection(tmp_path):
    path = write(tmp_path, config(seed=1, random_points=1))
    out = tmp_path / "r.json"
    assert main(["verify", "--config", path, "--mode", "float", "--checks", "flows", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["meta"]["mode"] == "float"
    assert {c["name"].split(".")[0] for c in report["checks"]} == {"flows"}


def test_failing_check_gives_exit_one(tmp_path):
    path = write(tmp_path, config(seed=1, random_points=1))
    out = tmp_path / "r.json"
    # a negative tolerance is rejected, but a vanishing float tolerance makes float checks fail
    assert main(["verify", "--config", path, "--mode", "float", "--tol", "1e-300", "--checks", "two-forms", "--out", str(out)]) == 1
    report = json.loads(out.read_text())
    assert any(c["status"] == "fail" for c in report["checks"])


def test_pvi_suite(tmp_path):
    path = write(tmp_path, {"kind": "pvi", "hbar": ["1", "2"], "integrate": {"from": "2", "to": "3", "detour": "3/10"}})
    out = tmp_path / "p.json"
    assert main(["pvi", "check", "--config", path, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    names = [c["name"] for c in report["checks"]]
    for group in ("potentials", "flows", "flow_residual", "omega", "metric", "euler", "killing", "ricci", "integrate"):
        assert f"pvi.{group}[0]" in names
    assert "pvi.algebraic" in names
    assert all(c["status"] == "pass" for c in report["checks"])


def test_pvi_integrate_subcommand(tmp_path):
    out = tmp_path / "i.json"
    assert main(["pvi", "integrate", "--from", "2", "--to", "3", "--out", str(out)]) == 0
    check = json.loads(out.read_text())["checks"][0]
    assert check["name"] == "pvi.integrate" and check["status"] == "pass"
    assert float(check["residual"]) < 1e-6
    # along the real segment the flow meets a chart singularity
    assert main(["pvi", "integrate", "--to", "3", "--detour", "0", "--out", str(out)]) == 1


def test_run_checks_never_aborts():
    cfg = parse_config(json.dumps({"kind": "pvi", "checks": ["pvi"], "integrate": {"to": "3", "detour": "0"}}))
    report = run_checks(cfg)
    failed = [c for c in report.checks if c.status == "fail"]
    assert [c.name for c in failed] == ["pvi.integrate[0]"]
    assert "SingularConfiguration" in failed[0].details


def test_module_entry_point(tmp_path):
    path = write(tmp_path, {"kind": "general", "pole_orders": [6]})
    proc = subprocess.run([sys.executable, "-m", "isohk", "verify", "--config", path], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "pole_orders" in proc.stderr
