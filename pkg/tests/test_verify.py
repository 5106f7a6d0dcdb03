import json
import math

import pytest

from trunclap import verify as vf
from trunclap.errors import InvalidParams
from trunclap.operators import OperatorSpec
from trunclap.profiles import make_gaussian
from trunclap.quad import QuadratureConfig

import oracles as ref

MINI_SUITE = """
[suite]
name = mini

[lp]
builder = liouville_plus
k = 2
N = 3
s = 0.75
radii = 1, 3

[gp]
builder = gaussian_p1
radii = 1
"""


def test_scenario_validation():
    spec = OperatorSpec("I_extremal", "plus", 2, 3, 0.75)
    g = make_gaussian(1.0)
    with pytest.raises(InvalidParams):
        vf.Scenario("x", spec, g, "hypersolution")
    with pytest.raises(InvalidParams):
        vf.Scenario("x", spec, g, "solution", 2.0, (2.0, 1.0))
    with pytest.raises(InvalidParams):
        vf.Scenario("x", spec, g, "solution", 2.0, (0.0, 1.0))
    with pytest.raises(InvalidParams):
        vf.Scenario("x", spec, g, "operator_sign", None, (1.0,))
    with pytest.raises(InvalidParams):
        vf.Scenario("x", spec, g, "solution", 2.0, (1.0,), method="line")
    sc = vf.Scenario("x", spec, g, "supersolution", 2.0, (1, 2))
    assert sc.expect == "nonpositive" and sc.sample_radii == (1.0, 2.0)


@pytest.mark.parametrize("builder,kwargs", [
    ("liouville_plus", {}),
    ("liouville_minus", {}),
    ("liouville_minus", {"k": 1, "N": 2, "p": 3.0}),
    ("propexi", {}),
    ("fundamental_I_plus", {"k": 3, "N": 4, "s": 0.8}),
    ("capped_I_plus", {}),
    ("k1_contrast", {}),
    ("glued_I_minus_N", {}),
    ("fundamental_J_plus", {}),
    ("j_minus_solution", {}),
    ("smp_counterexample", {}),
    ("smp_counterexample", {"dual": True}),
    ("frame_prediction", {}),
    ("limit_trend", {}),
])
def test_builders_pass(builder, kwargs):
    res = vf.run_scenario(vf.BUILDERS[builder](**kwargs))
    assert res.verdict == "pass", res.as_dict()
    assert all(row.ok for row in res.rows)


def test_gaussian_p1_is_a_subsolution():
    sc = vf.gaussian_p1()
    assert sc.params["kF"] == pytest.approx(0.5, rel=1e-9)
    assert sc.profile.params["beta"] == pytest.approx(0.096279, abs=1e-6)
    res = vf.run_scenario(sc)
    assert res.verdict == "pass"
    # I_k^- u + u = u/2 at every sampled radius
    for row in res.rows:
        u = math.exp(-sc.profile.params["beta"] * row.r ** 2)
        assert row.lhs == pytest.approx(0.5 * u, rel=1e-7)


def test_supersolution_claim_fails_when_the_sign_is_wrong():
    res = vf.run_scenario(vf.gaussian_p1(claim="supersolution"))
    assert res.verdict == "fail"


def test_liouville_minus_constant():
    sc = vf.liouville_minus(p=2.0)
    assert sc.params["c_bar"] == pytest.approx(-2 * ref.c_perp(1.5, 0.75), rel=1e-9)


def test_glued_scenario_notes_excluded_radii():
    sc = vf.glued_I_minus_N(radii=(0.1, 1, 2, 5))
    assert any("exclud" in n for n in sc.notes)
    assert 0.1 not in sc.sample_radii


def test_named_checks():
    assert vf.check_fundamental_I_plus(2, 0.75).passed
    assert vf.check_fundamental_I_minus_N(3, 0.75).passed
    assert vf.check_fundamental_J_plus(3, 0.8, N=4).passed
    assert vf.check_smp_counterexample(1, 2, 0.75).passed


def test_sweeps():
    t = vf.asymptotics_sweep("gamma_tilde_trend", {"N": 3}, (0.8, 0.9, 0.95, 0.99))
    assert t.monotone
    assert [row["value"] for row in t.rows] == pytest.approx([1.8812, 1.4184, 1.2044, 1.0402], abs=1e-4)
    c = vf.asymptotics_sweep("constant_trends", {"k": 3}, (0.9, 0.99))
    assert c.monotone and c.rows[-1]["gap"] < 0.05
    with pytest.raises(InvalidParams):
        vf.asymptotics_sweep("gamma_bar_trend", {}, (0.9, 0.8))
    with pytest.raises(InvalidParams):
        vf.asymptotics_sweep("nothing")


def test_load_suite_from_text_and_package():
    name, entries = vf.load_suite(MINI_SUITE)
    assert name == "mini"
    assert [e[0] for e in entries] == ["lp", "gp"]
    assert entries[0][2]["radii"] == (1, 3)
    assert entries[1][2]["radii"] == (1,)
    name, entries = vf.load_suite("paper-core")
    assert name == "paper-core" and len(entries) >= 12
    with pytest.raises(InvalidParams):
        vf.load_suite("[a]\nbuilder = nope\n")
    with pytest.raises(InvalidParams):
        vf.load_suite("no-such-suite")


def test_suite_json_is_deterministic():
    a = vf.run_suite(MINI_SUITE, gate=False).as_dict()
    b = vf.run_suite(MINI_SUITE, gate=False).as_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["verdict"] == "pass"


def test_gate_marks_changed_verdicts(monkeypatch):
    real = vf.run_scenario
    loose = QuadratureConfig.default()

    def flaky(sc, cfg=None, opt_cfg=None):
        res = real(sc, cfg, opt_cfg)
        if cfg is not None and cfg.rel_tol < loose.rel_tol:
            return vf.ScenarioResult(res.name, res.claim, res.rows, "fail", res.worst_margin)
        return res

    monkeypatch.setattr(vf, "run_scenario", flaky)
    out = vf.run_suite(MINI_SUITE, loose, gate=True)
    assert out.verdict == "fail"
    assert all("tighter" in r.notes[-1] for r in out.results)
    assert vf.run_suite(MINI_SUITE, loose, gate=False).verdict == "pass"
