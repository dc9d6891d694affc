import numpy as np
import pytest

from random_scenarios import random_scenario
from wignerlab.errors import ZeroProbabilityError
from wignerlab.frlab import build_double_slit, build_footnote_paradox, build_fr_scenario
from wignerlab.scenario import (
    AgentMeasure,
    ExternalMeasure,
    MeasureDecl,
    Policy,
    Prepare,
    Scenario,
    agent,
    audit,
    conditional_probability,
    evaluate,
    interference_table,
    probability,
    register,
)

R2 = "1/sqrt(2)"
HT = MeasureDecl.basis([("h", ["1", "0"]), ("t", ["0", "1"])])


def marginals(lab, pieces):
    """P(W-bar = ok), P(W = ok) from the joint oracle."""
    j = lab.super_observer_joint(pieces)
    return j[0] + j[1], j[0] + j[2]


class TestAudit:
    def test_fr_pairs(self, lab):
        rep = audit(build_fr_scenario())
        wbar_u, w_u = marginals(lab, lab.branches(False, False))
        wbar_c, _ = marginals(lab, lab.branches(True, False))
        _, w_c = marginals(lab, lab.branches(False, True))
        assert [(a, b) for a, b, _ in rep.unsafe_pairs] == [("Fbar", "Wbar"), ("F", "W")]
        gaps = {(a, b): g for a, b, g in rep.unsafe_pairs}
        assert gaps[("Fbar", "Wbar")] == pytest.approx(abs(wbar_c - wbar_u), abs=1e-12)
        assert gaps[("F", "W")] == pytest.approx(abs(w_c - w_u), abs=1e-12)
        assert gaps[("Fbar", "Wbar")] == pytest.approx(1 / 3, abs=1e-12)
        assert not rep.all_safe

    def test_fr_record_details(self):
        rep = audit(build_fr_scenario())
        fbar = rep.for_record("Fbar")
        assert fbar.first_unsafe_step == 4
        # F-bar's collapse leaves W's own marginal alone but not the pair
        assert [p.safe for p in fbar.pairs] == [False, True]
        assert fbar.joint_gap == pytest.approx(1 / 3, abs=1e-12)
        f = rep.for_record("F")
        assert [p.safe for p in f.pairs] == [True, False]

    def test_footnote(self):
        rep = audit(build_footnote_paradox())
        assert [(a, b) for a, b, _ in rep.unsafe_pairs] == [("F", "W")]
        assert rep.unsafe_pairs[0][2] == pytest.approx(0.5, abs=1e-12)

    def test_diagonal_later_measurements_are_safe(self):
        regs = [register("c", ["h", "t"]), agent("g", ["h", "t"])]
        steps = [
            Prepare("c", ["1/sqrt(3)", "sqrt(2)/sqrt(3)"]),
            AgentMeasure("g", ["c"], HT, "G"),
            ExternalMeasure(["c"], HT, "X"),
            ExternalMeasure(
                ["c", "g"], MeasureDecl.blocks([("same", [["1", 0, 0, 0], [0, 0, 0, "1"]]), ("other", "*")]), "Y"
            ),
        ]
        rep = audit(Scenario(regs, steps))
        assert rep.all_safe
        assert rep.unsafe_pairs == ()

    def test_detector_in_double_slit(self):
        s, _ = build_double_slit(detector=True)
        # the screen alone cannot see interference with the detector record
        assert audit(s).all_safe

    def test_tolerance(self):
        rep = audit(build_fr_scenario(), tol=0.5)
        assert rep.all_safe


class TestInterferenceTable:
    def test_fr_rows(self):
        rows = {(r.agent_record, r.external_record, r.outcome): r for r in interference_table(build_fr_scenario())}
        r = rows[("Fbar", "Wbar", "ok")]
        assert (r.superposition, r.mixture, r.interference) == pytest.approx((1 / 6, 1 / 2, -1 / 3), abs=1e-12)
        assert r.superposition == pytest.approx(r.mixture + r.interference, abs=1e-12)

    def test_identity_per_row(self):
        for r in interference_table(build_footnote_paradox(2)):
            assert r.superposition == pytest.approx(r.mixture + r.interference, abs=1e-9)

    def test_no_agents(self):
        s, _ = build_double_slit()
        assert interference_table(s) == ()


class TestConditional:
    def test_fbar_tails_invalid(self):
        q = conditional_probability(evaluate(build_fr_scenario()), {"W": "fail"}, {"Fbar": "tails"})
        assert not q.valid and q.value is None
        assert "Fbar" in q.reason

    def test_unresolved_friend_record_is_invalid(self):
        # F's record is never read out when W-bar says fail, and F's step interferes with W
        q = conditional_probability(evaluate(build_fr_scenario()), {"W": "fail"}, {"F": "up"})
        assert not q.valid
        assert "unresolved" in q.reason

    def test_diagnostic_readout(self):
        r = evaluate(build_fr_scenario(diagnostic="b"))
        assert probability(r, {"Fbar": "heads", "F": "up"}) == 0
        q = conditional_probability(r, {"F": "down"}, {"Fbar": "heads"})
        assert q.valid and q.value == pytest.approx(1, abs=1e-12)

    def test_certain_condition_gives_unconditional(self):
        r = evaluate(build_fr_scenario())
        q = conditional_probability(r, {"W": "ok"}, lambda rec: rec["W"] in ("ok", "fail", "void"))
        assert q.valid and q.value == pytest.approx(probability(r, {"W": "ok"}), abs=1e-12)
        assert q.value == pytest.approx(1 / 6, abs=1e-12)

    def test_external_only_query(self):
        r = evaluate(build_fr_scenario())
        q = conditional_probability(r, {"W": "ok"}, {"Wbar": "ok"})
        assert q.valid and q.value == pytest.approx(0.5, abs=1e-12)

    def test_zero_probability_condition(self):
        r = evaluate(build_fr_scenario())
        with pytest.raises(ZeroProbabilityError):
            conditional_probability(r, {"W": "ok"}, {"Wbar": "void"})

    def test_zero_probability_checked_after_validity(self):
        r = evaluate(build_fr_scenario())
        q = conditional_probability(r, {"W": "ok"}, {"Fbar": "heads", "Wbar": "void"})
        assert not q.valid

    def test_order_matters(self):
        normal = conditional_probability(evaluate(build_fr_scenario(diagnostic="c")), {"Wbar": "ok"}, {"F": "down"})
        rev = conditional_probability(
            evaluate(build_fr_scenario(order="reversed", diagnostic="c")), {"Wbar": "ok"}, {"F": "down"}
        )
        assert normal.valid and normal.value == pytest.approx(0, abs=1e-12)
        assert not rev.valid

    def test_collapsed_records_are_conditionable(self):
        r = evaluate(build_fr_scenario(), Policy.COLLAPSE_ON_RECORD, viewpoint=["fbar"])
        q = conditional_probability(r, {"W": "fail"}, {"Fbar": "tails"})
        assert q.valid and "naive" in q.reason
        assert q.value == pytest.approx(1, abs=1e-12)

    def test_callable_predicates_track_records(self):
        r = evaluate(build_fr_scenario())
        q = conditional_probability(r, lambda rec: rec["W"] == "fail", lambda rec: rec["Fbar"] == "tails")
        assert not q.valid

    def test_unknown_record(self):
        with pytest.raises(KeyError):
            conditional_probability(evaluate(build_fr_scenario()), {"Q": "x"})


@pytest.mark.parametrize("seed", range(10))
def test_safe_audit_means_policies_agree(seed):
    s = random_scenario(np.random.default_rng(1000 + seed))
    u = evaluate(s, Policy.UNITARY_AGENTS).distribution
    c = evaluate(s, Policy.COLLAPSE_ON_RECORD).distribution
    if audit(s).all_safe:
        assert u.max_gap(c) <= 1e-9
    else:
        assert u.max_gap(c) > 1e-9
