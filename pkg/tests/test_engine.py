import numpy as np
import pytest

from wignerlab.errors import ScenarioError
from wignerlab.frlab import build_footnote_paradox, build_fr_scenario, state_after
from wignerlab.qcore import random_unitary_matrix, qudits
from wignerlab.scenario import (
    UNRESOLVED,
    AgentMeasure,
    ApplyUnitary,
    ControlledPrepare,
    ExternalMeasure,
    MeasureDecl,
    Policy,
    Prepare,
    Scenario,
    agent,
    evaluate,
    register,
)
from wignerlab.scenario.engine import apply_local

R2 = "1/sqrt(2)"
ZO = MeasureDecl.basis([("a", ["1", "0"]), ("b", ["0", "1"])])


class TestFr:
    def test_state_after_friends(self, lab):
        assert np.allclose(state_after(build_fr_scenario(), 4).amps, lab.Psi, atol=1e-12)

    def test_unitary_joint(self, lab):
        r = evaluate(build_fr_scenario(), Policy.UNITARY_AGENTS)
        ext = r.external_distribution()
        expected = lab.super_observer_joint(lab.branches(False, False))
        assert np.allclose(expected, np.array([1, 1, 1, 9]) / 12, atol=1e-12)
        assert np.allclose([ext.get(k) for k in lab.ORDER], expected, atol=1e-12)
        assert all(b.records["Fbar"] == UNRESOLVED for b in r.branches)
        # W-bar = ok leaves phi_obar (x) phi_u, so F's record becomes definite
        for b in r.branches:
            assert b.records["F"] == ("up" if b.records["Wbar"] == "ok" else UNRESOLVED)

    def test_collapse_every_agent(self, lab):
        ext = evaluate(build_fr_scenario(), Policy.COLLAPSE_ON_RECORD).external_distribution()
        expected = lab.super_observer_joint(lab.branches(True, True))
        assert np.allclose(expected, 0.25, atol=1e-12)
        assert np.allclose([ext.get(k) for k in lab.ORDER], expected, atol=1e-12)

    def test_collapse_fbar_only(self, lab):
        ext = evaluate(build_fr_scenario(), Policy.COLLAPSE_ON_RECORD, viewpoint=["fbar"]).external_distribution()
        expected = lab.super_observer_joint(lab.branches(True, False))
        assert np.allclose(expected, np.array([1, 5, 1, 5]) / 12, atol=1e-12)
        assert np.allclose([ext.get(k) for k in lab.ORDER], expected, atol=1e-12)

    def test_ok_ok_cell_unchanged_by_fbar_collapse(self):
        u = evaluate(build_fr_scenario()).external_distribution()
        c = evaluate(build_fr_scenario(), Policy.COLLAPSE_ON_RECORD, viewpoint=["fbar"]).external_distribution()
        assert u.get(("ok", "ok")) == pytest.approx(c.get(("ok", "ok")), abs=1e-12)
        assert c.get(("ok", "fail")) - u.get(("ok", "fail")) == pytest.approx(4 / 12, abs=1e-12)
        assert u.get(("fail", "fail")) - c.get(("fail", "fail")) == pytest.approx(4 / 12, abs=1e-12)

    def test_collapsed_records_are_definite(self):
        r = evaluate(build_fr_scenario(), Policy.COLLAPSE_ON_RECORD)
        assert {b.records["Fbar"] for b in r.branches} == {"heads", "tails"}
        assert r.marginal(["Fbar"]).get(("heads",)) == pytest.approx(1 / 3, abs=1e-12)

    def test_diagnostic_readout_resolves_agent_records(self):
        r = evaluate(build_fr_scenario(diagnostic="b"))
        m = r.marginal(["Fbar", "F"])
        assert m.get(("heads", "up")) == 0
        assert m.get(("heads", "down")) == pytest.approx(1 / 3, abs=1e-12)
        assert m.get(("tails", "up")) == pytest.approx(1 / 3, abs=1e-12)
        assert all(b.resolved_at["F"] == 4 for b in r.branches)

    def test_annotations(self):
        r = evaluate(build_fr_scenario())
        assert len(r.annotations) == 6
        assert "entangled" in r.annotations[1]
        assert r.annotations[-2].endswith("record Wbar; 2 branches")
        assert r.annotations[-1].endswith("record W; 4 branches")

    def test_deterministic(self):
        a, b = evaluate(build_fr_scenario()), evaluate(build_fr_scenario())
        assert a.distribution.items() == b.distribution.items()

    def test_unknown_viewpoint(self):
        with pytest.raises(ScenarioError):
            evaluate(build_fr_scenario(), Policy.COLLAPSE_ON_RECORD, viewpoint=["nobody"])


class TestFootnote:
    def test_unitary_certain(self):
        w = evaluate(build_footnote_paradox()).marginal(["W"])
        assert w.get(("plus",)) == pytest.approx(1, abs=1e-12)

    def test_collapse_half(self):
        w = evaluate(build_footnote_paradox(), Policy.COLLAPSE_ON_RECORD).marginal(["W"])
        assert w.get(("plus",)) == pytest.approx(0.5, abs=1e-12)
        assert w.get(("minus",)) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_repetitions(self, n):
        s = build_footnote_paradox(n)
        names = [f"W_{k}" for k in range(1, n + 1)] if n > 1 else ["W"]
        c = evaluate(s, Policy.COLLAPSE_ON_RECORD).marginal(names)
        u = evaluate(s).marginal(names)
        assert c.get(("plus",) * n) == pytest.approx(0.5**n, abs=1e-12)
        assert u.get(("plus",) * n) == pytest.approx(1, abs=1e-12)


class TestBasics:
    def test_indicator(self):
        s = Scenario([register("x", ["a", "b"])], [Prepare("x", ["0", "1"]), ExternalMeasure(["x"], ZO, "R")])
        r = evaluate(s)
        assert r.distribution.as_dict() == {("b",): 1.0}
        assert len(r.branches) == 1

    def test_zero_weight_branches_pruned(self):
        s = Scenario([register("x", ["a", "b"])], [Prepare("x", ["1", "0"]), ExternalMeasure(["x"], ZO, "R")])
        assert [b.records["R"] for b in evaluate(s).branches] == ["a"]

    def test_weights_and_norms(self, rng):
        U = random_unitary_matrix(4, rng)
        s = Scenario(
            [register("x", ["a", "b"]), register("y", ["a", "b"])],
            [
                Prepare("x", [R2, R2]),
                ApplyUnitary(["x", "y"], [list(r) for r in U]),
                ExternalMeasure(["x"], ZO, "X"),
                ExternalMeasure(["y"], ZO, "Y"),
            ],
        )
        r = evaluate(s)
        assert sum(b.weight for b in r.branches) == pytest.approx(1, abs=1e-9)
        assert all(abs(b.state.norm - 1) <= 1e-9 for b in r.branches)
        # independent oracle: Born rule on the full vector
        psi = U @ np.kron(np.array([1, 1]) / np.sqrt(2), [1, 0])
        for k, (x, y) in enumerate([("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]):
            assert r.distribution.get((x, y)) == pytest.approx(abs(psi[k]) ** 2, abs=1e-12)

    def test_controlled_prepare_policies_agree_on_externals(self):
        regs = [register("c", ["h", "t"]), agent("g", ["h", "t"]), register("s", ["u", "d"])]
        steps = [
            Prepare("c", ["1/sqrt(3)", "sqrt(2)/sqrt(3)"]),
            AgentMeasure("g", ["c"], MeasureDecl.basis([("h", ["1", "0"]), ("t", ["0", "1"])]), "G"),
            ControlledPrepare("s", "G", [("h", ["0", "1"]), ("t", [R2, R2])]),
            ExternalMeasure(["s"], MeasureDecl.basis([("u", ["1", "0"]), ("d", ["0", "1"])]), "S"),
        ]
        s = Scenario(regs, steps)
        for policy in Policy:
            d = evaluate(s, policy).marginal(["S"])
            assert d.get(("u",)) == pytest.approx(1 / 3, abs=1e-12)
            assert d.get(("d",)) == pytest.approx(2 / 3, abs=1e-12)

    def test_controlled_prepare_by_external_record(self):
        regs = [register("c", ["h", "t"]), register("s", ["u", "d"])]
        steps = [
            Prepare("c", [R2, R2]),
            ExternalMeasure(["c"], MeasureDecl.basis([("h", ["1", "0"]), ("t", ["0", "1"])]), "C"),
            ControlledPrepare("s", "C", [("h", ["1", "0"]), ("t", ["0", "1"])]),
            ExternalMeasure(["s"], MeasureDecl.basis([("u", ["1", "0"]), ("d", ["0", "1"])]), "S"),
        ]
        d = evaluate(Scenario(regs, steps)).distribution
        assert d.as_dict() == pytest.approx({("h", "u"): 0.5, ("t", "d"): 0.5})

    def test_controlled_prepare_needs_fiducial_target(self):
        regs = [register("c", ["h", "t"]), agent("g", ["h", "t"]), register("s", ["u", "d"])]
        steps = [
            Prepare("c", [R2, R2]),
            Prepare("s", ["0", "1"]),
            AgentMeasure("g", ["c"], MeasureDecl.basis([("h", ["1", "0"]), ("t", ["0", "1"])]), "G"),
            ControlledPrepare("s", "G", [("h", ["1", "0"]), ("t", ["0", "1"])]),
        ]
        with pytest.raises(ScenarioError):
            evaluate(Scenario(regs, steps))

    def test_agent_must_be_ready(self):
        regs = [register("c", ["h", "t"]), agent("g", ["h", "t"])]
        meas = MeasureDecl.basis([("h", ["1", "0"]), ("t", ["0", "1"])])
        steps = [Prepare("c", [R2, R2]), AgentMeasure("g", ["c"], meas, "G1"), AgentMeasure("g", ["c"], meas, "G2")]
        with pytest.raises(ScenarioError):
            evaluate(Scenario(regs, steps))

    def test_unitary_agent_record_stays_unresolved_without_readout(self):
        regs = [register("c", ["h", "t"]), agent("g", ["h", "t"])]
        meas = MeasureDecl.basis([("h", ["1", "0"]), ("t", ["0", "1"])])
        s = Scenario(regs, [Prepare("c", [R2, R2]), AgentMeasure("g", ["c"], meas, "G")])
        assert evaluate(s).distribution.as_dict() == {(UNRESOLVED,): 1.0}
        collapsed = evaluate(s, Policy.COLLAPSE_ON_RECORD).distribution.as_dict()
        assert collapsed == pytest.approx({("h",): 0.5, ("t",): 0.5})


def test_apply_local_matches_kron(rng):
    L = qudits(2, 3, 2)
    psi = rng.normal(size=12) + 1j * rng.normal(size=12)
    A = random_unitary_matrix(4, rng)
    # acting on (q2, q0): permute to (q2, q0, q1), apply A (x) I, permute back
    t = psi.reshape(2, 3, 2).transpose(2, 0, 1).reshape(-1)
    t = (np.kron(A, np.eye(3)) @ t).reshape(2, 2, 3).transpose(1, 2, 0).reshape(-1)
    assert np.allclose(apply_local(psi, L, ["q2", "q0"], A), t)
