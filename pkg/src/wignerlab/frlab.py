"""
Builders for the extended Wigner's friend protocol, the two-lab footnote
paradox and the double slit, plus the analysis of the three conditional
statements of the protocol.

Each laboratory is modeled by the two-dimensional span of its macroscopic
outcome states: ``phi_h = psi_h (x) theta_h`` and so on, with one register
for the measured system and one agent-record register. The full layout is
``coin, fbar, spin, f`` (16 dimensions).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .interference import InterferenceReport, collapse_safety, interference_report
from .measure import born_distribution, observable_from
from .qcore import (
    OrthonormalBasis,
    SelfAdjointOperator,
    SpaceLayout,
    StateVector,
    SubspaceDecomposition,
    complete_decomposition,
    inner,
    ket,
    lift_decomposition,
    lift_operator,
    product_decomposition,
    tensor,
)
from .scenario.audit import audit, conditional_probability
from .scenario.engine import Policy, evaluate
from .scenario.expr import amp_value
from .scenario.model import (
    AgentMeasure,
    ControlledPrepare,
    ExternalMeasure,
    MeasureDecl,
    Prepare,
    Scenario,
    agent,
    measurement_vectors,
    register,
)

R2 = "1/sqrt(2)"
M2 = "-1/sqrt(2)"
ZERO_TOL = 1e-12

COIN = register("coin", ["h", "t"])
FBAR = agent("fbar", ["heads", "tails"], ready="heads")
SPIN = register("spin", ["u", "d"])
F = agent("f", ["up", "down"], ready="up")
WBAR_EQUIPMENT = agent("wbar", ["ok", "fail", "void"], ready="ok")

FR_LAYOUT = SpaceLayout([(r.name, r.labels) for r in (COIN, FBAR, SPIN, F)])


def _unit(n: int, j: int) -> list[str]:
    v = ["0"] * n
    v[j] = "1"
    return v


# lab (system, record) amplitude order: |h,heads>, |h,tails>, |t,heads>, |t,tails>
_LAB_OK_BAR = [R2, "0", "0", M2]  # (phi_h - phi_t)/sqrt2
_LAB_FAIL_BAR = [R2, "0", "0", R2]
# |u,up>, |u,down>, |d,up>, |d,down>
_LAB_OK = [M2, "0", "0", R2]  # (phi_d - phi_u)/sqrt2
_LAB_FAIL = [R2, "0", "0", R2]


def _wbar_decl() -> MeasureDecl:
    return MeasureDecl.blocks([("ok", [_LAB_OK_BAR]), ("fail", [_LAB_FAIL_BAR]), ("void", "*")])


def _w_decl() -> MeasureDecl:
    return MeasureDecl.blocks([("ok", [_LAB_OK]), ("fail", [_LAB_FAIL]), ("void", "*")])


def _friends_steps() -> list:
    return [
        Prepare("coin", ["1/sqrt(3)", "sqrt(2)/sqrt(3)"]),
        AgentMeasure("fbar", ["coin"], MeasureDecl.basis([("heads", ["1", "0"]), ("tails", ["0", "1"])]), "Fbar"),
        ControlledPrepare("spin", "Fbar", [("heads", ["0", "1"]), ("tails", [R2, R2])]),
        AgentMeasure("f", ["spin"], MeasureDecl.basis([("up", ["1", "0"]), ("down", ["0", "1"])]), "F"),
    ]


def _htud_decl() -> MeasureDecl:
    # joint lab states phi_x (x) phi_y on coin,fbar,spin,f
    idx = {"h": 0, "t": 3, "u": 0, "d": 3}
    blocks = [(x + y, [_unit(16, 4 * idx[x] + idx[y])]) for x in "ht" for y in "ud"]
    return MeasureDecl.blocks(blocks + [("void", "*")])


def _f_lab_decl() -> MeasureDecl:
    return MeasureDecl.blocks([("up", [_unit(4, 0)]), ("down", [_unit(4, 3)]), ("void", "*")])


def build_fr_scenario(order: str = "normal", diagnostic: str | None = None) -> Scenario:
    """The protocol as a scenario.

    ``order="reversed"`` lets W measure before W-bar. ``diagnostic`` appends
    an explicit read-out used for the conditional statements:

    * ``"b"``: right after F's step, a measurement of both labs in the basis
      ``{phi_h phi_u, phi_h phi_d, phi_t phi_u, phi_t phi_d}`` (record ``D``);
      the super-observers' steps are left out since this read-out would
      destroy the superposition they probe.
    * ``"c"``: right after W-bar's step, a measurement of F's lab in
      ``{phi_u, phi_d}`` (record ``C``).
    """
    if order not in ("normal", "reversed"):
        raise ValueError("order must be 'normal' or 'reversed'")
    if diagnostic not in (None, "b", "c"):
        raise ValueError("diagnostic must be None, 'b' or 'c'")
    steps = _friends_steps()
    if diagnostic == "b":
        steps.append(ExternalMeasure(["coin", "fbar", "spin", "f"], _htud_decl(), "D"))
        return Scenario([COIN, FBAR, SPIN, F], steps)
    wbar = ExternalMeasure(["coin", "fbar"], _wbar_decl(), "Wbar")
    w = ExternalMeasure(["spin", "f"], _w_decl(), "W")
    later = [wbar, w] if order == "normal" else [w, wbar]
    if diagnostic == "c":
        later.insert(later.index(wbar) + 1, ExternalMeasure(["spin", "f"], _f_lab_decl(), "C"))
    return Scenario([COIN, FBAR, SPIN, F], steps + later)


def build_theta_scenario() -> Scenario:
    """Protocol up to W-bar's experiment with W-bar's equipment modeled as an
    agent register (labels ``ok, fail, void``)."""
    steps = _friends_steps() + [AgentMeasure("wbar", ["coin", "fbar"], _wbar_decl(), "Wbar")]
    return Scenario([WBAR_EQUIPMENT, COIN, FBAR, SPIN, F], steps)


def state_after(s: Scenario, n_steps: int) -> StateVector:
    """The (single-branch) state after the first ``n_steps`` steps, with
    every agent unitary."""
    r = evaluate(s.truncated(n_steps), Policy.UNITARY_AGENTS)
    if len(r.branches) != 1:
        raise ValueError("the prefix has split into several branches")
    return r.branches[0].state


# ---------------------------------------------------------------------------
# named states
# ---------------------------------------------------------------------------


def _reg_layout(r) -> SpaceLayout:
    return SpaceLayout([(r.name, r.labels)])


@dataclass(frozen=True, eq=False)
class FrStates:
    """Named states of the protocol.

    Single-register states live on their register, lab states on the lab's
    two registers, ``Psi`` on the 16-dimensional layout and ``Theta`` on the
    layout with W-bar's equipment register in front.
    """

    psi_h: StateVector
    psi_t: StateVector
    psi_u: StateVector
    psi_d: StateVector
    theta_h: StateVector
    theta_t: StateVector
    theta_u: StateVector
    theta_d: StateVector
    phi_h: StateVector
    phi_t: StateVector
    phi_u: StateVector
    phi_d: StateVector
    phi_obar: StateVector
    phi_fbar: StateVector
    phi_o: StateVector
    phi_f: StateVector
    theta_obar: StateVector
    theta_fbar: StateVector
    Psi: StateVector
    Theta: StateVector = field(repr=False)

    def theta_basis(self) -> dict:
        """The four orthonormal states Theta is expanded over."""
        return {
            (w, y): tensor(
                tensor(getattr(self, f"theta_{w}"), getattr(self, f"phi_{w}")),
                getattr(self, f"phi_{y}"),
            )
            for w in ("obar", "fbar")
            for y in ("u", "d")
        }

    def theta_coefficients(self) -> dict:
        return {k: inner(v, self.Theta) for k, v in self.theta_basis().items()}


def fr_states() -> FrStates:
    coin, fbar, spin, f, wbar = (_reg_layout(r) for r in (COIN, FBAR, SPIN, F, WBAR_EQUIPMENT))
    psi_h, psi_t = ket(coin, ["h"]), ket(coin, ["t"])
    psi_u, psi_d = ket(spin, ["u"]), ket(spin, ["d"])
    theta_h, theta_t = ket(fbar, ["heads"]), ket(fbar, ["tails"])
    theta_u, theta_d = ket(f, ["up"]), ket(f, ["down"])
    phi_h, phi_t = tensor(psi_h, theta_h), tensor(psi_t, theta_t)
    phi_u, phi_d = tensor(psi_u, theta_u), tensor(psi_d, theta_d)
    s = 1 / np.sqrt(2)
    Psi = (tensor(phi_h, phi_d) + tensor(phi_t, phi_u) + tensor(phi_t, phi_d)) * (1 / np.sqrt(3))
    theta = build_theta_scenario()
    return FrStates(
        psi_h, psi_t, psi_u, psi_d,
        theta_h, theta_t, theta_u, theta_d,
        phi_h, phi_t, phi_u, phi_d,
        (phi_h - phi_t) * s, (phi_h + phi_t) * s,
        (phi_d - phi_u) * s, (phi_d + phi_u) * s,
        ket(wbar, ["ok"]), ket(wbar, ["fail"]),
        Psi,
        state_after(theta, len(theta.steps)),
    )


# ---------------------------------------------------------------------------
# statements (a), (b), (c)
# ---------------------------------------------------------------------------

HOLDS = "HOLDS"
INVALID_QUERY = "INVALID_QUERY"


@dataclass(frozen=True)
class StatementReport:
    statement: str
    verdict: str
    numbers: dict
    note: str = ""


def heads_tails_decomposition(layout: SpaceLayout = FR_LAYOUT) -> SubspaceDecomposition:
    """F-bar's record decomposition ``{phi_h (x) ..., phi_t (x) ...}``."""
    rec = _reg_layout(FBAR)
    local = SubspaceDecomposition(rec, [(l, (ket(rec, [l]),)) for l in FBAR.labels])
    return lift_decomposition(local, layout)


def htud_decomposition(st: FrStates | None = None) -> SubspaceDecomposition:
    """Blocks ``phi_x (x) phi_y`` plus the complement ``void``."""
    st = st or fr_states()
    blocks = [
        (x + y, (tensor(getattr(st, f"phi_{x}"), getattr(st, f"phi_{y}")),))
        for x in "ht"
        for y in "ud"
    ]
    return complete_decomposition(blocks, FR_LAYOUT, "void")


def super_observer_measurement(which: str) -> SubspaceDecomposition:
    """W-bar's (``"wbar"``) or W's (``"w"``) measurement lifted to the 16-dim layout."""
    s = build_fr_scenario()
    step = s.steps[s.record_step("Wbar" if which == "wbar" else "W")]
    sub = FR_LAYOUT.sublayout(step.targets)
    blocks = [
        (label, tuple(StateVector(sub, c) for c in V.T))
        for label, V in measurement_vectors(step.measurement, sub.total_dim, "measurement")
    ]
    return lift_decomposition(SubspaceDecomposition(sub, blocks), FR_LAYOUT)


def joint_super_observer_measurement() -> SubspaceDecomposition:
    return product_decomposition(super_observer_measurement("wbar"), super_observer_measurement("w"))


def statement_reports() -> tuple[StatementReport, StatementReport, StatementReport]:
    st = fr_states()
    fr = build_fr_scenario()
    psi_after_f = state_after(fr, 4)

    # (a) F-bar sees tails => W gets fail
    run = evaluate(fr, Policy.UNITARY_AGENTS)
    q = conditional_probability(run, {"W": "fail"}, {"Fbar": "tails"})
    safety = collapse_safety(psi_after_f, heads_tails_decomposition(), super_observer_measurement("wbar"))
    pair = [g for rec, later, g in audit(fr).unsafe_pairs if rec == "Fbar"]
    a = StatementReport(
        "a",
        HOLDS if q.valid else INVALID_QUERY,
        {"safety_gap": safety.gap, "audit_gap": pair[0] if pair else 0.0, "value": q.value},
        q.reason,
    )

    # (b) F-bar sees heads => F sees down
    diag = evaluate(build_fr_scenario(diagnostic="b"))
    p_hu = diag.marginal(["D"]).get(("hu",))
    amp = abs(inner(tensor(st.phi_h, st.phi_u), st.Psi))
    qb = conditional_probability(diag, {"F": "down"}, {"Fbar": "heads"})
    b = StatementReport(
        "b",
        HOLDS if p_hu <= ZERO_TOL and amp <= ZERO_TOL and qb.valid and abs(qb.value - 1) <= ZERO_TOL else INVALID_QUERY,
        {"p_heads_up": p_hu, "amplitude": amp, "value": qb.value},
        qb.reason,
    )

    # (c) F sees down => W-bar gets ok is impossible
    coeff = abs(st.theta_coefficients()[("obar", "d")])
    qc = conditional_probability(evaluate(build_fr_scenario(diagnostic="c")), {"Wbar": "ok"}, {"F": "down"})
    qr = conditional_probability(
        evaluate(build_fr_scenario(order="reversed", diagnostic="c")), {"Wbar": "ok"}, {"F": "down"}
    )
    c = StatementReport(
        "c",
        HOLDS if coeff <= ZERO_TOL and qc.valid and qc.value <= ZERO_TOL else INVALID_QUERY,
        {
            "theta_coefficient": coeff,
            "psi_overlap": abs(inner(tensor(st.phi_obar, st.phi_d), st.Psi)),
            "value": qc.value,
            "reversed_valid": qr.valid,
        },
        qc.reason,
    )
    return a, b, c


# ---------------------------------------------------------------------------
# footnote paradox and double slit
# ---------------------------------------------------------------------------


def build_footnote_paradox(repetitions: int = 1) -> Scenario:
    """F measures ``(psi_1 + psi_2)/sqrt2``; W then measures F's lab in
    ``{(psi_1 theta_1 +- psi_2 theta_2)/sqrt2}`` (outcomes ``plus``, ``minus``,
    and ``rest`` for the complement). Repeated independently
    ``repetitions`` times."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    regs, steps = [], []
    for k in range(1, repetitions + 1):
        sfx = "" if repetitions == 1 else f"_{k}"
        sys_, ag = f"s{sfx}", f"f{sfx}"
        regs += [register(sys_, ["s1", "s2"]), agent(ag, ["o1", "o2"], ready="o1")]
        steps += [
            Prepare(sys_, [R2, R2]),
            AgentMeasure(ag, [sys_], MeasureDecl.basis([("o1", ["1", "0"]), ("o2", ["0", "1"])]), f"F{sfx}"),
            ExternalMeasure(
                [sys_, ag],
                MeasureDecl.blocks([("plus", [[R2, "0", "0", R2]]), ("minus", [[R2, "0", "0", M2]]), ("rest", "*")]),
                f"W{sfx}",
            ),
        ]
    return Scenario(regs, steps)


SLITS = register("x", ["slit1", "slit2"])
DETECTOR = agent("d", ["upper", "lower"], ready="upper")


def _screen_decl(basis: str) -> MeasureDecl:
    if basis == "fringe":
        return MeasureDecl.basis([("bright", [R2, R2]), ("dark", [R2, M2])])
    if basis == "slit":
        return MeasureDecl.basis([("upper", ["1", "0"]), ("lower", ["0", "1"])])
    raise ValueError("screen basis must be 'fringe' or 'slit'")


def build_double_slit(
    screen_values=(1.0, 0.0), detector: bool = False, screen_basis: str = "fringe"
) -> tuple[Scenario, InterferenceReport]:
    """Particle through two slits, ``psi = (psi_1 + psi_2)/sqrt2``, then the
    screen. The screen observable takes ``screen_values`` on the screen basis
    (``fringe``: ``(psi_1 +- psi_2)/sqrt2``; ``slit``: ``psi_1, psi_2``).

    With ``detector`` an agent records the slit first and reads it out at the
    end (record ``slit``). The report gives the screen observable's
    interference terms with respect to the slit decomposition at the state
    reaching the screen.
    """
    screen = _screen_decl(screen_basis)
    prep = Prepare("x", [R2, R2])
    read = ExternalMeasure(["x"], screen, "screen")
    x_layout = _reg_layout(SLITS)
    vecs = [StateVector(x_layout, [amp_value(a) for a in v[0]]) for _, v in screen.entries]
    S_local = observable_from(OrthonormalBasis(x_layout, vecs, screen.labels), screen_values)
    slit_basis = OrthonormalBasis(x_layout, [ket(x_layout, ["slit1"]), ket(x_layout, ["slit2"])], ["slit1", "slit2"])
    if not detector:
        s = Scenario([SLITS], [prep, read])
        psi = state_after(s, 1)
        return s, interference_report(S_local, slit_basis, psi)
    which = AgentMeasure("d", ["x"], MeasureDecl.basis([("upper", ["1", "0"]), ("lower", ["0", "1"])]), "D")
    readout = ExternalMeasure(["d"], MeasureDecl.basis([("upper", ["1", "0"]), ("lower", ["0", "1"])]), "slit")
    s = Scenario([SLITS, DETECTOR], [prep, which, read, readout])
    psi = state_after(s, 2)
    S = SelfAdjointOperator(s.layout, lift_operator(S_local.matrix, x_layout, s.layout))
    return s, interference_report(S, lift_decomposition(slit_basis, s.layout), psi)


def slit_distribution():
    """Born distribution of the slit read-out for ``(psi_1 + psi_2)/sqrt2``."""
    x_layout = _reg_layout(SLITS)
    psi = StateVector(x_layout, np.array([1, 1]) / np.sqrt(2))
    slits = OrthonormalBasis(x_layout, [ket(x_layout, ["slit1"]), ket(x_layout, ["slit2"])], ["slit1", "slit2"])
    return born_distribution(psi, slits)
