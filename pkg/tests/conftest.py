import numpy as np
import pytest
from hypothesis import settings

from wignerlab.qcore import SpaceLayout, StateVector, SubspaceDecomposition

settings.register_profile("ci", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("ci")


class Lab:
    """Hand-built two-lab states with plain numpy, independent of the library's
    builders. Layout order: coin, fbar record, spin, f record."""

    layout = SpaceLayout(
        [("coin", ["h", "t"]), ("fbar", ["heads", "tails"]), ("spin", ["u", "d"]), ("f", ["up", "down"])]
    )
    e0 = np.array([1.0, 0.0])
    e1 = np.array([0.0, 1.0])
    phi_h = np.kron(e0, e0)
    phi_t = np.kron(e1, e1)
    phi_u = np.kron(e0, e0)
    phi_d = np.kron(e1, e1)
    phi_obar = (phi_h - phi_t) / np.sqrt(2)
    phi_fbar = (phi_h + phi_t) / np.sqrt(2)
    phi_o = (phi_d - phi_u) / np.sqrt(2)
    phi_f = (phi_d + phi_u) / np.sqrt(2)
    Psi = (np.kron(phi_h, phi_d) + np.kron(phi_t, phi_u) + np.kron(phi_t, phi_d)) / np.sqrt(3)

    @classmethod
    def sv(cls, amps):
        return StateVector(cls.layout, amps)

    ORDER = [("ok", "ok"), ("ok", "fail"), ("fail", "ok"), ("fail", "fail")]

    @classmethod
    def branches(lab, collapse_fbar, collapse_f):
        """Hand enumeration of the protocol up to W-bar's step as (weight,
        state) pairs, collapsing the named friends' records."""
        if not collapse_fbar:
            pieces = [(1.0, lab.Psi)]
        else:
            tails = np.kron(lab.phi_t, lab.phi_u + lab.phi_d) / np.sqrt(2)
            pieces = [(1 / 3, np.kron(lab.phi_h, lab.phi_d)), (2 / 3, tails)]
        if collapse_f:
            out = []
            for w, v in pieces:
                for y in (lab.phi_u, lab.phi_d):
                    x = np.kron(np.eye(4), np.outer(y, y)) @ v
                    p = np.vdot(x, x).real
                    if p > 1e-15:
                        out.append((w * p, x / np.sqrt(p)))
            pieces = out
        return pieces

    @classmethod
    def super_observer_joint(lab, pieces):
        """(W-bar, W) probabilities in ORDER for a list of (weight, state)."""
        P = lab.super_observers().projectors
        keys = [a[0] + b[0] for a, b in lab.ORDER]
        return np.array([sum(w * np.vdot(P[k] @ v, P[k] @ v).real for w, v in pieces) for k in keys])

    @classmethod
    def super_observers(lab):
        """{phi_obar, phi_fbar} (x) {phi_o, phi_f} on the 16-dim space, the
        complement gathered in a 'rest' block; built from raw numpy."""
        vecs = {
            a + b: np.kron(x, y)
            for a, x in (("o", lab.phi_obar), ("f", lab.phi_fbar))
            for b, y in (("o", lab.phi_o), ("f", lab.phi_f))
        }
        # complement: the lab spans are 2-dim each, so the rest is 12-dim
        span = np.array(list(vecs.values())).T
        q, _ = np.linalg.qr(np.hstack([span, np.eye(16)]))
        rest = [q[:, i] for i in range(4, 16)]
        blocks = [(k, (lab.sv(v),)) for k, v in vecs.items()] + [("rest", tuple(lab.sv(v) for v in rest))]
        return SubspaceDecomposition(lab.layout, blocks)


@pytest.fixture
def lab():
    return Lab


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Records one PASS/FAIL line per acceptance criterion for the summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
