"""Interference terms in the textbook two-slit setup.

Compares the screen statistics of the coherent superposition with the
statistics of the equal mixture over slits, with and without an agent that
records which slit the particle passed.

Run with:  python3 demos/double_slit.py
"""

from wignerlab.frlab import build_double_slit
from wignerlab.scenario import Policy, evaluate


def describe(title, rep):
    print(f"{title}")
    print(f"  superposition  {rep.superposition_expectation:.6f}")
    print(f"  slit mixture   {rep.mixture_expectation:.6f}")
    print(f"  interference   {rep.max_abs_term:.6f}")


def main():
    _, rep = build_double_slit()
    describe("no detector, bright-fringe projector", rep)
    _, rep = build_double_slit(screen_basis="slit")
    describe("no detector, screen diagonal in the slit basis", rep)
    s, rep = build_double_slit(detector=True)
    describe("with a which-slit detector", rep)
    for policy in Policy:
        d = evaluate(s, policy).marginal(["screen"])
        print(f"  {policy.value}: bright {d.get(('bright',)):.3f}  dark {d.get(('dark',)):.3f}")


if __name__ == "__main__":
    main()
