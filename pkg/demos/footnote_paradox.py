"""A single friend and a single outside observer.

The friend measures a spin prepared in the plus state. The outside observer
then measures the whole lab in a basis that contains the lab's full
post-measurement state. Treated unitarily the outside result is certain;
treated as a collapse it is a coin toss, and repeated rounds drive the
collapse prediction for "always plus" towards zero.

Run with:  python3 demos/footnote_paradox.py
"""

from wignerlab.frlab import build_footnote_paradox
from wignerlab.scenario import Policy, audit, evaluate


def main():
    for policy in Policy:
        w = evaluate(build_footnote_paradox(), policy).marginal(["W"])
        print(f"{policy.value:>20}: P(W=plus) = {w.get(('plus',)):.6f}")

    print("\nRepeated rounds, probability that W always sees plus")
    for n in (1, 2, 3, 4):
        s = build_footnote_paradox(n)
        row = []
        for policy in Policy:
            d = evaluate(s, policy).distribution
            plus = sum(p for label, p in d if all(x == "plus" for x, r in zip(label, d.names) if r.startswith("W")))
            row.append(f"{policy.value} {plus:.6f}")
        print(f"  n={n}: " + "   ".join(row))

    rep = audit(build_footnote_paradox())
    print("\nAudit:", ", ".join(f"{a} -> {b} gap {g:.3f}" for a, b, g in rep.unsafe_pairs))


if __name__ == "__main__":
    main()
