"""Walk through the four-agent scenario step by step.

Two friends measure inside sealed labs: F-bar flips a weighted coin and F
reads a spin prepared from it. Two outside observers then measure each lab
as a whole. The script shows the joint statistics of the outer observers
under each treatment of the friends, and which friend measurements the
audit flags as unsafe to treat as collapses.

Run with:  python3 demos/fr_walkthrough.py
"""

from wignerlab.frlab import build_fr_scenario, fr_states
from wignerlab.qcore import inner, tensor
from wignerlab.scenario import Policy, audit, evaluate

ORDER = [("ok", "ok"), ("ok", "fail"), ("fail", "ok"), ("fail", "fail")]


def show_joint(title, result):
    d = result.external_distribution()
    print(f"  {title}")
    for k in ORDER:
        print(f"    P(Wbar={k[0]}, W={k[1]}) = {d.get(k):.6f}")


def main():
    s = build_fr_scenario()
    print("Steps")
    for line in evaluate(s).annotations:
        print("  " + line)

    st = fr_states()
    print("\nState after both friends have measured")
    print(f"  <Psi, heads (x) up>       = {abs(inner(st.Psi, tensor(st.phi_h, st.phi_u))):.2e}")
    print(f"  <Psi, obar (x) down>      = {abs(inner(st.Psi, tensor(st.phi_obar, st.phi_d))):.2e}")

    print("\nOuter observers' joint statistics")
    show_joint("friends evolve unitarily", evaluate(s, Policy.UNITARY_AGENTS))
    show_joint("every friend's record collapses", evaluate(s, Policy.COLLAPSE_ON_RECORD))
    show_joint("only F-bar's record collapses", evaluate(s, Policy.COLLAPSE_ON_RECORD, viewpoint=["fbar"]))

    print("\nCollapse-safety audit")
    rep = audit(s)
    for a, b, gap in rep.unsafe_pairs:
        print(f"  collapsing {a} changes the statistics of {b} by {gap:.6f}")
    print(f"  all safe: {rep.all_safe}")


if __name__ == "__main__":
    main()
