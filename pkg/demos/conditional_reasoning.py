"""Which conditional inferences about friends' records are legitimate.

A conditional probability that mentions a friend's record is only offered
when treating that friend's measurement as a collapse cannot change the
events being predicted. The script asks the three inference questions of
the four-agent scenario and shows how reversing the order of the outer
measurements changes the answer to the last one.

Run with:  python3 demos/conditional_reasoning.py
"""

from wignerlab.frlab import build_fr_scenario, statement_reports
from wignerlab.scenario import conditional_probability, evaluate


def ask(title, result, event, given):
    q = conditional_probability(result, event, given)
    value = "n/a" if q.value is None else f"{q.value:.6f}"
    print(f"{title}\n  valid {q.valid}  value {value}\n  {q.reason}")


def main():
    ask("P(W=fail | Fbar=tails)", evaluate(build_fr_scenario()), {"W": "fail"}, {"Fbar": "tails"})
    ask(
        "P(F=down | Fbar=heads), friends' records read out directly",
        evaluate(build_fr_scenario(diagnostic="b")),
        {"F": "down"},
        {"Fbar": "heads"},
    )
    ask(
        "P(Wbar=ok | F=down), F's lab read before W measures",
        evaluate(build_fr_scenario(diagnostic="c")),
        {"Wbar": "ok"},
        {"F": "down"},
    )
    ask(
        "same query with W measuring before W-bar",
        evaluate(build_fr_scenario(order="reversed", diagnostic="c")),
        {"Wbar": "ok"},
        {"F": "down"},
    )

    print("\nSummary")
    for r in statement_reports():
        print(f"  {r.statement}: {r.verdict}  {r.numbers}")


if __name__ == "__main__":
    main()
