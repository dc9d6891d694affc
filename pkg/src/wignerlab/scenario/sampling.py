"""
Seeded sampling of record tuples.

The branch tree is walked once. At every splitting node the ``count``
repetitions that reached it are shared among the children by a single
multinomial draw, so the counts have exactly the multinomial law of ``n``
independent runs. Each node has its own stream::

    Generator(PCG64(SeedSequence(seed, spawn_key=path)))

where ``path`` lists the (step index, outcome index) pairs of the splits
leading to the node followed by the node's own step index. Outcome indices
follow the measurement's declared order, zero-probability outcomes included.
Results are reproducible bit for bit and independent of traversal order.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from ..errors import ScenarioError
from .engine import PRUNE_WEIGHT, UNRESOLVED, Policy, _resolve, advance, collapse_set, compile_scenario, initial_state
from .model import Scenario


def node_rng(seed: int, path: tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=path)))


def sample(
    s: Scenario,
    policy: Policy = Policy.UNITARY_AGENTS,
    n: int = 1,
    seed: int = 0,
    viewpoint=None,
) -> Counter:
    """Counts of full record tuples (scenario record order) over ``n`` runs."""
    if n < 1:
        raise ScenarioError("n must be at least 1")
    if not 0 <= seed < 2**64:
        raise ScenarioError("seed must be a 64-bit unsigned integer")
    policy = Policy(policy)
    viewpoint = frozenset(viewpoint) if viewpoint is not None else None
    collapsed = collapse_set(s, policy, viewpoint)
    ops = compile_scenario(s)
    names = s.records
    counts: Counter = Counter()

    # explicit stack: (op index, count, state, records, path)
    stack = [(0, n, initial_state(s), {}, ())]
    while stack:
        i, count, psi, recs, path = stack.pop()
        if i == len(ops):
            counts[tuple(recs.get(r, UNRESOLVED) for r in names)] += count
            continue
        op = ops[i]
        splits = op.kind == "external" or (op.kind == "agent" and i in collapsed)
        children = advance(s, op, psi, recs, i in collapsed)
        if not splits:
            p, child, value = children[0]
            nrecs = dict(recs)
            if value is not None:
                nrecs[op.step.record] = value
            stack.append((i + 1, count, child, nrecs, path))
            continue
        labels = [label for label, _ in op.projectors]
        probs = np.zeros(len(labels))
        by_label = {}
        for p, child, value in children:
            if p >= PRUNE_WEIGHT:
                j = labels.index(value)
                probs[j] = p
                by_label[j] = (child, value)
        probs /= probs.sum()
        draws = node_rng(seed, path + (i,)).multinomial(count, probs)
        for j in reversed(range(len(labels))):
            if draws[j] == 0:
                continue
            child, value = by_label[j]
            nrecs = dict(recs)
            nrecs[op.step.record] = value
            if op.kind == "external":
                _resolve(s, nrecs, {}, child, i)
            stack.append((i + 1, int(draws[j]), child, nrecs, path + (i, j)))
    return counts
