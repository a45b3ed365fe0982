"""A deterministic clustered reference graph for desk-scale experiments.

The generator is deliberately unrelated to the binding samplers: small tight
groups give low-degree nodes high local clustering, a few large dense
communities concentrate most triangles on well-connected nodes, and a sparse
heavy-tailed background adds hubs and long-range ties.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph

__all__ = ["clustered_social_graph"]


def clustered_social_graph(
    n: int = 2000,
    group_range: tuple[int, int] = (3, 6),
    group_density: float = 0.9,
    core_groups: int = 12,
    core_range: tuple[int, int] = (42, 99),
    core_density: float = 0.55,
    background_edges: int = 2100,
    weight_exponent: float = 2.5,
    seed: int = 7,
) -> tuple[Graph, np.ndarray]:
    """Synthetic social-style graph and the community label of each node.

    Every node belongs to one small tight group (a random partition with
    sizes uniform on ``group_range``, linked with ``group_density``).
    ``core_groups`` large overlapping communities with sizes uniform on
    ``core_range`` are linked with ``core_density``; their members are drawn
    in proportion to heavy-tailed node weights, which also drive a sparse
    Chung-Lu style background of ``background_edges`` draws.

    Returns
    -------
    graph : Graph
    labels : np.ndarray
        The first core community of each node, or ``core_groups`` for nodes
        in none (usable as a block partition).
    """
    rng = np.random.default_rng(seed)
    weights = (1.0 - rng.random(n)) ** (-1.0 / (weight_exponent - 1.0))
    prob = weights / weights.sum()
    keys = []

    def link(members, q):
        members = np.sort(members)
        iu, ju = np.triu_indices(len(members), 1)
        keep = rng.random(len(iu)) < q
        keys.append(members[iu[keep]] * n + members[ju[keep]])

    order = rng.permutation(n)
    pos = 0
    while pos < n:
        s = int(rng.integers(group_range[0], group_range[1] + 1))
        link(order[pos:pos + s], group_density)
        pos += s

    labels = np.full(n, core_groups, dtype=np.int64)
    for c in range(core_groups):
        s = int(rng.integers(core_range[0], core_range[1] + 1))
        members = rng.choice(n, size=s, replace=False, p=prob)
        fresh = members[labels[members] == core_groups]
        labels[fresh] = c
        link(members, core_density)

    u = rng.choice(n, size=background_edges, p=prob)
    v = rng.choice(n, size=background_edges, p=prob)
    a, b = np.minimum(u, v), np.maximum(u, v)
    ok = a != b
    keys.append(a[ok] * n + b[ok])
    return Graph.from_keys(n, np.concatenate(keys)), labels
