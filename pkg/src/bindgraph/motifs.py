"""Closed-form 3-node motif probabilities and expected subgraph counts.

For a node triple with pairs ``e12, e13, e23`` the joint law of the three
edge indicators is computed exactly for each realization scheme. Labeled
edge subsets are bitmasks: bit 0 is ``e12``, bit 1 ``e13``, bit 2 ``e23``.

Every scheme is expressed through ``q(T)``, the probability that no pair of
the subset ``T`` is an edge; the law of the exact edge set then follows by
inclusion-exclusion. The formulas are written against a tiny array
namespace so the same code runs on numpy arrays and on torch tensors (the
fitting module differentiates through them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .models import EdgeProbModel, KRModel
from .realization import BindingParams, parallel_round_probs

__all__ = [
    "EDGE_LABELS",
    "TripleSpec",
    "MotifDistribution3",
    "ExpectedCounts",
    "motif3",
    "motif3_eigm",
    "motif3_maximal",
    "motif3_local",
    "motif3_parallel",
    "local_partition_probs",
    "pairwise_joint",
    "triangle_wedge_probs",
    "TripleAggregate",
    "aggregate",
    "expected_counts",
    "analytic_overlap",
]

EDGE_LABELS = ("e12", "e13", "e23")
_FULL = 7
# pair bitmasks at each center node: node 1 -> (e12, e13), node 2 -> (e12, e23), node 3 -> (e13, e23)
_CENTERS = (3, 5, 6)


def _ns(x):
    if type(x).__module__.startswith("torch"):
        import torch

        return torch
    return np


def _max(xp, *xs):
    out = xs[0]
    for x in xs[1:]:
        out = xp.maximum(out, x)
    return out


def _bits(mask):
    return [i for i in range(3) if mask >> i & 1]


def _one_minus_pow(xp, c, R):
    """``1 - (1 - c)**R`` without cancellation for small ``c``."""
    small = c < 0.5
    cs = xp.where(small, c, 0.0 * c)
    return xp.where(small, -xp.expm1(R * xp.log1p(-cs)), 1.0 - (1.0 - c) ** R)


def _safe(xp, x):
    return xp.where(x > 0, x, 1.0 + 0.0 * x)


@dataclass(frozen=True)
class TripleSpec:
    """Marginals of the three pairs and node-sampling probabilities of a triple."""

    p12: float
    p13: float
    p23: float
    g1: float = 0.0
    g2: float = 0.0
    g3: float = 0.0
    R: int = 1
    scheme: str = "eigm"
    residual: str = "shared"

    def __post_init__(self):
        for name in ("p12", "p13", "p23", "g1", "g2", "g3"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def p(self):
        return (self.p12, self.p13, self.p23)

    @property
    def g(self):
        return (self.g1, self.g2, self.g3)


@dataclass(frozen=True)
class MotifDistribution3:
    """Probabilities of the 8 labeled edge subsets of a triple, indexed by bitmask."""

    prob: np.ndarray

    def __getitem__(self, edges) -> float:
        if isinstance(edges, (int, np.integer)):
            return float(self.prob[edges])
        mask = 0
        for e in edges:
            mask |= 1 << EDGE_LABELS.index(e)
        return float(self.prob[mask])

    @property
    def triangle(self) -> float:
        return float(self.prob[_FULL])

    def marginal(self, e: str) -> float:
        bit = 1 << EDGE_LABELS.index(e)
        return float(sum(self.prob[m] for m in range(8) if m & bit))

    def joint(self, e: str, f: str) -> float:
        mask = (1 << EDGE_LABELS.index(e)) | (1 << EDGE_LABELS.index(f))
        return float(sum(self.prob[m] for m in range(8) if m & mask == mask))

    def as_dict(self) -> dict:
        out = {}
        for m in range(8):
            name = "{" + ",".join(EDGE_LABELS[i] for i in _bits(m)) + "}"
            out[name] = float(self.prob[m])
        return out


# -- q(T) for each scheme -----------------------------------------------------

def _q_eigm(p):
    q = [None] * 8
    for mask in range(1, 8):
        out = 1.0
        for i in _bits(mask):
            out = out * (1.0 - p[i])
        q[mask] = out
    return q


def _q_maximal(p):
    xp = _ns(p[0])
    return [None] + [1.0 - _max(xp, *[p[i] for i in _bits(m)]) for m in range(1, 8)]


def local_partition_probs(g1, g2, g3, R: int):
    """Distribution of how local binding groups the three pairs of a triple.

    Returns ``(together, alone, separate)``: all three pairs in one group;
    a length-3 list whose entry ``i`` is the probability that pair ``i`` sits
    alone while the other two share a group; and all pairs in distinct groups.
    Per round, all three nodes sampled (prob ``a``) merges every ungrouped
    pair into one group, exactly nodes ``i, j`` sampled (prob ``b_ij``)
    groups ``e_ij`` if still ungrouped.
    """
    xp = _ns(g1)
    a = g1 * g2 * g3
    b = [g1 * g2 * (1.0 - g3), g1 * g3 * (1.0 - g2), g2 * g3 * (1.0 - g1)]
    c = a + b[0] + b[1] + b[2]
    hit_c = _one_minus_pow(xp, c, R)
    together = a / _safe(xp, c) * hit_c
    alone = []
    for i in range(3):
        d = c - b[i]
        hit_d = _one_minus_pow(xp, d, R)
        alone.append(a / _safe(xp, d) * (b[i] / _safe(xp, c) * hit_c - (hit_c - hit_d)))
    separate = 1.0 - together - alone[0] - alone[1] - alone[2]
    return together, alone, separate


def _q_local(p, g, R):
    xp = _ns(p[0])
    together, alone, separate = local_partition_probs(g[0], g[1], g[2], R)
    q = [None] * 8
    for mask in range(1, 8):
        idx = _bits(mask)
        t = together * (1.0 - _max(xp, *[p[i] for i in idx]))
        s = 1.0
        for i in idx:
            s = s * (1.0 - p[i])
        t = t + separate * s
        for i in range(3):
            rest = [j for j in idx if j != i]
            f = (1.0 - p[i]) if i in idx else 1.0
            if rest:
                f = f * (1.0 - _max(xp, *[p[j] for j in rest]))
            t = t + alone[i] * f
        q[mask] = t
    return q


def _q_parallel(p, g, R, residual):
    xp = _ns(p[0])
    a = g[0] * g[1] * g[2]
    gg = [g[0] * g[1], g[0] * g[2], g[1] * g[2]]
    b = [gg[0] * (1.0 - g[2]), gg[1] * (1.0 - g[1]), gg[2] * (1.0 - g[0])]
    rp = [parallel_round_probs(p[i], gg[i], R) for i in range(3)]
    r = [x[0] for x in rp]
    prem = [x[1] for x in rp]
    q = [None] * 8
    for mask in range(1, 8):
        idx = _bits(mask)
        no_add = 1.0 - a * _max(xp, *[r[i] for i in idx])
        for i in idx:
            no_add = no_add - b[i] * r[i]
        if residual == "shared":
            resid = 1.0 - _max(xp, *[prem[i] for i in idx])
        elif residual == "independent":
            resid = 1.0
            for i in idx:
                resid = resid * (1.0 - prem[i])
        else:
            raise ValueError(f"unknown residual coupling {residual!r}")
        q[mask] = no_add ** R * resid
    return q


def _q(scheme, p, g, R, residual):
    if scheme == "eigm":
        return _q_eigm(p)
    if scheme == "maximal":
        return _q_maximal(p)
    if scheme == "local":
        return _q_local(p, g, R)
    if scheme == "parallel":
        if R < 1:
            raise ValueError("parallel binding needs R >= 1")
        return _q_parallel(p, g, R, residual)
    raise ValueError(f"unknown scheme {scheme!r}")


def _law_from_q(q):
    """Exact-subset probabilities by inclusion-exclusion over ``q``."""
    law = []
    for a in range(8):
        comp = _FULL ^ a
        total = 0.0
        for bmask in range(8):
            if bmask & ~a:
                continue
            sign = -1.0 if bin(bmask).count("1") % 2 else 1.0
            m = comp | bmask
            total = total + sign * (1.0 if m == 0 else q[m])
        law.append(total)
    return law


def _as_arrays(t: TripleSpec):
    return [np.float64(x) for x in t.p], [np.float64(x) for x in t.g]


def _dist(law) -> MotifDistribution3:
    # inclusion-exclusion can leave rounding residue just outside [0, 1]
    return MotifDistribution3(np.clip(np.array([float(x) for x in law]), 0.0, 1.0))


def motif3_eigm(t: TripleSpec) -> MotifDistribution3:
    p, _ = _as_arrays(t)
    law = [1.0] * 8
    for m in range(8):
        for i in range(3):
            law[m] *= p[i] if m >> i & 1 else 1.0 - p[i]
    return _dist(law)


def motif3_maximal(t: TripleSpec) -> MotifDistribution3:
    """One shared draw for all pairs: the present set is ``{e : p_e >= s}``."""
    p = list(t.p)
    order = sorted(range(3), key=lambda i: -p[i])
    law = np.zeros(8)
    mask = 0
    prev = 1.0
    law[0] = 1.0 - p[order[0]]
    for rank, i in enumerate(order):
        mask |= 1 << i
        nxt = p[order[rank + 1]] if rank < 2 else 0.0
        law[mask] += p[i] - nxt
        prev = nxt
    return MotifDistribution3(law)


def motif3_local(t: TripleSpec) -> MotifDistribution3:
    p, g = _as_arrays(t)
    return _dist(_law_from_q(_q_local(p, g, t.R)))


def motif3_parallel(t: TripleSpec, residual: str | None = None) -> MotifDistribution3:
    if residual is not None and residual != t.residual:
        raise ValueError(f"residual mode {residual!r} does not match triple spec ({t.residual!r})")
    p, g = _as_arrays(t)
    return _dist(_law_from_q(_q(("parallel"), p, g, t.R, t.residual)))


def motif3(t: TripleSpec) -> MotifDistribution3:
    """Dispatch on ``t.scheme`` (``eigm``, ``maximal``, ``local``, ``parallel``)."""
    if t.scheme == "eigm":
        return motif3_eigm(t)
    if t.scheme == "maximal":
        return motif3_maximal(t)
    if t.scheme == "local":
        return motif3_local(t)
    if t.scheme == "parallel":
        return motif3_parallel(t)
    raise ValueError(f"unknown scheme {t.scheme!r}")


def pairwise_joint(t: TripleSpec, e: str, f: str) -> float:
    """Probability that both pairs ``e`` and ``f`` of the triple are edges."""
    if e == f:
        raise ValueError("need two distinct pairs")
    p, g = _as_arrays(t)
    i, j = EDGE_LABELS.index(e), EDGE_LABELS.index(f)
    q = _q(t.scheme, p, g, t.R, t.residual)
    return float(1.0 - q[1 << i] - q[1 << j] + q[(1 << i) | (1 << j)])


def triangle_wedge_probs(p12, p13, p23, g1, g2, g3, scheme: str, R: int = 1, residual: str = "shared"):
    """Vectorized triangle probability and expected wedge count per triple.

    The wedge value sums, over the three center nodes, the probability that
    both pairs at that center are edges. Inputs broadcast; numpy or torch.
    """
    p, g = [p12, p13, p23], [g1, g2, g3]
    q = _q(scheme, p, g, R, residual)
    tri = 1.0 - q[1] - q[2] - q[4] + q[3] + q[5] + q[6] - q[7]
    wedge = 0.0
    for m in _CENTERS:
        i, j = _bits(m)
        wedge = wedge + (1.0 - q[1 << i] - q[1 << j] + q[m])
    return tri, wedge


# -- class aggregation --------------------------------------------------------

@dataclass
class TripleAggregate:
    """Node triples and pairs grouped into equivalence classes.

    ``pair_values`` lists the distinct pair probabilities. Each aggregated
    triple refers to pair values for ``e12, e13, e23`` (``tri_p``) and to node
    classes for its three nodes (``tri_g``), and stands for ``tri_w`` unordered
    node triples. ``pair_p``/``pair_w`` do the same for node pairs.
    ``class_pairs`` (class models only) gives the class pair behind each
    pair value.
    """

    pair_values: np.ndarray
    tri_p: np.ndarray
    tri_g: np.ndarray
    tri_w: np.ndarray
    pair_p: np.ndarray
    pair_w: np.ndarray
    num_g: int
    class_pairs: np.ndarray | None = None


def _class_aggregate(model: EdgeProbModel) -> TripleAggregate:
    table = model.class_table()
    sizes = model.classes.class_size.astype(float)
    k = len(sizes)
    iu, ju = np.triu_indices(k)
    pidx = np.zeros((k, k), dtype=np.int64)
    pidx[iu, ju] = np.arange(len(iu))
    pidx[ju, iu] = pidx[iu, ju]
    pair_w = np.where(iu == ju, sizes[iu] * (sizes[iu] - 1) / 2, sizes[iu] * sizes[ju])

    tri = np.array(list(combinations_with_replacement(range(k), 3)), dtype=np.int64).reshape(-1, 3)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    na, nb, nc = sizes[a], sizes[b], sizes[c]
    w = np.where(
        (a == b) & (b == c), na * (na - 1) * (na - 2) / 6,
        np.where(a == b, na * (na - 1) / 2 * nc,
                 np.where(b == c, nb * (nb - 1) / 2 * na, na * nb * nc)),
    )
    keep = w > 0
    tri, w = tri[keep], w[keep]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    tri_p = np.column_stack((pidx[a, b], pidx[a, c], pidx[b, c]))
    return TripleAggregate(
        pair_values=table[iu, ju].astype(float),
        tri_p=tri_p,
        tri_g=tri,
        tri_w=w,
        pair_p=np.arange(len(iu)),
        pair_w=pair_w,
        num_g=k,
        class_pairs=np.column_stack((iu, ju)),
    )


def _compositions(k: int, parts: int) -> np.ndarray:
    """All vectors of ``parts`` nonnegative integers summing to ``k``."""
    from itertools import combinations

    rows = []
    for bars in combinations(range(k + parts - 1), parts - 1):
        prev, row = -1, []
        for bpos in bars:
            row.append(bpos - prev - 1)
            prev = bpos
        row.append(k + parts - 2 - prev)
        rows.append(row)
    return np.array(rows, dtype=np.int64)


def _multinomial(k: int, comp: np.ndarray) -> np.ndarray:
    lf = [math.lgamma(i + 1) for i in range(k + 1)]
    lf = np.array(lf)
    return np.exp(lf[k] - lf[comp].sum(axis=1))


def _kr_aggregate(model: KRModel) -> TripleAggregate:
    k = model.k
    # pair value index by (n00, nmix); n11 = k - n00 - nmix
    grid = [(x, y) for x in range(k + 1) for y in range(k + 1 - x)]
    gidx = {xy: i for i, xy in enumerate(grid)}
    gx = np.array(grid)
    values = model.pattern_prob(gx[:, 0], gx[:, 1], k - gx[:, 0] - gx[:, 1]).astype(float)
    lookup = np.full((k + 1, k + 1), -1, dtype=np.int64)
    lookup[gx[:, 0], gx[:, 1]] = np.arange(len(grid))

    # ordered triples (u, v, w); pattern t has bits u = t>>2, v = t>>1, w = t
    comp = _compositions(k, 8)
    bit = np.array([[(t >> 2) & 1, (t >> 1) & 1, t & 1] for t in range(8)])

    def pair_counts(x, y):
        same0 = (bit[:, x] == 0) & (bit[:, y] == 0)
        mix = bit[:, x] != bit[:, y]
        return comp[:, same0].sum(1), comp[:, mix].sum(1)

    n00_uv, mix_uv = pair_counts(0, 1)
    n00_uw, mix_uw = pair_counts(0, 2)
    n00_vw, mix_vw = pair_counts(1, 2)
    distinct = (mix_uv > 0) & (mix_uw > 0) & (mix_vw > 0)
    comp_d = comp[distinct]
    w = _multinomial(k, comp_d) / 6.0
    tri_p = np.column_stack((
        lookup[n00_uv[distinct], mix_uv[distinct]],
        lookup[n00_uw[distinct], mix_uw[distinct]],
        lookup[n00_vw[distinct], mix_vw[distinct]],
    ))
    tri_g = np.column_stack([comp_d[:, bit[:, j] == 1].sum(1) for j in range(3)])

    pcomp = _compositions(k, 4)  # patterns 00, 01, 10, 11 of (u, v)
    pd = (pcomp[:, 1] + pcomp[:, 2]) > 0
    pcomp = pcomp[pd]
    pair_w = _multinomial(k, pcomp) / 2.0
    pair_p = lookup[pcomp[:, 0], pcomp[:, 1] + pcomp[:, 2]]
    return TripleAggregate(values, tri_p, tri_g, w, pair_p, pair_w, k + 1)


def aggregate(model: EdgeProbModel) -> TripleAggregate:
    """Equivalence-class view of the model's node triples and pairs.

    ER/CL/SB enumerate unordered class triples; Kronecker enumerates the
    compositions of the ``k`` bit positions over the 8 joint bit patterns of
    an ordered node triple, dropping compositions that force equal nodes.
    """
    if isinstance(model, KRModel):
        return _kr_aggregate(model)
    return _class_aggregate(model)


@dataclass(frozen=True)
class ExpectedCounts:
    triangles: float
    wedges: float
    edges: float


def evaluate_aggregate(agg: TripleAggregate, g_class, scheme: str, R: int = 1, residual: str = "shared",
                       pair_values=None):
    """Expected (triangles, wedges, edges) from an aggregate; numpy or torch."""
    pv = agg.pair_values if pair_values is None else pair_values
    xp = _ns(pv)
    if xp is np:
        g_class = np.asarray(g_class, dtype=float)
        tri_p, tri_g, tri_w, pair_p, pair_w = agg.tri_p, agg.tri_g, agg.tri_w, agg.pair_p, agg.pair_w
    else:
        tri_p, tri_g, pair_p = (xp.as_tensor(x) for x in (agg.tri_p, agg.tri_g, agg.pair_p))
        tri_w = xp.as_tensor(agg.tri_w, dtype=pv.dtype)
        pair_w = xp.as_tensor(agg.pair_w, dtype=pv.dtype)
    p = [pv[tri_p[:, i]] for i in range(3)]
    g = [g_class[tri_g[:, i]] for i in range(3)]
    tri, wedge = triangle_wedge_probs(*p, *g, scheme=scheme, R=R, residual=residual)
    return (tri * tri_w).sum(), (wedge * tri_w).sum(), (pv[pair_p] * pair_w).sum()


def expected_counts(model: EdgeProbModel, params: BindingParams, agg: TripleAggregate | None = None) -> ExpectedCounts:
    """Expected triangle, wedge and edge counts of graphs from ``model`` under ``params``."""
    agg = aggregate(model) if agg is None else agg
    g = params.class_g(model)
    R = params.R if params.scheme != "eigm" else 1
    t, w, e = evaluate_aggregate(agg, g, params.scheme, R, params.residual)
    return ExpectedCounts(float(t), float(w), float(e))


def analytic_overlap(model: EdgeProbModel, agg: TripleAggregate | None = None) -> float:
    """``sum p^2 / sum p`` over node pairs (the same for every realization)."""
    agg = aggregate(model) if agg is None else agg
    p = agg.pair_values[agg.pair_p]
    den = float((agg.pair_w * p).sum())
    if den <= 0:
        raise ValueError("overlap undefined: all edge probabilities are zero")
    return float((agg.pair_w * p * p).sum()) / den
