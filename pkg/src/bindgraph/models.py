"""Edge-probability models: Erdős–Rényi, Chung–Lu, stochastic block, Kronecker.

Every model exposes the marginal probability ``p(u, v)`` of each node pair and
a partition of the nodes into equivalence classes. Nodes in one class share a
node-sampling probability during binding; for ER/CL/SB they are also
interchangeable in ``p``, so ``p`` is a ``K x K`` class table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from os import PathLike
from typing import ClassVar

import numpy as np

from .graph import Graph

__all__ = [
    "ClassStructure",
    "EdgeProbModel",
    "ERModel",
    "CLModel",
    "SBModel",
    "KRModel",
    "UnsupportedQuery",
    "fit_er",
    "fit_cl",
    "fit_sb",
    "load_kr",
    "kr_power_for",
    "read_partition",
    "degree_bucket_partition",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]


class UnsupportedQuery(TypeError):
    """Raised for class-level probability queries on the Kronecker model."""


@dataclass(frozen=True)
class ClassStructure:
    class_of: np.ndarray
    num_classes: int

    @property
    def class_size(self) -> np.ndarray:
        return np.bincount(self.class_of, minlength=self.num_classes)

    def members(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes sorted by class and the CSR-style class offsets."""
        order = np.argsort(self.class_of, kind="stable").astype(np.int64)
        offsets = np.zeros(self.num_classes + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(self.class_size)
        return order, offsets


class EdgeProbModel:
    """Common interface of the four models."""

    kind: ClassVar[str]
    n: int

    @property
    def classes(self) -> ClassStructure:
        raise NotImplementedError

    def class_table(self) -> np.ndarray:
        """Symmetric ``K x K`` table with ``p(u, v) = T[class(u), class(v)]``."""
        raise NotImplementedError

    def class_pair_prob(self, a: int, b: int) -> float:
        t = self.class_table()
        return float(t[a, b])

    def prob_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        c = self.classes.class_of
        return self.class_table()[np.ix_(c[rows], c[cols])]

    def prob(self, u: int, v: int) -> float:
        if u == v:
            raise ValueError("p(u, u) is undefined")
        return float(self.prob_block(np.array([u]), np.array([v]))[0, 0])

    def prob_matrix(self) -> np.ndarray:
        """Dense ``n x n`` probability matrix with a zero diagonal."""
        idx = np.arange(self.n)
        m = self.prob_block(idx, idx).astype(float)
        np.fill_diagonal(m, 0.0)
        return m


@dataclass(frozen=True)
class ERModel(EdgeProbModel):
    n0: int
    p0: float
    kind: ClassVar[str] = "er"

    def __post_init__(self):
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError("p0 must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.n0

    @property
    def classes(self) -> ClassStructure:
        return ClassStructure(np.zeros(self.n0, dtype=np.int64), 1)

    def class_table(self) -> np.ndarray:
        return np.array([[self.p0]])


@dataclass(frozen=True, eq=False)
class CLModel(EdgeProbModel):
    """Chung–Lu with expected degrees ``degrees``; classes are distinct degrees."""

    degrees: np.ndarray
    kind: ClassVar[str] = "cl"
    _values: np.ndarray = field(init=False, repr=False)
    _class_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=float)
        if d.ndim != 1 or np.any(d < 0):
            raise ValueError("degrees must be a nonnegative vector")
        if d.sum() <= 0:
            raise ValueError("Chung-Lu needs a positive degree sum")
        values, inv = np.unique(d, return_inverse=True)
        object.__setattr__(self, "degrees", d)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_class_of", inv.astype(np.int64))

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def degree_values(self) -> np.ndarray:
        """Distinct degree of each class, ascending."""
        return self._values

    @property
    def classes(self) -> ClassStructure:
        return ClassStructure(self._class_of, len(self._values))

    def class_table(self) -> np.ndarray:
        d = self._values
        return np.minimum(np.outer(d, d) / self.degrees.sum(), 1.0)


@dataclass(frozen=True, eq=False)
class SBModel(EdgeProbModel):
    """Stochastic block model; ``block_of`` maps nodes to blocks ``0..c-1``."""

    block_of: np.ndarray
    p_block: np.ndarray
    kind: ClassVar[str] = "sb"

    def __post_init__(self):
        b = np.asarray(self.block_of, dtype=np.int64)
        pb = np.asarray(self.p_block, dtype=float)
        c = pb.shape[0]
        if pb.shape != (c, c) or not np.allclose(pb, pb.T):
            raise ValueError("p_block must be a symmetric square matrix")
        if np.any(pb < 0) or np.any(pb > 1):
            raise ValueError("block probabilities must lie in [0, 1]")
        if b.size and (b.min() < 0 or b.max() >= c):
            raise ValueError("block index out of range")
        object.__setattr__(self, "block_of", b)
        object.__setattr__(self, "p_block", pb)

    @property
    def n(self) -> int:
        return len(self.block_of)

    @property
    def classes(self) -> ClassStructure:
        return ClassStructure(self.block_of, self.p_block.shape[0])

    def class_table(self) -> np.ndarray:
        return self.p_block


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class KRModel(EdgeProbModel):
    """Stochastic Kronecker model on ``2**k`` nodes.

    ``p(u, v) = prod_b theta[u_b, v_b]`` over the ``k`` bits of ``u`` and ``v``.
    Node classes group nodes by the number of one bits; these classes carry
    the node-sampling probabilities but do not determine ``p``.
    """

    theta: np.ndarray
    k: int
    kind: ClassVar[str] = "kr"

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.shape != (2, 2):
            raise ValueError("theta must be 2 x 2")
        if abs(t[0, 1] - t[1, 0]) > 1e-15:
            raise ValueError("theta must be symmetric for undirected graphs")
        if np.any(t < 0) or np.any(t > 1):
            raise ValueError("theta entries must lie in [0, 1]")
        if int(self.k) < 1:
            raise ValueError("k must be a positive integer")
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "k", int(self.k))

    @property
    def n(self) -> int:
        return 1 << self.k

    @property
    def classes(self) -> ClassStructure:
        return ClassStructure(_popcount(np.arange(self.n)), self.k + 1)

    def class_table(self) -> np.ndarray:
        raise UnsupportedQuery(
            "Kronecker probabilities are not a function of popcount classes; "
            "use prob_block or the bit-pattern counts"
        )

    def pattern_prob(self, n00, n01, n11):
        """Probability of a pair with ``n00`` (0,0) bits, ``n01`` mixed bits and ``n11`` (1,1) bits."""
        t = self.theta
        return t[0, 0] ** np.asarray(n00) * t[0, 1] ** np.asarray(n01) * t[1, 1] ** np.asarray(n11)

    def prob_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        u = np.asarray(rows, dtype=np.int64)[:, None]
        v = np.asarray(cols, dtype=np.int64)[None, :]
        n11 = _popcount(u & v)
        nmix = _popcount(u ^ v)
        n00 = self.k - _popcount(u | v)
        return self.pattern_prob(n00, nmix, n11)


def fit_er(g: Graph) -> ERModel:
    if g.n < 2:
        raise ValueError("ER fitting needs at least two nodes")
    return ERModel(g.n, 2.0 * g.num_edges / (g.n * (g.n - 1)))


def fit_cl(g: Graph) -> CLModel:
    if g.num_edges == 0:
        raise ValueError("Chung-Lu fitting needs at least one edge")
    return CLModel(g.degrees().astype(float))


def fit_sb(g: Graph, partition: np.ndarray) -> SBModel:
    """Block densities of ``g`` under ``partition`` (node -> block label).

    Labels may be arbitrary integers; they are relabelled to ``0..c-1`` in
    ascending order. A singleton block gets within-block probability 0.
    """
    part = np.asarray(partition)
    if len(part) != g.n:
        raise ValueError(f"partition covers {len(part)} nodes, graph has {g.n}")
    labels, block_of = np.unique(part, return_inverse=True)
    c = len(labels)
    sizes = np.bincount(block_of, minlength=c).astype(float)
    bu, bv = block_of[g.edges[:, 0]], block_of[g.edges[:, 1]]
    counts = np.zeros((c, c))
    np.add.at(counts, (bu, bv), 1.0)
    counts = counts + counts.T - np.diag(np.diag(counts))
    denom = np.outer(sizes, sizes)
    np.fill_diagonal(denom, sizes * (sizes - 1) / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        pb = np.where(denom > 0, counts / np.where(denom > 0, denom, 1), 0.0)
    return SBModel(block_of.astype(np.int64), pb)


def load_kr(theta, k: int) -> KRModel:
    return KRModel(np.asarray(theta, dtype=float), k)


def kr_power_for(n: int) -> int:
    """Smallest ``k`` with ``2**k >= n`` (Kronecker graphs are padded up)."""
    return max(1, int(np.ceil(np.log2(max(n, 2)))))


def read_partition(path: str | PathLike, n: int | None = None) -> np.ndarray:
    """Read ``node block`` lines; every node ``0..n-1`` must be listed."""
    mapping: dict[int, int] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s[0] in "#%":
                continue
            tok = s.split()
            try:
                mapping[int(tok[0])] = int(tok[1])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: expected 'node block', got {s!r}") from exc
    if n is None:
        n = max(mapping) + 1 if mapping else 0
    missing = [v for v in range(n) if v not in mapping]
    if missing:
        raise ValueError(f"partition is missing node {missing[0]} ({len(missing)} missing)")
    return np.array([mapping[v] for v in range(n)], dtype=np.int64)


def degree_bucket_partition(g: Graph, blocks: int = 10) -> np.ndarray:
    """Convenience partition: nodes bucketed by degree quantiles.

    Not a community detector; it only gives SB a deterministic block input
    when no partition is available.
    """
    deg = g.degrees()
    order = np.argsort(deg, kind="stable")
    part = np.empty(g.n, dtype=np.int64)
    for b, chunk in enumerate(np.array_split(order, blocks)):
        part[chunk] = b
    return part


def model_to_dict(m: EdgeProbModel) -> dict:
    if isinstance(m, ERModel):
        return {"model": "er", "n0": m.n0, "p0": m.p0}
    if isinstance(m, CLModel):
        return {"model": "cl", "degrees": m.degrees.tolist()}
    if isinstance(m, SBModel):
        return {"model": "sb", "blocks": m.block_of.tolist(), "pB": m.p_block.tolist()}
    if isinstance(m, KRModel):
        return {"model": "kr", "theta": m.theta.tolist(), "k": m.k}
    raise TypeError(f"unknown model {type(m).__name__}")


def model_from_dict(d: dict) -> EdgeProbModel:
    kind = d.get("model")
    if kind == "er":
        return ERModel(int(d["n0"]), float(d["p0"]))
    if kind == "cl":
        return CLModel(np.asarray(d["degrees"], dtype=float))
    if kind == "sb":
        return SBModel(np.asarray(d["blocks"]), np.asarray(d["pB"], dtype=float))
    if kind == "kr":
        return KRModel(np.asarray(d["theta"], dtype=float), int(d["k"]))
    raise ValueError(f"unknown model tag {kind!r}")


def save_model(m: EdgeProbModel, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(m), fh)


def load_model(path: str | PathLike) -> EdgeProbModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
