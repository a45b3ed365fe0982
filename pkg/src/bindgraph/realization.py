"""Sampling graphs from edge probabilities.

Three realization schemes share one primitive, :func:`bind_group`: a group of
pairs shares a single uniform draw ``s`` and every pair whose probability is
at least ``s`` becomes an edge.

* ``"eigm"``: every pair is its own group (edge-independent).
* ``"local"``: ``R`` sequential rounds; each round samples nodes with
  probabilities ``g`` and binds the not-yet-grouped pairs among them. Pairs
  never grouped are realized independently.
* ``"parallel"``: ``R`` independent, identically distributed rounds with
  per-round probabilities ``r`` plus a residual pass with ``p_rem``; the
  union has marginals ``p``.

Randomness is derived from a master seed with :class:`numpy.random.SeedSequence`
spawn keys ``(tag, index)``, so outputs do not depend on thread scheduling.
"""

from __future__ import annotations

import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from os import PathLike
from typing import Mapping

import numpy as np

from . import _kernels as K
from .graph import Graph
from .models import EdgeProbModel, KRModel

__all__ = [
    "SCHEMES",
    "DEFAULT_ROUNDS",
    "BindingParams",
    "bind_group",
    "parallel_round_probs",
    "derive_seed",
    "sample_eigm",
    "sample_local_binding",
    "sample_parallel_binding",
    "sample",
    "generate_batch",
    "edge_indicators",
]

SCHEMES = ("eigm", "local", "parallel")
DEFAULT_ROUNDS = {"eigm": 0, "local": 1000, "parallel": 32}
# dense grouped-pair bitmap of local binding
MAX_LOCAL_NODES = 1 << 14


@dataclass
class BindingParams:
    """Realization scheme and its parameters.

    ``g`` holds one node-sampling probability per node class of the model
    (a scalar is broadcast to all classes). ``residual`` selects whether the
    residual pass of parallel binding shares one uniform draw across all
    pairs (``"shared"``) or draws per pair (``"independent"``).
    """

    scheme: str = "eigm"
    g: np.ndarray | float = 0.0
    R: int | None = None
    residual: str = "shared"
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.residual not in ("shared", "independent"):
            raise ValueError("residual must be 'shared' or 'independent'")
        if self.R is None:
            self.R = DEFAULT_ROUNDS[self.scheme]
        self.R = int(self.R)
        if self.R < 0:
            raise ValueError("R must be nonnegative")
        if self.scheme == "parallel" and self.R < 1:
            raise ValueError("parallel binding needs R >= 1")
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if np.any(~np.isfinite(g)) or np.any(g < 0) or np.any(g > 1):
            raise ValueError("node-sampling probabilities must lie in [0, 1]")
        self.g = g if g.size > 1 or np.ndim(self.g) else float(g[0])

    def class_g(self, model: EdgeProbModel) -> np.ndarray:
        k = model.classes.num_classes
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if g.size == 1:
            return np.full(k, g[0])
        if g.size != k:
            raise ValueError(f"g has {g.size} entries, model has {k} node classes")
        return g

    def node_g(self, model: EdgeProbModel) -> np.ndarray:
        return self.class_g(model)[model.classes.class_of]

    def to_dict(self) -> dict:
        d = {
            "scheme": self.scheme,
            "R": self.R,
            "g": np.atleast_1d(self.g).tolist(),
            "residual_coupling": self.residual,
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "BindingParams":
        scheme = d.get("scheme", "eigm")
        return cls(
            scheme=scheme,
            g=np.asarray(d.get("g", 0.0), dtype=float),
            R=d.get("R"),
            residual=d.get("residual_coupling", "shared"),
            seed=d.get("seed"),
        )

    def save(self, path: str | PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path: str | PathLike) -> "BindingParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def bind_group(p_hat: Mapping, pairs, s: float) -> set:
    """Pairs of ``pairs`` whose probability under ``p_hat`` is at least ``s``."""
    return {e for e in pairs if p_hat[e] >= s}


def _ns(x):
    if type(x).__module__.startswith("torch"):
        import torch

        return torch
    return np


def parallel_round_probs(p, gg, R: int):
    """Per-round probability ``r`` and residual ``p_rem`` for pair probability
    ``p`` and node-sampling product ``gg = g(u) g(v)``.

    Works elementwise on numpy arrays or torch tensors. ``r`` is 0 where
    ``gg == 0`` (such pairs are never covered by a round); ``p_rem`` is 0
    wherever the rounds alone already reach ``p``.
    """
    xp = _ns(p)
    covered = gg > 0
    gg_safe = xp.where(covered, gg, 1.0)
    p_lt1 = p < 1
    p_safe = xp.where(p_lt1, p, 0.0)
    base = xp.where(p_lt1, -xp.expm1(xp.log1p(-p_safe) / R), 1.0)
    if xp is np:
        # a subnormal gg overflows the ratio; it is clamped to 1 anyway
        with np.errstate(over="ignore"):
            ratio = np.clip(base / gg_safe, None, 1.0)
    else:
        ratio = xp.clamp(base / gg_safe, max=1.0)
    r = xp.where(covered, ratio, 0.0)
    t = (1.0 - gg) ** R
    done = (1.0 - p) >= t
    t_safe = xp.where(done, 1.0, t)
    prem = xp.where(done, 0.0, 1.0 - (1.0 - p) / t_safe)
    return r, prem


def _seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.SeedSequence(int(seed))


def _tag(tag: str) -> int:
    return zlib.crc32(tag.encode())


def derive_seed(seed, tag: str, *index: int) -> np.random.SeedSequence:
    """Child stream of ``seed`` for a purpose tag and optional indices."""
    s = _seq(seed)
    return np.random.SeedSequence(s.entropy, spawn_key=tuple(s.spawn_key) + (_tag(tag),) + tuple(int(i) for i in index))


def _rng(seed, tag: str, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, tag, *index)))


@dataclass
class _Prepared:
    n: int
    kind: int
    cls: np.ndarray
    members: np.ndarray
    offsets: np.ndarray
    ptable: np.ndarray
    theta: np.ndarray
    k: int
    g_class: np.ndarray = field(default_factory=lambda: np.zeros(1))
    g_node: np.ndarray = field(default_factory=lambda: np.zeros(1))
    rtable: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    remtable: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    R: int = 1


def _prepare(model: EdgeProbModel, params: BindingParams | None = None) -> _Prepared:
    cs = model.classes
    members, offsets = cs.members()
    if isinstance(model, KRModel):
        t = model.theta
        prep = _Prepared(model.n, 1, cs.class_of, members, offsets, np.zeros((1, 1)),
                         np.array([t[0, 0], t[0, 1], t[1, 1]]), model.k)
    else:
        prep = _Prepared(model.n, 0, cs.class_of, members, offsets,
                         np.ascontiguousarray(model.class_table(), dtype=float), np.zeros(3), 0)
    if params is not None:
        prep.g_class = np.ascontiguousarray(params.class_g(model))
        prep.g_node = prep.g_class[cs.class_of]
        prep.R = max(int(params.R), 1)
        if params.scheme == "parallel" and prep.kind == 0:
            gg = np.outer(prep.g_class, prep.g_class)
            prep.rtable, prep.remtable = parallel_round_probs(prep.ptable, gg, prep.R)
    return prep


def sample_eigm(model: EdgeProbModel, seed=0) -> Graph:
    """Edge-independent realization."""
    pr = _prepare(model)
    keys = K.independent_pairs(_rng(seed, "eigm"), pr.n, pr.members, pr.offsets, pr.kind, pr.cls,
                               pr.ptable, pr.theta, pr.k, pr.g_node, 1, K.MODE_P)
    return Graph.from_keys(pr.n, keys)


def sample_local_binding(model: EdgeProbModel, params: BindingParams, seed=0, trace: dict | None = None) -> Graph:
    """Local binding with ``params.R`` sequential rounds.

    When ``trace`` is a dict it receives the number of rounds actually run
    (rounds stop early once every pair is grouped) and of pairs visited.
    """
    if params.scheme != "local":
        raise ValueError("params.scheme must be 'local'")
    if model.n > MAX_LOCAL_NODES:
        raise ValueError(f"local binding is limited to {MAX_LOCAL_NODES} nodes")
    pr = _prepare(model, params)
    grouped = np.zeros(pr.n * pr.n, dtype=np.bool_)
    keys, rounds, visits = K.local_binding(_rng(seed, "local"), pr.n, pr.members, pr.offsets, pr.g_class,
                                           int(params.R), pr.kind, pr.cls, pr.ptable, pr.theta, pr.k, grouped)
    if trace is not None:
        trace.update(rounds=int(rounds), pair_visits=int(visits))
    return Graph.from_keys(pr.n, keys)


def sample_parallel_binding(model: EdgeProbModel, params: BindingParams, seed=0, threads: int = 1) -> Graph:
    """Parallel binding; rounds run on up to ``threads`` threads.

    Round ``i`` draws from its own stream, and the output is the set union of
    all rounds and the residual pass, so it is identical for any thread count.
    """
    if params.scheme != "parallel":
        raise ValueError("params.scheme must be 'parallel'")
    pr = _prepare(model, params)

    def one_round(i: int) -> np.ndarray:
        return K.parallel_round(_rng(seed, "round", i), pr.n, pr.members, pr.offsets, pr.g_class, pr.kind,
                                pr.cls, pr.rtable, pr.theta, pr.k, pr.g_node, pr.R)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(one_round, range(pr.R)))
    else:
        parts = [one_round(i) for i in range(pr.R)]
    parts.append(K.parallel_residual(_rng(seed, "residual"), params.residual == "shared", pr.n, pr.members,
                                     pr.offsets, pr.kind, pr.cls, pr.remtable, pr.theta, pr.k, pr.g_node, pr.R))
    return Graph.from_keys(pr.n, np.concatenate(parts))


def sample(model: EdgeProbModel, params: BindingParams, seed=0, threads: int = 1) -> Graph:
    if params.scheme == "eigm":
        return sample_eigm(model, seed)
    if params.scheme == "local":
        return sample_local_binding(model, params, seed)
    return sample_parallel_binding(model, params, seed, threads)


def generate_batch(model: EdgeProbModel, params: BindingParams, count: int, seed=0, threads: int = 1) -> list[Graph]:
    """``count`` graphs, graph ``i`` drawn from the stream ``(seed, "graph", i)``."""
    seeds = [derive_seed(seed, "graph", i) for i in range(count)]
    if threads > 1 and params.scheme != "parallel":
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda s: sample(model, params, s), seeds))
    return [sample(model, params, s, threads) for s in seeds]


def edge_indicators(model: EdgeProbModel, params: BindingParams, count: int, seed=0) -> np.ndarray:
    """Edge-indicator matrix of ``count`` samples on a small model.

    Runs the same compiled samplers back to back from a single stream and
    returns a ``count x C(n, 2)`` uint8 matrix; column order is row-major over
    the strict upper triangle. Meant for Monte Carlo checks on tiny models.
    """
    pr = _prepare(model, params)
    scheme = SCHEMES.index(params.scheme)
    return K.tally_many(_rng(seed, "tally"), int(count), scheme, params.residual == "shared", pr.n, pr.members,
                        pr.offsets, pr.g_class, int(params.R) if scheme == 1 else pr.R, pr.kind, pr.cls,
                        pr.ptable, pr.rtable, pr.remtable, pr.theta, pr.k, pr.g_node)
