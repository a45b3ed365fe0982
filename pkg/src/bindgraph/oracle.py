"""Independent checks for the closed forms: Monte Carlo on the real samplers
and brute-force summation over every node triple."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .models import EdgeProbModel, SBModel
from .motifs import ExpectedCounts, TripleSpec, motif3, triangle_wedge_probs
from .realization import BindingParams, edge_indicators

__all__ = [
    "OracleEstimate",
    "triple_model",
    "mc_motif3",
    "mc_marginals",
    "naive_expected_counts",
    "z_scores",
    "sweep_specs",
    "oracle_sweep",
]


@dataclass
class OracleEstimate:
    """Monte Carlo frequencies with binomial standard errors."""

    estimate: np.ndarray
    stderr: np.ndarray
    trials: int
    seed: int


def _estimate(counts: np.ndarray, trials: int, seed: int) -> OracleEstimate:
    est = counts / trials
    return OracleEstimate(est, np.sqrt(est * (1 - est) / trials), trials, seed)


def z_scores(est: OracleEstimate, expected: np.ndarray) -> np.ndarray:
    """Deviation in standard errors; the error is floored at the expected value's
    own binomial spread so degenerate estimates (0 or 1) stay finite."""
    expected = np.clip(np.asarray(expected, dtype=float), 0.0, 1.0)
    se_exp = np.sqrt(expected * (1 - expected) / est.trials)
    se = np.maximum(np.maximum(est.stderr, se_exp), 1e-12)
    return np.abs(est.estimate - expected) / se


def triple_model(t: TripleSpec) -> tuple[EdgeProbModel, BindingParams]:
    """A 3-node model (one block per node) and binding parameters for ``t``.

    ``"maximal"`` is realized as local binding with ``g = 1`` and one round.
    """
    pb = np.array([[0.0, t.p12, t.p13], [t.p12, 0.0, t.p23], [t.p13, t.p23, 0.0]])
    model = SBModel(np.arange(3), pb)
    if t.scheme == "maximal":
        return model, BindingParams("local", np.ones(3), R=1)
    return model, BindingParams(t.scheme, np.array(t.g, dtype=float), R=t.R, residual=t.residual)


def mc_motif3(t: TripleSpec, trials: int = 100_000, seed: int = 0) -> OracleEstimate:
    """Frequencies of the 8 labeled edge subsets over ``trials`` sampled triples."""
    if trials < 10_000:
        raise ValueError("use at least 10^4 trials")
    model, params = triple_model(t)
    x = edge_indicators(model, params, trials, seed=_oracle_seed(seed))
    # pair columns (0,1), (0,2), (1,2) are e12, e13, e23 -> mask bits 0, 1, 2
    masks = x[:, 0].astype(np.int64) + 2 * x[:, 1] + 4 * x[:, 2]
    return _estimate(np.bincount(masks, minlength=8).astype(float), trials, seed)


def _oracle_seed(seed: int) -> np.random.SeedSequence:
    # kept apart from the default streams used by code under test
    return np.random.SeedSequence([0x0AC1E, int(seed)])


def mc_marginals(model: EdgeProbModel, params: BindingParams, samples: int, seed: int = 0) -> OracleEstimate:
    """Per-pair edge frequencies (row-major upper triangle) on a model with ``n <= 8``."""
    if model.n > 8:
        raise ValueError("mc_marginals is meant for models with at most 8 nodes")
    x = edge_indicators(model, params, samples, seed=_oracle_seed(seed))
    return _estimate(x.sum(axis=0).astype(float), samples, seed)


def naive_expected_counts(model: EdgeProbModel, params: BindingParams, n_cap: int = 60) -> ExpectedCounts:
    """Expected counts by summing the triple closed forms over all node triples."""
    n = model.n
    if n > n_cap:
        raise ValueError(f"n={n} exceeds the naive oracle cap of {n_cap}")
    P = model.prob_matrix()
    g = params.node_g(model)
    R = params.R if params.scheme != "eigm" else 1
    tri = np.array(list(combinations(range(n), 3)), dtype=np.int64).reshape(-1, 3)
    i, j, k = tri[:, 0], tri[:, 1], tri[:, 2]
    t, w = triangle_wedge_probs(P[i, j], P[i, k], P[j, k], g[i], g[j], g[k],
                                scheme=params.scheme, R=R, residual=params.residual)
    iu, ju = np.triu_indices(n, 1)
    return ExpectedCounts(float(np.sum(t)), float(np.sum(w)), float(P[iu, ju].sum()))


_GRID = np.round(np.arange(0.1, 1.0, 0.1), 1)
SWEEP_SCHEMES = ("eigm", "maximal", "local", "parallel-shared", "parallel-independent")


def sweep_specs(per_scheme: int, seed: int = 0, schemes=SWEEP_SCHEMES) -> list[TripleSpec]:
    """Random triples with ``p, g`` on the 0.1 grid and ``R`` in {1, 2, 5}."""
    rng = np.random.default_rng([0x5EED, int(seed)])
    specs = []
    for name in schemes:
        scheme, _, residual = name.partition("-")
        for _ in range(per_scheme):
            p = rng.choice(_GRID, 3)
            g = rng.choice(_GRID, 3)
            specs.append(TripleSpec(*p, *g, R=int(rng.choice([1, 2, 5])), scheme=scheme,
                                    residual=residual or "shared"))
    return specs


def oracle_sweep(specs, trials: int = 100_000, seed: int = 0, bound: float = 4.0) -> list[dict]:
    """Compare closed-form motif laws with Monte Carlo; one row per (spec, outcome)."""
    rows = []
    for i, t in enumerate(specs):
        law = motif3(t).prob
        est = mc_motif3(t, trials=trials, seed=seed + i)
        z = z_scores(est, law)
        for m in range(8):
            rows.append({
                "config": i, "scheme": t.scheme, "residual": t.residual, "R": t.R,
                "p12": t.p12, "p13": t.p13, "p23": t.p23, "g1": t.g1, "g2": t.g2, "g3": t.g3,
                "outcome": m, "closed_form": float(law[m]), "monte_carlo": float(est.estimate[m]),
                "z": float(z[m]), "pass": bool(z[m] <= bound),
            })
    return rows
