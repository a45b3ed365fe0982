"""Fitting node-sampling probabilities (and optionally edge probabilities) so
that expected triangle / wedge counts hit targets.

Parameters are unconstrained logits mapped into (0, 1) by the logistic
function. The objective is built from the class-aggregated closed forms in
:mod:`bindgraph.motifs` and differentiated with torch autograd; the optimizer
is plain gradient descent with a backtracking (Armijo) line search.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .graph import Graph, compute_stats
from .models import EdgeProbModel, ERModel, KRModel, SBModel
from .motifs import ExpectedCounts, aggregate, evaluate_aggregate
from .realization import BindingParams, parallel_round_probs

__all__ = [
    "FitObjective",
    "FitReport",
    "FitError",
    "FitProblem",
    "fit_binding",
    "fit_binding_joint",
    "finite_difference_gradient",
]

log = logging.getLogger(__name__)

_P_EPS = 1e-9
_MAX_MOVE = 1.0


class FitError(RuntimeError):
    """Objective became non-finite; the model is degenerate for fitting."""


@dataclass
class FitObjective:
    """Targets for the expected counts.

    ``kind`` is ``"triangles"`` or ``"triangles_plus_wedges"``. ``edges`` is
    only used by joint fitting to keep the expected edge count in place.
    """

    kind: str
    triangles: float
    wedges: float | None = None
    edges: float | None = None

    def __post_init__(self):
        if self.kind not in ("triangles", "triangles_plus_wedges"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if not self.triangles > 0:
            raise ValueError("triangle target must be positive")
        if self.kind == "triangles_plus_wedges" and not (self.wedges and self.wedges > 0):
            raise ValueError("wedge target must be positive")

    @classmethod
    def from_graph(cls, g: Graph, kind: str = "triangles") -> "FitObjective":
        s = compute_stats(g, distance_sample=1)
        return cls(kind, float(s.triangle_count), float(s.wedge_count), float(s.num_edges))


@dataclass
class FitReport:
    scheme: str
    R: int
    residual: str
    iterations: int
    objective_trace: list[float]
    final_g: np.ndarray
    achieved: ExpectedCounts
    converged: bool
    final_p: np.ndarray | None = None
    class_pairs: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    def binding_params(self, seed: int | None = None) -> BindingParams:
        return BindingParams(self.scheme, self.final_g.copy(), R=self.R, residual=self.residual, seed=seed)

    def fitted_model(self, base: EdgeProbModel) -> EdgeProbModel:
        """``base`` with jointly fitted class-pair probabilities substituted."""
        if self.final_p is None:
            return base
        if isinstance(base, ERModel):
            return ERModel(base.n0, float(self.final_p[0]))
        k = base.classes.num_classes
        table = np.zeros((k, k))
        a, b = self.class_pairs[:, 0], self.class_pairs[:, 1]
        table[a, b] = self.final_p
        table[b, a] = self.final_p
        return SBModel(base.classes.class_of, table)

    def to_dict(self) -> dict:
        d = {
            "scheme": self.scheme,
            "R": self.R,
            "residual_coupling": self.residual,
            "iterations": self.iterations,
            "objective_trace": [float(x) for x in self.objective_trace],
            "final_g": self.final_g.tolist(),
            "achieved": {"triangles": self.achieved.triangles, "wedges": self.achieved.wedges,
                         "edges": self.achieved.edges},
            "converged": self.converged,
            "warnings": list(self.warnings),
        }
        if self.final_p is not None:
            d["final_p"] = self.final_p.tolist()
            d["class_pairs"] = self.class_pairs.tolist()
        return d


def _logit(x):
    x = np.clip(np.asarray(x, dtype=float), 1e-12, 1 - 1e-12)
    return np.log(x) - np.log1p(-x)


class FitProblem:
    """Objective over the concatenated logits ``[g (per class), p (free pair values)]``."""

    def __init__(self, model: EdgeProbModel, scheme: str, R: int, objective: FitObjective,
                 residual: str = "shared", joint: bool = False, edge_penalty: float = 1.0):
        if scheme not in ("local", "parallel"):
            raise ValueError("fitting needs a binding scheme ('local' or 'parallel')")
        if joint and isinstance(model, KRModel):
            raise ValueError("joint fitting is not available for the Kronecker model")
        self.model = model
        self.scheme = scheme
        self.R = int(R)
        self.residual = residual
        self.objective = objective
        self.joint = joint
        self.edge_penalty = float(edge_penalty)
        self.agg = aggregate(model)
        self.num_g = self.agg.num_g
        pv = self.agg.pair_values
        # pairs pinned at exactly 0 or 1 stay fixed in joint mode
        self.free = np.flatnonzero((pv > 0) & (pv < 1)) if joint else np.zeros(0, dtype=np.int64)
        # classes with no positive pair probability: their g has no effect
        self.inert = np.zeros(self.num_g, dtype=bool)
        if self.agg.class_pairs is not None:
            live = np.zeros(self.num_g, dtype=bool)
            cp = self.agg.class_pairs[pv > 0]
            live[cp[:, 0]] = True
            live[cp[:, 1]] = True
            self.inert = ~live
        self._pv = torch.as_tensor(pv, dtype=torch.float64)
        self._free_t = torch.as_tensor(self.free)
        if joint and objective.edges is None:
            self.edge_target = float((self.agg.pair_w * pv[self.agg.pair_p]).sum())
        else:
            self.edge_target = objective.edges

    @property
    def size(self) -> int:
        return self.num_g + len(self.free)

    def initial(self, g0: float = 0.5) -> np.ndarray:
        return np.concatenate([np.full(self.num_g, _logit(g0)), _logit(self.agg.pair_values[self.free])])

    def split(self, theta):
        """(g per class, pair values) for a parameter vector (numpy or torch)."""
        if isinstance(theta, torch.Tensor):
            g = torch.sigmoid(theta[: self.num_g])
            pv = self._pv
            if len(self.free):
                pv = pv.clone()
                pv[self._free_t] = torch.sigmoid(theta[self.num_g:]).clamp(_P_EPS, 1 - _P_EPS)
            return g, pv
        g = 1 / (1 + np.exp(-theta[: self.num_g]))
        pv = self.agg.pair_values.copy()
        if len(self.free):
            pv[self.free] = np.clip(1 / (1 + np.exp(-theta[self.num_g:])), _P_EPS, 1 - _P_EPS)
        return g, pv

    def counts(self, g, pv):
        return evaluate_aggregate(self.agg, g, self.scheme, self.R, self.residual, pair_values=pv)

    def loss_tensor(self, theta: torch.Tensor) -> torch.Tensor:
        g, pv = self.split(theta)
        tri, wedge, edges = self.counts(g, pv)
        obj = self.objective
        loss = (1 - tri / obj.triangles) ** 2
        if obj.kind == "triangles_plus_wedges":
            loss = loss + (1 - wedge / obj.wedges) ** 2
        if self.joint and self.edge_penalty > 0:
            loss = loss + self.edge_penalty * (1 - edges / self.edge_target) ** 2
        return loss

    def value(self, theta: np.ndarray) -> float:
        with torch.no_grad():
            return float(self.loss_tensor(torch.as_tensor(theta, dtype=torch.float64)))

    def value_and_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        t = torch.as_tensor(np.asarray(theta, dtype=float), dtype=torch.float64).requires_grad_(True)
        loss = self.loss_tensor(t)
        loss.backward()
        return float(loss.detach()), t.grad.numpy().copy()

    def gradient(self, theta: np.ndarray, tol: float = 1e-6) -> tuple[np.ndarray, bool]:
        """Gradient in logit space and whether ``theta`` sits near a min/max tie
        (where the value returned is a one-sided subgradient)."""
        return self.value_and_grad(theta)[1], self.near_kink(theta, tol)

    def achieved(self, theta: np.ndarray) -> ExpectedCounts:
        g, pv = self.split(np.asarray(theta, dtype=float))
        t, w, e = self.counts(g, pv)
        return ExpectedCounts(float(t), float(w), float(e))

    def near_kink(self, theta: np.ndarray, tol: float = 1e-6) -> bool:
        """Whether some min/max/clamp inside the objective is within ``tol`` of a tie.

        Competing terms that are the same parameter-level quantity (for
        example two pairs of one class pair) are not ties: they move together.
        """
        g, pv = self.split(np.asarray(theta, dtype=float))
        agg = self.agg
        tp = agg.tri_p
        gi = agg.tri_g
        p = [pv[tp[:, i]] for i in range(3)]
        if self.scheme == "local" or self.joint:
            for i, j in ((0, 1), (0, 2), (1, 2)):
                if self.joint and np.any((tp[:, i] != tp[:, j]) & (np.abs(p[i] - p[j]) < tol)):
                    return True
        if self.scheme != "parallel":
            return False
        nodes = ((0, 1), (0, 2), (1, 2))
        gg = [g[gi[:, a]] * g[gi[:, b]] for a, b in nodes]
        r, prem = zip(*(parallel_round_probs(p[i], gg[i], self.R) for i in range(3)))
        for i in range(3):
            base = -np.expm1(np.log1p(-np.minimum(p[i], 1 - 1e-16)) / self.R)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(gg[i] > 0, base / gg[i], 0.0)
            if np.any(np.abs(ratio - 1) < tol):
                return True
            if np.any(np.abs((1 - p[i]) - (1 - gg[i]) ** self.R) < tol):
                return True
        keys = [np.stack([tp[:, i], gi[:, a], gi[:, b]], 1) for i, (a, b) in enumerate(nodes)]
        for i, j in ((0, 1), (0, 2), (1, 2)):
            same = np.all(np.sort(keys[i][:, 1:], 1) == np.sort(keys[j][:, 1:], 1), 1) & (tp[:, i] == tp[:, j])
            for vals in (r, prem):
                close = np.abs(vals[i] - vals[j]) < tol
                # both pinned at 0 or both clamped at 1: flat, not a kink
                live = ((vals[i] > 0) | (vals[j] > 0)) & ((vals[i] < 1) | (vals[j] < 1))
                if np.any(close & ~same & live):
                    return True
        return False


def finite_difference_gradient(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return grad


def _descend(problem: FitProblem, theta: np.ndarray, step: float, shrink: float, max_iter: int, tol: float):
    loss, grad = problem.value_and_grad(theta)
    if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise FitError(f"non-finite objective at the starting point (loss={loss})")
    trace = [loss]
    converged = False
    t = step
    it = 0
    for it in range(1, max_iter + 1):
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            converged = True
            break
        # bound the logit move so a long step cannot land on a flat sigmoid tail
        t = min(t, _MAX_MOVE / float(np.max(np.abs(grad))))
        while True:
            cand = theta - t * grad
            new = problem.value(cand)
            if math.isfinite(new) and new <= loss - 1e-4 * t * gnorm2:
                break
            t *= shrink
            if t < 1e-14:
                break
        if t < 1e-14:
            converged = True
            break
        theta = cand
        change = loss - new
        loss, grad = problem.value_and_grad(theta)
        if not math.isfinite(loss):
            raise FitError("objective became non-finite")
        trace.append(loss)
        if change < tol:
            converged = True
            break
        t *= 2.0
    return theta, trace, it, converged


def _fit(problem: FitProblem, *, step: float, shrink: float, max_iter: int, tol: float, init_g: float) -> FitReport:
    warnings = []
    ones = np.ones(problem.num_g)
    _, pv0 = problem.split(problem.initial(init_g))
    ceiling = problem.counts(ones, pv0)
    if float(ceiling[0]) < problem.objective.triangles:
        warnings.append(
            f"triangle target {problem.objective.triangles:.6g} exceeds the expected count "
            f"{float(ceiling[0]):.6g} at g = 1; g will saturate"
        )
    if problem.joint and problem.edge_penalty == 0:
        warnings.append("edge penalty is 0: the expected edge count is unconstrained and may drift")
    theta, trace, iters, converged = _descend(problem, problem.initial(init_g), step, shrink, max_iter, tol)
    g, pv = problem.split(theta)
    g = np.where(problem.inert, 0.0, g)
    for w in warnings:
        log.warning(w)
    return FitReport(
        scheme=problem.scheme,
        R=problem.R,
        residual=problem.residual,
        iterations=iters,
        objective_trace=trace,
        final_g=g,
        achieved=problem.achieved(theta),
        converged=converged,
        final_p=pv if problem.joint else None,
        class_pairs=problem.agg.class_pairs if problem.joint else None,
        warnings=warnings,
    )


def fit_binding(model: EdgeProbModel, scheme: str, R: int, objective: FitObjective, *,
                residual: str = "shared", step: float = 0.1, shrink: float = 0.5,
                max_iter: int = 2000, tol: float = 1e-8, init_g: float = 0.5) -> FitReport:
    """Fit per-class node-sampling probabilities with edge probabilities fixed."""
    problem = FitProblem(model, scheme, R, objective, residual=residual)
    return _fit(problem, step=step, shrink=shrink, max_iter=max_iter, tol=tol, init_g=init_g)


def fit_binding_joint(model: EdgeProbModel, scheme: str, R: int, objective: FitObjective, *,
                      residual: str = "shared", edge_penalty: float = 1.0, step: float = 0.1,
                      shrink: float = 0.5, max_iter: int = 2000, tol: float = 1e-8,
                      init_g: float = 0.5) -> FitReport:
    """Fit node-sampling probabilities and class-pair edge probabilities together.

    A quadratic penalty ``edge_penalty * (1 - E[edges] / edges_target)**2``
    keeps the expected edge count at the input graph's (or, when the
    objective carries no edge target, the model's own) value.
    """
    if objective.kind != "triangles_plus_wedges":
        raise ValueError("joint fitting uses the triangles_plus_wedges objective")
    problem = FitProblem(model, scheme, R, objective, residual=residual, joint=True, edge_penalty=edge_penalty)
    return _fit(problem, step=step, shrink=shrink, max_iter=max_iter, tol=tol, init_g=init_g)
