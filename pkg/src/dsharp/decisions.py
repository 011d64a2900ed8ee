"""Abductive decision-making over a neighbourhood of sharpened models.

Actions are scored by expected loss. The neighbourhood of plausible models is
explored by bootstrap: each replicate refits the sharpening series on a
resample of the data. From the replicates we get the action profile (how
often each action is optimal), its entropy, the least-favourable member for
an action, the minimax action and the robust action under the bootstrap
averaged density.
"""

from __future__ import annotations

import ast
import json
import logging
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .distributions import as_array
from .errors import DegenerateModelError, DomainError, DSharpError, InputError
from .quadrature import graded_rule
from .sharpening import DSharpModel, fit, make_dsharp

log = logging.getLogger(__name__)


class EvaluationError(DSharpError, ArithmeticError):
    """A loss evaluated to a non-finite value on the model support."""


# -- losses -------------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"abs": (np.abs, 1), "min": (np.minimum, 2), "max": (np.maximum, 2)}


def _compile(node, src):
    if isinstance(node, ast.Expression):
        return _compile(node.body, src)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        val = float(node.value)
        return lambda x: np.full_like(x, val)
    if isinstance(node, ast.Name):
        if node.id != "x":
            raise InputError(f"unknown name {node.id!r} in loss {src!r}")
        return lambda x: x
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, src)
        return (lambda x: -inner(x)) if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, src), _compile(node.right, src)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        fn, arity = _FUNCS[node.func.id]
        if len(node.args) != arity or node.keywords:
            raise InputError(f"{node.func.id}() takes {arity} argument(s) in loss {src!r}")
        args = [_compile(a, src) for a in node.args]
        return lambda x: fn(*(a(x) for a in args))
    raise InputError(f"unsupported syntax in loss {src!r}")


@dataclass(frozen=True, eq=False)
class Loss:
    """Loss of one action as a function of the outcome x.

    Built from an expression over ``x`` (``+ - * / ^``, ``abs``, ``min``,
    ``max``, numbers) or from a piecewise-linear table with flat
    extrapolation. ``kinks`` lists x values where the loss bends (the table
    knots); the quadrature splits there.
    """

    fn: Callable
    source: object = None
    scale: float = 1.0
    kinks: tuple = ()

    @classmethod
    def from_expr(cls, expr: str) -> "Loss":
        try:
            tree = ast.parse(expr.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise InputError(f"cannot parse loss {expr!r}") from exc
        return cls(_compile(tree, expr), source=expr)

    @classmethod
    def from_table(cls, table) -> "Loss":
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise InputError("loss table needs at least two [x, loss] rows")
        if np.any(~np.isfinite(arr)):
            raise InputError("loss table contains non-finite entries")
        if np.any(np.diff(arr[:, 0]) <= 0):
            raise InputError("loss table x values must be strictly increasing")
        xs, ys = arr[:, 0].copy(), arr[:, 1].copy()
        return cls(lambda x: np.interp(x, xs, ys), source=arr.tolist(), kinks=tuple(xs.tolist()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * np.asarray(self.fn(x), dtype=float)

    def scaled(self, c: float) -> "Loss":
        return Loss(self.fn, self.source, self.scale * c, self.kinks)


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    actions: tuple
    losses: tuple

    def __post_init__(self):
        if len(self.actions) < 2:
            raise DomainError("a decision problem needs at least two actions")
        if len(self.actions) != len(self.losses):
            raise DomainError("one loss per action required")
        if len(set(self.actions)) != len(self.actions):
            raise DomainError("action labels must be unique")
        losses = tuple(l if isinstance(l, Loss) else Loss(l) for l in self.losses)
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "losses", losses)

    @property
    def q(self) -> int:
        return len(self.actions)

    def index(self, action) -> int:
        if isinstance(action, (int, np.integer)) and action not in self.actions:
            if not 0 <= action < self.q:
                raise DomainError(f"action index {action} out of range")
            return int(action)
        try:
            return self.actions.index(action)
        except ValueError:
            raise DomainError(f"unknown action {action!r}") from None

    def scaled(self, c: float) -> "DecisionProblem":
        if c <= 0:
            raise DomainError("loss scale must be positive")
        return DecisionProblem(self.actions, tuple(l.scaled(c) for l in self.losses))

    @classmethod
    def from_spec(cls, entries: Sequence[dict]) -> "DecisionProblem":
        """Build from ``[{"action": ..., "expr": ...} | {"action": ..., "table": ...}]``."""
        if not isinstance(entries, list):
            raise InputError("loss file must hold a JSON list")
        actions, losses = [], []
        for i, item in enumerate(entries):
            if not isinstance(item, dict) or "action" not in item:
                raise InputError(f"loss entry {i}: needs an 'action' field")
            has_expr, has_table = "expr" in item, "table" in item
            if has_expr == has_table:
                raise InputError(f"loss entry {i}: give exactly one of 'expr' or 'table'")
            actions.append(str(item["action"]))
            losses.append(Loss.from_expr(item["expr"]) if has_expr else Loss.from_table(item["table"]))
        return cls(tuple(actions), tuple(losses))

    @classmethod
    def load(cls, path) -> "DecisionProblem":
        try:
            entries = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        return cls.from_spec(entries)


# -- expected loss ------------------------------------------------------------


def expected_loss(problem: DecisionProblem, action, model) -> float:
    """Expected loss of ``action`` under ``model``, integrated on the u scale."""
    loss = problem.losses[problem.index(action)]
    if isinstance(model, (DSharpModel, EnsembleAverage)):
        val = model.expectation(loss, loss.kinks)
    else:
        nodes, weights = graded_rule(np.atleast_1d(model.cdf(np.asarray(loss.kinks, dtype=float))))
        vals = loss(np.asarray(model.quantile(nodes)))
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("loss is not finite on the model support")
        val = float(np.dot(weights, vals))
    if not math.isfinite(val):
        raise EvaluationError("loss is not finite on the model support")
    return val


TIE_TOL = 1e-12


def first_best(values, largest: bool = False) -> int:
    """First index within rounding (TIE_TOL relative) of the min or max.

    Expected losses come from quadrature, so exact ties such as a constant
    loss only agree to the last few bits; those still go to the first entry.
    """
    v = np.asarray(values, dtype=float)
    best = v.max() if largest else v.min()
    slack = TIE_TOL * max(1.0, abs(best))
    near = v >= best - slack if largest else v <= best + slack
    return int(np.argmax(near))


def loss_table(problem: DecisionProblem, models) -> np.ndarray:
    """Expected losses, shape (number of actions, number of models)."""
    return np.array([[expected_loss(problem, a, m) for m in models] for a in range(problem.q)])


def optimal_action(problem: DecisionProblem, model):
    """Action with the smallest expected loss (first listed wins ties)."""
    risks = [expected_loss(problem, a, model) for a in range(problem.q)]
    return problem.actions[first_best(risks)]


# -- bootstrap neighbourhood --------------------------------------------------


class EnsembleAverage:
    """Equal-weight mixture of the bootstrap members, evaluated lazily."""

    def __init__(self, members):
        self.members = tuple(members)

    def pdf(self, x):
        return np.mean([np.asarray(m.pdf(x)) for m in self.members], axis=0)

    def cdf(self, x):
        return np.mean([np.asarray(m.cdf(x)) for m in self.members], axis=0)

    def expectation(self, fn, kinks=()) -> float:
        return float(np.mean([m.expectation(fn, kinks) for m in self.members]))

    def d(self, u):
        """Averaged sharpening function (members sharing one model-0)."""
        return np.mean([np.asarray(m.d(u)) for m in self.members], axis=0)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        qs = np.stack([np.asarray(m.quantile(p)) for m in self.members])
        lo, hi = qs.min(axis=0), qs.max(axis=0)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class ModelEnsemble:
    members: tuple
    seeds: tuple
    base: object
    skipped: tuple = ()

    @property
    def B(self) -> int:
        return len(self.members)

    @property
    def averaged(self) -> EnsembleAverage:
        return EnsembleAverage(self.members)


def bootstrap_ensemble(data, base, M: int = 10, B: int = 1000, seed: int = 0,
                       gamma: float = 2.0) -> ModelEnsemble:
    """Synthesize plausible models by refitting the sharpening series on resamples.

    Replicate ``i`` draws its resample from ``default_rng(seed + i)``.
    Degenerate replicates are skipped; more than 10% skipped is an error.
    """
    x = as_array(data)
    if x.size < 10:
        raise DomainError("bootstrap needs at least 10 observations")
    if B < 1:
        raise DomainError("B must be at least 1")
    members, seeds, skipped = [], [], []
    for i in range(B):
        rng = np.random.default_rng(seed + i)
        xb = x[rng.integers(0, x.size, size=x.size)]
        try:
            members.append(fit(xb, base, M, gamma).model())
            seeds.append(seed + i)
        except DegenerateModelError:
            log.warning("bootstrap replicate %d skipped: degenerate sharpened density", i)
            skipped.append(i)
    if len(skipped) > 0.1 * B:
        raise DegenerateModelError(f"{len(skipped)} of {B} bootstrap replicates were degenerate")
    return ModelEnsemble(tuple(members), tuple(seeds), base, tuple(skipped))


def direct_fits(data, base, M: int = 10) -> list[DSharpModel]:
    """DS(F0, m) for m = 0..M using all m raw coefficients at each size."""
    out = [make_dsharp(base, {})]
    for m in range(1, M + 1):
        try:
            out.append(fit(data, base, m, select=False).model())
        except DegenerateModelError:
            log.warning("direct fit at m=%d skipped: degenerate sharpened density", m)
    return out


# -- action analysis ----------------------------------------------------------


@dataclass(frozen=True)
class ActionProfile:
    counts: dict
    B: int
    probabilities: dict
    entropy: float

    def as_dict(self) -> dict:
        return {"counts": self.counts, "B": self.B, "probabilities": self.probabilities,
                "entropy": self.entropy}


def entropy(probs) -> float:
    """Shannon entropy in nats with 0 log 0 = 0."""
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    # max() also turns the -0.0 of a point mass into 0.0
    return max(0.0, float(-(p * np.log(p)).sum())) if p.size else 0.0


def profile_from_choices(problem: DecisionProblem, choices) -> ActionProfile:
    counts = {a: 0 for a in problem.actions}
    for c in choices:
        counts[c] += 1
    total = sum(counts.values())
    probs = {a: counts[a] / total for a in problem.actions}
    return ActionProfile(counts, total, probs, entropy(list(probs.values())))


def action_profile(problem: DecisionProblem, ensemble) -> ActionProfile:
    """Bootstrap distribution of optimal actions and its entropy."""
    members = ensemble.members if isinstance(ensemble, ModelEnsemble) else ensemble
    table = loss_table(problem, members)
    choices = [problem.actions[first_best(col)] for col in table.T]
    return profile_from_choices(problem, choices)


def least_favorable_index(problem: DecisionProblem, action, ensemble) -> int:
    members = ensemble.members if isinstance(ensemble, ModelEnsemble) else ensemble
    if not len(members):
        raise DomainError("empty ensemble")
    risks = [expected_loss(problem, action, m) for m in members]
    return first_best(risks, largest=True)


def least_favorable(problem: DecisionProblem, action, ensemble):
    """Member with the largest expected loss for ``action`` (lowest index on ties)."""
    members = ensemble.members if isinstance(ensemble, ModelEnsemble) else ensemble
    return members[least_favorable_index(problem, action, members)]


@dataclass(frozen=True)
class MinimaxResult:
    action: object
    worst_case: dict
    attained_by: dict


def minimax(problem: DecisionProblem, candidates) -> MinimaxResult:
    """Minimise over actions the worst expected loss over ``candidates``."""
    candidates = list(candidates.members if isinstance(candidates, ModelEnsemble) else candidates)
    if not candidates:
        raise DomainError("empty candidate set")
    table = loss_table(problem, candidates)
    worst = table.max(axis=1)
    where = [first_best(row, largest=True) for row in table]
    best = first_best(worst)
    return MinimaxResult(
        problem.actions[best],
        {a: float(w) for a, w in zip(problem.actions, worst)},
        {a: int(i) for a, i in zip(problem.actions, where)},
    )


def minimax_action(problem: DecisionProblem, candidates):
    return minimax(problem, candidates).action


def robust_risks(problem: DecisionProblem, ensemble) -> np.ndarray:
    """Expected loss of each action under the averaged density (member mean)."""
    members = ensemble.members if isinstance(ensemble, ModelEnsemble) else ensemble
    return loss_table(problem, members).mean(axis=1)


def robust_action(problem: DecisionProblem, ensemble):
    """Action minimising expected loss under the bootstrap averaged density."""
    return problem.actions[first_best(robust_risks(problem, ensemble))]
