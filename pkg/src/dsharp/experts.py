"""Data-driven combination of several expert model-0s."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import BaseModel, as_array, mixture
from .errors import DomainError, SupportError
from .sharpening import estimate_raw


def _check_support(x: np.ndarray, expert) -> None:
    lo, hi = expert.support
    if x.min() < lo or x.max() > hi:
        raise SupportError(f"data range [{x.min():g}, {x.max():g}] leaves the support of {expert}")


def relevance_weight(coeffs) -> float:
    """1 / (1 + sum of squared LP coefficients); equals 1 iff all vanish."""
    c = np.asarray(coeffs, dtype=float)
    return 1.0 / (1.0 + float(np.dot(c, c)))


def relevance_weights(data, experts, m: int = 10) -> np.ndarray:
    """Relevance weight of each expert from its raw coefficients at orders 1..m."""
    x = as_array(data)
    if len(experts) < 2:
        raise DomainError("need at least two experts")
    if x.size < 10:
        raise DomainError("need at least 10 observations")
    out = []
    for expert in experts:
        _check_support(x, expert)
        out.append(relevance_weight(estimate_raw(x, expert, m)))
    return np.array(out)


@dataclass(frozen=True, eq=False)
class ExpertEnsemble:
    experts: tuple
    weights: np.ndarray
    mixture_probs: np.ndarray
    consensus: BaseModel

    def as_dict(self) -> dict:
        return {
            "experts": [e.to_spec() for e in self.experts],
            "weights": [float(w) for w in self.weights],
            "mixture_probs": [float(p) for p in self.mixture_probs],
            "consensus": self.consensus.to_spec(),
        }


def mixture_probs(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    pi = w / w.sum()
    pi[-1] = 1.0 - pi[:-1].sum()
    return pi


def consensus(data, experts, m: int = 10) -> ExpertEnsemble:
    """Mixture of the experts with probabilities proportional to relevance."""
    experts = tuple(experts)
    w = relevance_weights(data, experts, m)
    pi = mixture_probs(w)
    return ExpertEnsemble(experts, w, pi, mixture(experts, pi))
