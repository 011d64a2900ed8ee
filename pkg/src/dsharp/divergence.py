"""Csiszar-class misspecification indices computed on the u = F0(x) scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from .errors import DomainError, DSharpError
from .quadrature import DEFAULT_NODES, piecewise_rule, unit_rule

KINDS = ("kl", "tv", "hellinger", "chisq")


class EvaluationError(DSharpError, ArithmeticError):
    """A sharpening function returned NaN."""


def _xlogx(d: np.ndarray) -> np.ndarray:
    out = np.zeros_like(d)
    pos = d > 0
    out[pos] = d[pos] * np.log(d[pos])
    return out


PSI = {
    "kl": _xlogx,
    "tv": lambda d: np.abs(d - 1.0),
    "hellinger": lambda d: (1.0 - np.sqrt(d)) ** 2,
    "chisq": lambda d: (d - 1.0) ** 2,
}


@dataclass(frozen=True)
class DivergenceReport:
    kind: str
    value: float
    dof: int | None = None
    p_value: float | None = None
    statistic: float | None = None

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "value": self.value}
        if self.kind == "chisq":
            out.update(dof=self.dof, statistic=self.statistic, p_value=self.p_value)
        return out


def _rule(n: int, breaks):
    if breaks is not None and len(breaks):
        return piecewise_rule(breaks, n=max(64, n // (len(breaks) + 1)))
    return unit_rule(n)


def _values(d_eval, nodes) -> np.ndarray:
    d = np.asarray(d_eval(nodes), dtype=float)
    if np.any(np.isnan(d)):
        raise EvaluationError("sharpening function returned NaN")
    return d


def _crossings(d_eval, level: float = 1.0, grid: int = 4097) -> list[float]:
    """Points in (0, 1) where d crosses ``level``; these are the kinks of |d - 1|."""
    u = np.linspace(0.0, 1.0, grid)
    g = np.asarray(d_eval(u), dtype=float) - level
    out = []
    for i in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]:
        out.append(brentq(lambda t: float(d_eval(np.array([t]))[0]) - level, u[i], u[i + 1], xtol=1e-15))
    out.extend(u[1:-1][g[1:-1] == 0.0])
    return out


def csiszar(d_eval, psi: str = "kl", n: int = DEFAULT_NODES, breaks=None) -> float:
    """int_0^1 psi(d(u)) du for psi in {kl, tv, hellinger, chisq}.

    ``breaks`` lists kinks of ``d_eval`` (e.g. where a clipped series hits
    zero); the rule is then split there. For TV the crossings of d = 1 are
    located and added automatically.
    """
    psi = psi.lower()
    if psi not in PSI:
        raise DomainError(f"unknown divergence {psi!r}; choose from {KINDS}")
    if psi == "tv":
        breaks = sorted({*(breaks or ()), *_crossings(d_eval)})
    nodes, weights = _rule(n, breaks)
    d = np.maximum(_values(d_eval, nodes), 0.0)
    return float(np.dot(weights, PSI[psi](d)))


def renyi(d_eval, alpha: float = 0.5, n: int = DEFAULT_NODES, breaks=None) -> float:
    """Renyi alpha-divergence (1 - int d**alpha) / (alpha (1 - alpha))."""
    if alpha in (0.0, 1.0):
        raise DomainError("Renyi divergence undefined at alpha in {0, 1}")
    nodes, weights = _rule(n, breaks)
    d = np.maximum(_values(d_eval, nodes), 0.0)
    return float((1.0 - np.dot(weights, d**alpha)) / (alpha * (1.0 - alpha)))


def chisq_index(coeffs, n: int) -> DivergenceReport:
    """Parseval chi-square index sum_j c_j**2 with its chi^2_m null p-value.

    The statistic n * sum c_j**2 follows chi^2 with m = len(coeffs) degrees of
    freedom under the null only for raw, unselected coefficients.
    """
    c = np.asarray(coeffs, dtype=float).ravel()
    if c.size < 1:
        raise DomainError("need at least one coefficient")
    if n < 2:
        raise DomainError("sample size must be at least 2")
    value = float(np.dot(c, c))
    stat = n * value
    return DivergenceReport("chisq", value, dof=int(c.size), p_value=float(stats.chi2.sf(stat, c.size)),
                            statistic=float(stat))


def model_divergence(model, kind: str = "chisq", alpha: float = 0.5, n: int = DEFAULT_NODES) -> float:
    """Divergence of a d-sharp model from its own model-0."""
    breaks = getattr(model, "roots", None)
    if kind == "renyi":
        return renyi(model.d, alpha, n=n, breaks=breaks)
    return csiszar(model.d, kind, n=n, breaks=breaks)
