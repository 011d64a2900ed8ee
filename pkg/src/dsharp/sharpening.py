"""Comparison coding, OPEN selection and d-sharp models.

A d-sharp model multiplies a model-0 density by the sharpening series
``1 + sum_j c_j T_j(F0(x))``. The raw series can dip below zero; the model
clips it at zero and renormalises. The clipped mass is computed exactly from
the polynomial antiderivative between the roots of the series, so the cdf
and normaliser carry no grid error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from .distributions import BaseModel, Sample, _open_unit, as_array
from .errors import DegenerateModelError, DomainError, InputError
from .lp_basis import MAX_ORDER, build_basis
from .quadrature import graded_rule

log = logging.getLogger(__name__)

ROOT_GRID = 4097
CURVE_POINTS = 512


def estimate_raw(data, base, m_max: int = 10) -> np.ndarray:
    """Empirical LP coefficients: the sample means of T_j(F0(x_i)), j = 1..m_max."""
    x = as_array(data)
    if x.size < 2:
        raise InputError("need at least two observations to estimate LP coefficients")
    basis = build_basis(m_max)
    u = np.clip(np.asarray(base.cdf(x), dtype=float), 0.0, 1.0)
    return basis.eval_all(u).mean(axis=1)


def open_scores(raw, n: int, gamma: float = 2.0) -> np.ndarray:
    """OPEN(m) for m = 1..len(raw): top-m ordered sum of squares minus gamma*m/n."""
    sq = np.sort(np.asarray(raw, dtype=float) ** 2)[::-1]
    m = np.arange(1, sq.size + 1)
    return np.cumsum(sq) - gamma * m / n


def open_select(raw, n: int, gamma: float = 2.0):
    """OPEN model selection.

    Returns ``(selected, smooth, scores)``: the retained orders in ascending
    order, a dict order -> coefficient (the raw value, not shrunk) and the
    OPEN score for every model size. Ties go to the smaller model; if no size
    scores above zero the selection is empty.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise DomainError("need at least one coefficient")
    if n < 2:
        raise DomainError("sample size must be at least 2")
    scores = open_scores(raw, n, gamma)
    best = int(np.argmax(scores))
    if scores[best] <= 0.0:
        return (), {}, scores
    order = np.argsort(-np.abs(raw), kind="stable")
    keep = sorted(int(j) + 1 for j in order[: best + 1])
    return tuple(keep), {j: float(raw[j - 1]) for j in keep}, scores


@dataclass(frozen=True, eq=False)
class SharpeningFit:
    """Raw and OPEN-selected LP coefficients of data against a model-0."""

    base: object
    n: int
    raw_coeffs: np.ndarray
    selected: tuple
    smooth_coeffs: dict
    open_scores: np.ndarray
    gamma: float = 2.0

    @property
    def m_max(self) -> int:
        return int(self.raw_coeffs.size)

    def eval_d(self, u):
        return eval_d(self, u)

    def chisq(self):
        from .divergence import chisq_index

        return chisq_index(self.raw_coeffs, self.n)

    def model(self) -> "DSharpModel":
        return make_dsharp(self.base, self.smooth_coeffs)


def fit(data, base, m_max: int = 10, gamma: float = 2.0, select: bool = True) -> SharpeningFit:
    """Estimate the sharpening function of ``data`` against ``base``.

    With ``select=False`` all ``m_max`` raw coefficients are kept (the fixed
    m mode) instead of the OPEN subset.
    """
    x = as_array(data)
    raw = estimate_raw(x, base, m_max)
    selected, smooth, scores = open_select(raw, x.size, gamma)
    if not select:
        selected = tuple(range(1, m_max + 1))
        smooth = {j: float(raw[j - 1]) for j in selected}
    return SharpeningFit(base, int(x.size), raw, selected, smooth, scores, gamma)


def _series(coeffs: Mapping[int, float]) -> tuple[int, np.ndarray]:
    if not coeffs:
        return 0, np.zeros(0)
    m = max(coeffs)
    if min(coeffs) < 1 or m > MAX_ORDER:
        raise DomainError(f"LP orders must lie in 1..{MAX_ORDER}")
    vec = np.zeros(m)
    for j, c in coeffs.items():
        vec[j - 1] = float(c)
    return m, vec


def _check_unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(~(u >= 0.0) | ~(u <= 1.0)):
        raise DomainError("u must lie in [0, 1]")
    return u


def series_value(coeffs: Mapping[int, float], u):
    """1 + sum_j c_j T_j(u), unclipped."""
    u = _check_unit(u)
    m, vec = _series(coeffs)
    if m == 0:
        out = np.ones_like(u)
    else:
        out = 1.0 + np.tensordot(vec, build_basis(m).eval_all(u), axes=1)
    return out if out.ndim else float(out)


def eval_d(fit: SharpeningFit, u):
    """Smoothed sharpening function 1 + sum over selected of c_j T_j(u)."""
    return series_value(fit.smooth_coeffs, u)


@dataclass(frozen=True, eq=False)
class DSharpModel:
    """Model-0 times a (clipped, renormalised) LP sharpening series.

    ``base`` may itself be a DSharpModel, which is how recursive upgrading
    composes. Exposes the same pdf/cdf/quantile/sample surface as BaseModel.
    """

    base: object
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(j): float(c) for j, c in dict(self.coeffs).items()}
        object.__setattr__(self, "coeffs", clean)
        _series(clean)
        if self.normalizer <= 1e-12:
            raise DegenerateModelError("sharpened density has no mass")

    # -- u-scale machinery ------------------------------------------------

    @cached_property
    def _vec(self) -> np.ndarray:
        return _series(self.coeffs)[1]

    @property
    def order(self) -> int:
        return int(self._vec.size)

    def d_raw(self, u):
        """Unclipped series 1 + sum c_j T_j(u)."""
        return series_value(self.coeffs, u)

    def _antiderivative(self, u: np.ndarray) -> np.ndarray:
        if self.order == 0:
            return u
        return u + np.tensordot(self._vec, build_basis(self.order).integral_all(u), axes=1)

    @cached_property
    def roots(self) -> tuple[float, ...]:
        """Sign changes of the raw series inside (0, 1)."""
        if self.order == 0:
            return ()
        grid = np.linspace(0.0, 1.0, ROOT_GRID)
        vals = self.d_raw(grid)
        out = []
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            out.append(brentq(lambda t: self.d_raw(t), grid[i], grid[i + 1], xtol=1e-15))
        for i in np.nonzero(vals[1:-1] == 0.0)[0]:
            out.append(grid[i + 1])
        return tuple(sorted(out))

    @cached_property
    def positive_intervals(self) -> tuple[tuple[float, float], ...]:
        edges = [0.0, *self.roots, 1.0]
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a and self.d_raw(0.5 * (a + b)) > 0.0:
                pieces.append((a, b))
        return tuple(pieces)

    @cached_property
    def _piece_arrays(self):
        pieces = np.asarray(self.positive_intervals, dtype=float).reshape(-1, 2)
        return pieces[:, 0], pieces[:, 1], self._antiderivative(pieces[:, 0]) if len(pieces) else np.zeros(0)

    def _clipped_mass(self, u: np.ndarray) -> np.ndarray:
        """int_0^u max(0, series) for an array of u."""
        a, b, A_a = self._piece_arrays
        if a.size == 0:
            return np.zeros_like(u)
        uc = np.clip(u[..., None], a, b)
        return (self._antiderivative(uc.ravel()).reshape(uc.shape) - A_a).sum(axis=-1)

    @cached_property
    def normalizer(self) -> float:
        """Mass of the positively clipped series on [0, 1]."""
        if self.order == 0:
            return 1.0
        return float(self._clipped_mass(np.array([1.0]))[0])

    def d(self, u):
        """Clipped and renormalised sharpening function (a density on [0, 1])."""
        raw = np.asarray(self.d_raw(u))
        out = np.maximum(raw, 0.0) / self.normalizer
        return out if out.ndim else float(out)

    def cdf_u(self, u):
        u = _check_unit(u)
        if self.order == 0:
            out = u.copy()
        else:
            out = np.clip(self._clipped_mass(u) / self.normalizer, 0.0, 1.0)
        return out if out.ndim else float(out)

    @cached_property
    def _cdf_grid(self) -> tuple[np.ndarray, np.ndarray]:
        grid = np.linspace(0.0, 1.0, ROOT_GRID)
        vals = np.maximum.accumulate(self.cdf_u(grid))
        return grid, vals

    def quantile_u(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(~(p > 0.0) | ~(p < 1.0)):
            raise DomainError("quantile level must lie strictly inside (0, 1)")
        if self.order == 0:
            return p if p.ndim else float(p)
        grid, vals = self._cdf_grid
        idx = np.clip(np.searchsorted(vals, p, side="left"), 1, grid.size - 1)
        lo, hi = grid[idx - 1], grid[idx]
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            below = self.cdf_u(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = np.clip(0.5 * (lo + hi), np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        return out if out.ndim else float(out)

    # -- x-scale surface ----------------------------------------------------

    def pdf_raw(self, x):
        x = np.asarray(x, dtype=float)
        u = np.clip(np.asarray(self.base.cdf(x), dtype=float), 0.0, 1.0)
        out = np.asarray(self.base.pdf(x)) * self.d_raw(u)
        return out if out.ndim else float(out)

    def pdf_positive(self, x):
        x = np.asarray(x, dtype=float)
        u = np.clip(np.asarray(self.base.cdf(x), dtype=float), 0.0, 1.0)
        out = np.asarray(self.base.pdf(x)) * self.d(u)
        return out if out.ndim else float(out)

    pdf = pdf_positive

    def cdf(self, x):
        u = np.clip(np.asarray(self.base.cdf(x), dtype=float), 0.0, 1.0)
        return self.cdf_u(u)

    def cdf_raw(self, x):
        """Unclipped cdf F0(x) + sum_j c_j int_0^{F0(x)} T_j."""
        u = np.clip(np.asarray(self.base.cdf(x), dtype=float), 0.0, 1.0)
        out = self._antiderivative(u)
        return out if out.ndim else float(out)

    def quantile(self, p):
        return self.base.quantile(self.quantile_u(p))

    @property
    def support(self):
        return self.base.support

    def u_rule(self, kinks=()) -> tuple[np.ndarray, np.ndarray]:
        """Tail-graded rule on [0, 1] split at the series roots and at F0(kinks)."""
        extra = np.atleast_1d(np.asarray(self.base.cdf(np.asarray(kinks, dtype=float)), dtype=float))
        return graded_rule((*self.roots, *extra))

    def expectation(self, fn, kinks=()) -> float:
        """E[fn(X)] = int_0^1 fn(Q0(u)) d(u) du; ``kinks`` are x points where fn bends."""
        nodes, weights = self.u_rule(kinks)
        vals = np.asarray(fn(np.asarray(self.base.quantile(nodes))), dtype=float)
        return float(np.dot(weights, vals * self.d(nodes)))

    def mean(self) -> float:
        return self.expectation(lambda x: x)

    def sample(self, n: int, seed: int | None = None, rng: np.random.Generator | None = None) -> Sample:
        return sample_dsharp(self, n, seed=seed, rng=rng)

    def curve_u(self, points: int = CURVE_POINTS) -> tuple[np.ndarray, np.ndarray]:
        u = np.linspace(0.0, 1.0, points)
        return u, np.asarray(self.d_raw(u))

    def describe(self) -> str:
        terms = " ".join(f"{c:+.4f}*T{j}" for j, c in sorted(self.coeffs.items()))
        return f"{self.base} x [1 {terms}]" if terms else str(self.base)


def make_dsharp(base, coeffs: Mapping[int, float] | None = None) -> DSharpModel:
    """Assemble the d-sharp model f0(x) [1 + sum_j c_j T_j(F0(x))]."""
    return DSharpModel(base, dict(coeffs or {}))


def envelope(model: DSharpModel) -> float:
    """Upper bound 1 + sum |c_j| sqrt(2j + 1) of the raw series on [0, 1]."""
    return 1.0 + sum(abs(c) * np.sqrt(2 * j + 1) for j, c in model.coeffs.items())


def accept_reject_u(model: DSharpModel, n: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Draw ``n`` points from the clipped series on [0, 1] by accept-reject.

    Proposals are uniform (the model-0 law on the u scale). Returns the
    accepted u values and the observed acceptance rate over all proposals.
    """
    env = envelope(model)
    if env < 1e-12:
        raise DegenerateModelError("accept-reject envelope vanished")
    rate = model.normalizer / env
    chunks, have, proposed = [], 0, 0
    while have < n:
        k = max(64, int(np.ceil(1.1 * (n - have) / rate)))
        u = _open_unit(rng.uniform(size=k))
        v = rng.uniform(size=k)
        keep = u[v * env < np.maximum(model.d_raw(u), 0.0)]
        proposed += k
        chunks.append(keep)
        have += keep.size
    u = np.concatenate(chunks)
    return u[:n], u.size / proposed


def sample_dsharp(model: DSharpModel, n: int, seed: int | None = None,
                  rng: np.random.Generator | None = None) -> Sample:
    """Sample a d-sharp model by accept-reject with model-0 as proposal."""
    if n < 1:
        raise DomainError("sample size must be at least 1")
    if not model.coeffs:
        return model.base.sample(n, seed=seed, rng=rng)
    rng = rng if rng is not None else np.random.default_rng(seed)
    u, _ = accept_reject_u(model, n, rng)
    return Sample(np.asarray(model.base.quantile(u), dtype=float))


def resharpen(model, data, m_max: int = 10, gamma: float = 2.0) -> DSharpModel:
    """One step of recursive upgrading: use ``model`` as the new model-0."""
    base = model
    if isinstance(model, DSharpModel) and not model.coeffs:
        base = model.base
    return fit(data, base, m_max, gamma).model()
