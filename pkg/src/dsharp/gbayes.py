"""Generalized d-posteriors on a parameter grid.

The posterior weight of theta is prior(theta) * exp(-I(theta)), where I is a
divergence functional of the sharpening kernel of the data against the
family member at theta. KL gives the smooth (likelihood-like) update; total
variation and Renyi give robust updates.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import distributions as dist
from .distributions import as_array
from .divergence import PSI
from .errors import DegenerateModelError, DomainError, InputError
from .lp_basis import build_basis
from .quadrature import unit_rule
from .sharpening import estimate_raw, open_select

KINDS = ("kl", "tv", "renyi", "hellinger", "chisq")
KERNEL_FLOOR = 1e-12


class ParametricFamily:
    """Maps a parameter value to a model-0, e.g. ``normal`` with ``sd`` fixed.

    >>> fam = ParametricFamily("normal", ("mean",), {"sd": 1.0})
    >>> fam(0.5).to_spec()
    'normal:mean=0.5,sd=1.0'
    """

    def __init__(self, family: str, free: Sequence[str], fixed: dict | None = None):
        self.family = family
        self.free = tuple(free)
        self.fixed = dict(fixed or {})
        if not self.free:
            raise DomainError("a parametric family needs at least one free parameter")

    def __call__(self, theta):
        vals = np.atleast_1d(np.asarray(theta, dtype=float))
        if vals.size != len(self.free):
            raise DomainError(f"expected {len(self.free)} parameter value(s), got {vals.size}")
        params = dict(self.fixed)
        params.update(zip(self.free, (float(v) for v in vals)))
        return dist.BaseModel(self.family, params)

    @classmethod
    def from_spec(cls, spec: str, free: Sequence[str]) -> "ParametricFamily":
        """Family from a partial spec string, e.g. ``normal:sd=1`` with free ``mean``."""
        head, _, body = spec.partition(":")
        fixed = {}
        for item in filter(None, (s.strip() for s in body.split(","))):
            key, _, val = item.partition("=")
            if key.strip() not in free:
                fixed[key.strip()] = float(val)
        return cls(head.strip().lower(), free, fixed)


def parse_grid(spec: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Parse ``name=lo:hi:step[;name=lo:hi:step]`` into names and grid points.

    Two parameters give the Cartesian product. Endpoints are inclusive.
    """
    names, axes = [], []
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        name, eq, rng = part.partition("=")
        bits = rng.split(":")
        if not eq or len(bits) != 3:
            raise InputError(f"bad grid axis {part!r}: expected name=lo:hi:step")
        try:
            lo, hi, step = (float(b) for b in bits)
        except ValueError as exc:
            raise InputError(f"bad grid axis {part!r}") from exc
        if step <= 0 or hi < lo:
            raise InputError(f"bad grid axis {part!r}: need lo <= hi and step > 0")
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        names.append(name.strip())
        axes.append(lo + step * np.arange(count))
    if not 1 <= len(axes) <= 2:
        raise InputError("grid must have one or two axes")
    if len(axes) == 1:
        return tuple(names), axes[0]
    return tuple(names), np.array(list(itertools.product(*axes)))


def sharpening_kernel(data, family: Callable, theta, m: int = 6) -> np.ndarray:
    """Raw LP coefficients of the data against ``family(theta)``."""
    return estimate_raw(data, family(theta), m)


def kernel_divergence(coeffs, kind: str = "kl", alpha: float = 0.5) -> float:
    """int_0^1 psi(d(u)) du for d = 1 + sum c_j T_j clipped below at 1e-12."""
    coeffs = np.asarray(coeffs, dtype=float)
    nodes, weights = unit_rule()
    d = 1.0 + np.tensordot(coeffs, build_basis(coeffs.size).eval_all(nodes), axes=1) if coeffs.size else np.ones_like(nodes)
    d = np.maximum(d, KERNEL_FLOOR)
    if kind == "renyi":
        if alpha in (0.0, 1.0):
            raise DomainError("Renyi divergence undefined at alpha in {0, 1}")
        return float((1.0 - np.dot(weights, d**alpha)) / (alpha * (1.0 - alpha)))
    if kind not in PSI:
        raise DomainError(f"unknown divergence {kind!r}; choose from {KINDS}")
    return float(np.dot(weights, PSI[kind](d)))


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    grid: np.ndarray
    prior: np.ndarray
    posterior: np.ndarray
    divergences: np.ndarray
    kind: str
    smoothing: str
    m: int
    alpha: float | None = None
    names: tuple = ()

    def mode(self):
        return self.grid[int(np.argmax(self.posterior))]

    def mean(self):
        return np.tensordot(self.posterior, self.grid, axes=1)

    def variance(self):
        centred = self.grid - self.mean()
        return np.tensordot(self.posterior, centred**2, axes=1)

    def as_dict(self) -> dict:
        return {
            "names": list(self.names),
            "kind": self.kind,
            "alpha": self.alpha,
            "smoothing": self.smoothing,
            "m": self.m,
            "mode": np.asarray(self.mode()).tolist(),
            "mean": np.asarray(self.mean()).tolist(),
            "grid": self.grid.tolist(),
            "prior": self.prior.tolist(),
            "posterior": self.posterior.tolist(),
            "divergence": self.divergences.tolist(),
        }


def d_posterior(data, family: Callable, grid, prior=None, kind: str = "kl", m: int = 6,
                alpha: float = 0.5, smoothing: str = "raw", gamma: float = 2.0,
                names: tuple = ()) -> PosteriorGrid:
    """Posterior weights proportional to prior * exp(-int psi(d_theta)).

    ``smoothing="open"`` replaces the raw kernel by its OPEN-selected version
    (the smooth-Bayes variant).
    """
    x = as_array(data)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty parameter grid")
    if kind not in KINDS:
        raise DomainError(f"unknown divergence {kind!r}; choose from {KINDS}")
    if smoothing not in ("raw", "open"):
        raise DomainError("smoothing must be 'raw' or 'open'")
    k = grid.shape[0]
    prior = np.full(k, 1.0 / k) if prior is None else np.asarray(prior, dtype=float)
    if prior.shape != (k,) or np.any(prior < 0) or not prior.sum() > 0:
        raise DomainError("prior must be nonnegative with one weight per grid point")
    prior = prior / prior.sum()

    divs = np.empty(k)
    for i, theta in enumerate(grid):
        coeffs = sharpening_kernel(x, family, theta, m)
        if smoothing == "open":
            _, smooth, _ = open_select(coeffs, x.size, gamma)
            coeffs = np.array([smooth.get(j, 0.0) for j in range(1, m + 1)])
        divs[i] = kernel_divergence(coeffs, kind, alpha)

    with np.errstate(divide="ignore"):
        logw = np.log(prior) - divs
    if not np.any(np.isfinite(logw)):
        raise DegenerateModelError("all posterior weights underflow")
    logw -= logw[np.isfinite(logw)].max()
    w = np.where(np.isfinite(logw), np.exp(logw), 0.0)
    post = w / w.sum()
    return PosteriorGrid(grid, prior, post, divs, kind, smoothing, m,
                         alpha if kind == "renyi" else None, tuple(names))


def read_prior(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``theta,weight`` CSV (one parameter) into grid and weights."""
    thetas, weights = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["theta", "weight"]:
            raise InputError(f"{path}: line 1: expected header 'theta,weight'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                thetas.append(float(row[0]))
                weights.append(float(row[1]))
            except (ValueError, IndexError) as exc:
                raise InputError(f"{path}: line {lineno}: expected two numbers") from exc
    if not thetas:
        raise InputError(f"{path}: no prior rows")
    return np.array(thetas), np.array(weights)
