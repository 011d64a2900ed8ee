"""Model-0 families with closed-form pdf, cdf and quantile.

Every model here is immutable. Exponential is parameterised by its mean,
not its rate. Sampling is inverse-cdf from a seeded generator, so a fixed
seed always reproduces the same draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, InputError, ParameterError

FAMILIES = ("normal", "lognormal", "exp", "uniform", "laplace", "logistic", "mix")
LOCATION_SCALE = ("normal", "laplace", "logistic", "uniform")

# Canonical parameter names (in spec-string order) per family.
_PARAM_NAMES = {
    "normal": ("mean", "sd"),
    "lognormal": ("mu", "sigma"),
    "exp": ("mean",),
    "uniform": ("a", "b"),
    "laplace": ("loc", "scale"),
    "logistic": ("loc", "scale"),
}
_ALIASES = {"exponential": "exp", "mixture": "mix", "gaussian": "normal"}


@dataclass(frozen=True, eq=False)
class Sample:
    """A finite sample of real observations."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size < 1:
            raise InputError("a sample needs at least one observation")
        if not np.all(np.isfinite(vals)):
            raise InputError("sample contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def as_array(data) -> np.ndarray:
    """Values of a Sample or any array-like as a float array."""
    if isinstance(data, Sample):
        return data.values
    return Sample(data).values


@dataclass(frozen=True)
class BaseModel:
    """A parametric model-0.

    ``params`` maps parameter names to floats for the simple families. A
    mixture carries ``components`` and ``weights`` instead.
    """

    family: str
    params: dict = field(default_factory=dict)
    components: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        fam = _ALIASES.get(self.family, self.family)
        if fam not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if fam == "mix":
            _validate_mixture(self.components, self.weights)
            object.__setattr__(self, "components", tuple(self.components))
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
            return
        names = _PARAM_NAMES[fam]
        if set(self.params) != set(names):
            raise ParameterError(f"{fam} needs parameters {names}, got {tuple(self.params)}")
        params = {k: float(self.params[k]) for k in names}
        if not all(math.isfinite(v) for v in params.values()):
            raise ParameterError(f"{fam} parameters must be finite")
        object.__setattr__(self, "params", params)
        _validate_params(fam, params)

    # -- scipy backing -----------------------------------------------------

    @cached_property
    def _frozen(self):
        p = self.params
        fam = self.family
        if fam == "normal":
            return stats.norm(loc=p["mean"], scale=p["sd"])
        if fam == "lognormal":
            return stats.lognorm(s=p["sigma"], scale=math.exp(p["mu"]))
        if fam == "exp":
            return stats.expon(scale=p["mean"])
        if fam == "uniform":
            return stats.uniform(loc=p["a"], scale=p["b"] - p["a"])
        if fam == "laplace":
            return stats.laplace(loc=p["loc"], scale=p["scale"])
        if fam == "logistic":
            return stats.logistic(loc=p["loc"], scale=p["scale"])
        raise AssertionError(fam)

    @property
    def is_mixture(self) -> bool:
        return self.family == "mix"

    @property
    def support(self) -> tuple[float, float]:
        if self.is_mixture:
            lows, highs = zip(*(c.support for c in self.components))
            return min(lows), max(highs)
        if self.family == "uniform":
            return self.params["a"], self.params["b"]
        if self.family in ("exp", "lognormal"):
            return 0.0, math.inf
        return -math.inf, math.inf

    # -- evaluation --------------------------------------------------------

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_mixture:
            out = np.asarray(sum(w * c.pdf(x) for w, c in zip(self.weights, self.components)))
        else:
            out = self._frozen.pdf(x)
            lo, hi = self.support
            out = np.where((x < lo) | (x > hi), 0.0, out)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_mixture:
            out = sum(w * c.cdf(x) for w, c in zip(self.weights, self.components))
            out = np.clip(out, 0.0, 1.0)
        else:
            out = self._frozen.cdf(x)
            lo, hi = self.support
            out = np.where(x <= lo, 0.0, np.where(x >= hi, 1.0, out))
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(~(u > 0.0) | ~(u < 1.0)):
            raise DomainError("quantile level must lie strictly inside (0, 1)")
        out = self._mixture_quantile(u) if self.is_mixture else self._frozen.ppf(u)
        return out if out.ndim else float(out)

    def _mixture_quantile(self, u: np.ndarray) -> np.ndarray:
        # Bracket by the component quantiles: for every level the mixture
        # quantile lies between the smallest and largest component quantile.
        qs = np.stack([c.quantile(u) for c in self.components])
        lo = qs.min(axis=0)
        hi = qs.max(axis=0)
        spread = np.maximum(hi - lo, 1.0)
        tol = 1e-12 * spread
        for _ in range(200):
            if np.all(hi - lo <= tol):
                break
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def mean(self) -> float:
        if self.is_mixture:
            return float(sum(w * c.mean() for w, c in zip(self.weights, self.components)))
        return float(self._frozen.mean())

    def sample(self, n: int, seed: int | None = None, rng: np.random.Generator | None = None) -> Sample:
        """Draw ``n`` values. Pass either an integer ``seed`` or a generator."""
        if n < 1:
            raise DomainError("sample size must be at least 1")
        rng = rng if rng is not None else np.random.default_rng(seed)
        if self.is_mixture:
            labels = rng.choice(len(self.components), size=n, p=np.asarray(self.weights))
            u = rng.uniform(size=n)
            out = np.empty(n)
            for k, comp in enumerate(self.components):
                idx = labels == k
                if idx.any():
                    out[idx] = comp.quantile(_open_unit(u[idx]))
            return Sample(out)
        return Sample(self.quantile(_open_unit(rng.uniform(size=n))))

    # -- spec strings --------------------------------------------------------

    def to_spec(self) -> str:
        if self.is_mixture:
            return "mix:" + "|".join(f"{w!r}*{c.to_spec()}" for w, c in zip(self.weights, self.components))
        names = _PARAM_NAMES[self.family]
        return f"{self.family}:" + ",".join(f"{k}={self.params[k]!r}" for k in names)

    def __str__(self) -> str:
        return self.to_spec()


def _open_unit(u: np.ndarray) -> np.ndarray:
    # rng.uniform draws from [0, 1); nudge an exact 0 inside the open interval
    return np.where(u <= 0.0, np.nextafter(0.0, 1.0), u)


def _validate_params(fam: str, p: dict) -> None:
    if fam == "normal" and p["sd"] <= 0:
        raise ParameterError("normal sd must be positive")
    if fam == "lognormal" and p["sigma"] <= 0:
        raise ParameterError("lognormal sigma must be positive")
    if fam == "exp" and p["mean"] <= 0:
        raise ParameterError("exponential mean must be positive")
    if fam == "uniform" and not p["a"] < p["b"]:
        raise ParameterError("uniform needs a < b")
    if fam in ("laplace", "logistic") and p["scale"] <= 0:
        raise ParameterError(f"{fam} scale must be positive")


def _validate_mixture(components, weights) -> None:
    if len(components) < 1 or len(components) != len(weights):
        raise ParameterError("mixture needs one weight per component")
    if not all(isinstance(c, BaseModel) for c in components):
        raise ParameterError("mixture components must be BaseModel instances")
    w = np.asarray(weights, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ParameterError("mixture weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ParameterError(f"mixture weights must sum to 1 (got {w.sum()!r})")


# -- constructors -------------------------------------------------------------


def normal(mean: float = 0.0, sd: float = 1.0) -> BaseModel:
    return BaseModel("normal", {"mean": mean, "sd": sd})


def lognormal(mu: float, sigma: float) -> BaseModel:
    return BaseModel("lognormal", {"mu": mu, "sigma": sigma})


def exponential(mean: float) -> BaseModel:
    return BaseModel("exp", {"mean": mean})


def uniform(a: float = 0.0, b: float = 1.0) -> BaseModel:
    return BaseModel("uniform", {"a": a, "b": b})


def laplace(loc: float = 0.0, scale: float = 1.0) -> BaseModel:
    return BaseModel("laplace", {"loc": loc, "scale": scale})


def logistic(loc: float = 0.0, scale: float = 1.0) -> BaseModel:
    return BaseModel("logistic", {"loc": loc, "scale": scale})


def mixture(components: Sequence[BaseModel], weights: Sequence[float]) -> BaseModel:
    return BaseModel("mix", components=tuple(components), weights=tuple(weights))


def location_scale(family: str, loc: float, scale: float) -> BaseModel:
    """Location-scale member of ``family`` (uniform: centre and half-width)."""
    family = _ALIASES.get(family, family)
    if family == "normal":
        return normal(loc, scale)
    if family == "laplace":
        return laplace(loc, scale)
    if family == "logistic":
        return logistic(loc, scale)
    if family == "uniform":
        return uniform(loc - scale, loc + scale)
    raise ParameterError(f"{family!r} is not a location-scale family")


def standard_quantile(family: str, u) -> np.ndarray:
    """Quantile of the standard (loc 0, scale 1) member of a location-scale family."""
    family = _ALIASES.get(family, family)
    u = np.asarray(u, dtype=float)
    if family == "normal":
        return stats.norm.ppf(u)
    if family == "laplace":
        return stats.laplace.ppf(u)
    if family == "logistic":
        return stats.logistic.ppf(u)
    if family == "uniform":
        return 2.0 * u - 1.0
    raise ParameterError(f"{family!r} is not a location-scale family")


def moment_match(family: str, data) -> BaseModel:
    """Convenience initialiser: match the first two sample moments."""
    x = as_array(data)
    family = _ALIASES.get(family, family)
    m, s = float(x.mean()), float(x.std(ddof=1)) if x.size > 1 else 1.0
    if family == "normal":
        return normal(m, s)
    if family == "exp":
        return exponential(m)
    if family == "lognormal":
        if np.any(x <= 0):
            raise ParameterError("lognormal moment matching needs positive data")
        lx = np.log(x)
        return lognormal(float(lx.mean()), float(lx.std(ddof=1)))
    if family == "uniform":
        half = s * math.sqrt(3.0)
        return uniform(m - half, m + half)
    if family == "laplace":
        return laplace(m, s / math.sqrt(2.0))
    if family == "logistic":
        return logistic(m, s * math.sqrt(3.0) / math.pi)
    raise ParameterError(f"no moment initialiser for {family!r}")


# -- spec grammar -------------------------------------------------------------

_KEY_ALIASES = {
    "normal": {"mu": "mean", "loc": "mean", "sigma": "sd", "scale": "sd"},
    "lognormal": {"mean": "mu", "sd": "sigma"},
    "exp": {"lambda": "mean", "scale": "mean"},
    "uniform": {},
    "laplace": {"mean": "loc", "mu": "loc"},
    "logistic": {"mean": "loc", "mu": "loc"},
}


def parse_spec(spec: str) -> BaseModel:
    """Parse a model spec string such as ``normal:mean=0,sd=1``.

    Mixtures use ``mix:w1*SPEC1|w2*SPEC2``. Mixtures may not be nested.
    """
    if not isinstance(spec, str) or ":" not in spec:
        raise InputError(f"bad model spec {spec!r}: expected FAMILY:key=value,...")
    head, _, body = spec.strip().partition(":")
    fam = _ALIASES.get(head.strip().lower(), head.strip().lower())
    if fam == "mix":
        comps, weights = [], []
        for part in body.split("|"):
            w, star, sub = part.partition("*")
            if not star:
                raise InputError(f"bad mixture term {part!r}: expected WEIGHT*SPEC")
            try:
                weights.append(float(w))
            except ValueError as exc:
                raise InputError(f"bad mixture weight {w!r}") from exc
            if sub.strip().lower().startswith("mix"):
                raise InputError("nested mixtures are not supported")
            comps.append(parse_spec(sub))
        total = sum(weights)
        if total <= 0:
            raise InputError("mixture weights must have positive sum")
        if abs(total - 1.0) > 1e-9:
            raise InputError(f"mixture weights sum to {total}, expected 1")
        # absorb rounding in the spec text so the strict invariant holds
        if total != 1.0:
            weights = [w / total for w in weights]
        return mixture(comps, weights)
    if fam not in _PARAM_NAMES:
        raise InputError(f"unknown family {head!r} in spec {spec!r}")
    params = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise InputError(f"bad parameter {item!r} in spec {spec!r}")
        key = key.strip().lower()
        key = _KEY_ALIASES[fam].get(key, key)
        try:
            params[key] = float(val)
        except ValueError as exc:
            raise InputError(f"bad value {val!r} for {key} in spec {spec!r}") from exc
    try:
        return BaseModel(fam, params)
    except ParameterError as exc:
        raise InputError(f"invalid spec {spec!r}: {exc}") from exc
