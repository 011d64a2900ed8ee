"""Quantile-to-distribution elicitation.

Expert quantile-probability pairs fix the probability gap F(x_i) - F0(x_i),
which is linear in the LP coefficients:

    v = S0 beta,    v_i = p_i - F0(x_i),    S0[i, j] = int_0^{F0(x_i)} T_j(u) du.

The coefficients are found by least squares or by the lasso, then plugged
into the d-sharp model.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from .errors import ConvergenceError, DomainError, InputError, ParameterError, SingularDesignError
from .lp_basis import build_basis
from .sharpening import DSharpModel, make_dsharp

DEFAULT_M = 6
COND_LIMIT = 1e12
# Half a unit in the second decimal, the usual precision of elicited probabilities.
GAP_TOL = 0.005


@dataclass(frozen=True, eq=False)
class QPData:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        p = np.asarray(self.p, dtype=float).ravel()
        if x.size != p.size:
            raise InputError("need one probability per quantile")
        if x.size < 2:
            raise InputError("need at least two quantile-probability pairs")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise InputError("quantile-probability pairs must be finite")
        if np.any((p <= 0.0) | (p >= 1.0)):
            bad = int(np.flatnonzero((p <= 0.0) | (p >= 1.0))[0])
            raise InputError(f"row {bad}: probability must lie strictly inside (0, 1)")
        for name, col in (("x", x), ("p", p)):
            steps = np.diff(col)
            if np.any(steps <= 0):
                bad = int(np.flatnonzero(steps <= 0)[0]) + 1
                raise InputError(f"row {bad}: {name} must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_pairs(cls, pairs) -> "QPData":
        arr = np.asarray(pairs, dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def read_csv(cls, path) -> "QPData":
        """Read a ``x,p`` CSV file (header required)."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header] != ["x", "p"]:
                raise InputError(f"{path}: line 1: expected header 'x,p'")
            xs, ps = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 2:
                    raise InputError(f"{path}: line {lineno}: expected two columns")
                try:
                    xs.append(float(row[0]))
                    ps.append(float(row[1]))
                except ValueError as exc:
                    raise InputError(f"{path}: line {lineno}: {exc}") from exc
        return cls(xs, ps)

    def __len__(self) -> int:
        return int(self.x.size)


# -- model-0 initialisers ---------------------------------------------------------


def init_location_scale(qp: QPData, family: str = "normal"):
    """Regress the quantiles on the standard quantiles of ``family``.

    Intercept gives the location, slope the scale.
    """
    if family not in dist.LOCATION_SCALE:
        raise ParameterError(f"{family!r} is not a location-scale family")
    z = dist.standard_quantile(family, qp.p)
    design = np.column_stack([np.ones_like(z), z])
    (loc, scale), *_ = np.linalg.lstsq(design, qp.x, rcond=None)
    if not scale > 0:
        raise ParameterError(f"fitted scale {scale:.4g} is not positive")
    return dist.location_scale(family, float(loc), float(scale))


def init_exponential(qp: QPData):
    """Exponential model-0 from the median: mean = median / ln 2."""
    hit = np.flatnonzero(np.isclose(qp.p, 0.5, rtol=0.0, atol=1e-12))
    if hit.size:
        median = float(qp.x[hit[0]])
    else:
        k = int(np.searchsorted(qp.p, 0.5))
        if k == 0 or k == len(qp):
            raise DomainError("median is not bracketed by the quantile-probability pairs")
        median = float(np.interp(0.5, qp.p[k - 1 : k + 1], qp.x[k - 1 : k + 1]))
    if median <= 0:
        raise ParameterError("exponential model needs a positive median")
    return dist.exponential(median / math.log(2.0))


def init_model(qp: QPData, family: str):
    family = {"exponential": "exp"}.get(family, family)
    if family == "exp":
        return init_exponential(qp)
    return init_location_scale(qp, family)


# -- linear system -----------------------------------------------------------------


def design_matrix(qp: QPData, base, m: int = DEFAULT_M) -> tuple[np.ndarray, np.ndarray]:
    """Probability gaps ``v`` and the integrated score matrix ``S0`` (l x m)."""
    u = np.clip(np.asarray(base.cdf(qp.x), dtype=float), 0.0, 1.0)
    v = qp.p - u
    S0 = build_basis(m).integral_all(u).T
    return v, S0


def solve_ols(v, S0) -> np.ndarray:
    """Least squares through a QR decomposition."""
    v = np.asarray(v, dtype=float)
    S0 = np.asarray(S0, dtype=float)
    l, m = S0.shape
    if m > l:
        raise SingularDesignError(f"{m} coefficients from {l} pairs is underdetermined; use the lasso")
    sv = np.linalg.svd(S0, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] >= COND_LIMIT:
        raise SingularDesignError("design is numerically singular; use the lasso")
    q, r = np.linalg.qr(S0)
    return np.linalg.solve(r, q.T @ v)


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lambda_max(v, S0) -> float:
    """Smallest penalty at which the lasso solution is identically zero."""
    return float(2.0 * np.max(np.abs(np.asarray(S0).T @ np.asarray(v))))


def lasso_cd(v, S0, lam: float, tol: float = 1e-10, max_sweeps: int = 100_000,
             beta0=None) -> np.ndarray:
    """Cyclic coordinate descent for ||v - S0 b||^2 + lam ||b||_1."""
    v = np.asarray(v, dtype=float)
    S0 = np.asarray(S0, dtype=float)
    if lam < 0:
        raise DomainError("lasso penalty must be nonnegative")
    m = S0.shape[1]
    # Covariance updates on plain floats: m is tiny, numpy call overhead dominates.
    gram = (S0.T @ S0).tolist()
    corr = (S0.T @ v).tolist()
    beta = [0.0] * m if beta0 is None else [float(b) for b in beta0]
    half = lam / 2.0
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(m):
            gj = gram[j]
            if gj[j] == 0.0:
                new = 0.0
            else:
                rho = corr[j] - sum(gj[k] * beta[k] for k in range(m) if k != j)
                if rho > half:
                    new = (rho - half) / gj[j]
                elif rho < -half:
                    new = (rho + half) / gj[j]
                else:
                    new = 0.0
            change = abs(new - beta[j])
            if change > delta:
                delta = change
            beta[j] = new
        if delta < tol:
            return np.array(beta)
    raise ConvergenceError(f"lasso did not converge in {max_sweeps} sweeps")


def lambda_grid(v, S0, points: int = 50, ratio: float = 1e-4) -> np.ndarray:
    """Decreasing log-spaced grid from lambda_max down to ratio * lambda_max."""
    top = lambda_max(v, S0)
    if top <= 0:
        return np.zeros(1)
    return np.geomspace(top, top * ratio, points)


def lasso_path(v, S0, lambdas) -> np.ndarray:
    """Warm-started solutions along ``lambdas``; shape (len(lambdas), m)."""
    out = []
    beta = None
    for lam in lambdas:
        beta = lasso_cd(v, S0, lam, beta0=beta)
        out.append(beta.copy())
    return np.array(out)


def loo_select(v, S0, lambdas) -> tuple[float, np.ndarray]:
    """Leave-one-out CV error for each penalty; ties go to the larger penalty."""
    v = np.asarray(v, dtype=float)
    S0 = np.asarray(S0, dtype=float)
    errors = np.zeros(len(lambdas))
    for i in range(v.size):
        keep = np.arange(v.size) != i
        path = lasso_path(v[keep], S0[keep], lambdas)
        errors += (v[i] - path @ S0[i]) ** 2
    errors /= v.size
    # lambdas run from large to small, so argmin picks the largest among ties
    best = int(np.argmin(np.round(errors, 15)))
    return float(lambdas[best]), errors


def discrepancy_select(v, S0, lambdas, path=None, tol: float = GAP_TOL) -> float:
    """Largest penalty whose fit matches every probability gap within ``tol``.

    Falls back to the smallest penalty on the grid when none does.
    """
    path = lasso_path(v, S0, lambdas) if path is None else path
    worst = np.abs(np.asarray(v)[None, :] - path @ np.asarray(S0).T).max(axis=1)
    ok = np.flatnonzero(worst <= tol)
    return float(lambdas[ok[0]] if ok.size else lambdas[-1])


def solve_lasso(v, S0, lam="auto", tol: float = GAP_TOL) -> tuple[np.ndarray, float]:
    """Lasso coefficients and the penalty used.

    ``lam`` is a number, ``"auto"`` (largest penalty on the grid that fits
    every pair within ``tol``) or ``"loo"`` (leave-one-out cross-validation,
    ties toward the larger penalty).
    """
    v = np.asarray(v, dtype=float)
    S0 = np.asarray(S0, dtype=float)
    if v.size < 2:
        raise DomainError("lasso needs at least two pairs")
    if isinstance(lam, str):
        grid = lambda_grid(v, S0)
        path = lasso_path(v, S0, grid)
        if lam == "auto":
            chosen = discrepancy_select(v, S0, grid, path, tol)
        elif lam == "loo":
            chosen, _ = loo_select(v, S0, grid)
        else:
            raise InputError(f"bad lambda {lam!r}: use 'auto', 'loo' or a number")
        return path[int(np.flatnonzero(grid == chosen)[0])], chosen
    if lam < 0:
        raise DomainError("lasso penalty must be nonnegative")
    return lasso_cd(v, S0, float(lam)), float(lam)


@dataclass(frozen=True, eq=False)
class Q2DFit:
    base: object
    beta: np.ndarray
    method: str
    lam: float | None
    residual: float
    model: DSharpModel

    @property
    def coeffs(self) -> dict:
        return {j + 1: float(b) for j, b in enumerate(self.beta) if b != 0.0}

    def as_dict(self) -> dict:
        return {
            "base": self.base.to_spec(),
            "beta": [float(b) for b in self.beta],
            "method": self.method,
            "lambda": self.lam,
            "residual": self.residual,
            "normalizer": self.model.normalizer,
        }


def q2d(qp: QPData, family: str = "normal", m: int = DEFAULT_M, method: str = "auto",
        lam="auto", base=None) -> Q2DFit:
    """Quantile-probability pairs to a d-sharp distribution.

    ``method="auto"`` uses the lasso whenever there are at least five pairs
    or the least-squares design is not usable, and OLS otherwise.
    """
    base = base if base is not None else init_model(qp, family)
    v, S0 = design_matrix(qp, base, m)
    if method not in ("auto", "ols", "lasso"):
        raise InputError(f"unknown method {method!r}")
    beta, used_lam = None, None
    if method == "auto":
        method = "lasso"
        if len(qp) < 5 and len(qp) >= m:
            try:
                beta = solve_ols(v, S0)
                method = "ols"
            except SingularDesignError:
                pass
    if method == "lasso":
        beta, used_lam = solve_lasso(v, S0, lam)
    elif beta is None:
        beta = solve_ols(v, S0)
    residual = float(np.linalg.norm(v - S0 @ beta))
    coeffs = {j + 1: float(b) for j, b in enumerate(beta) if b != 0.0}
    return Q2DFit(base, np.asarray(beta), method, used_lam, residual, make_dsharp(base, coeffs))
