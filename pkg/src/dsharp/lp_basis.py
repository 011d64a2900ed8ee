"""LP orthonormal polynomials on the probability scale u = F0(x).

For a continuous model-0 the LP system is the normalised shifted Legendre
family, T_j(u) = sqrt(2j + 1) * P_j(2u - 1). The monomial coefficients are
built exactly with rational arithmetic; numerical evaluation runs the
three-term recurrence in t = 2u - 1, which stays accurate up to the order cap
where Horner on the monomial form would not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

MAX_ORDER = 20


def _legendre_monomials(m: int) -> list[list[Fraction]]:
    """Exact coefficients (ascending powers of u) of P_j(2u - 1), j = 0..m."""
    polys = [[Fraction(1)], [Fraction(-1), Fraction(2)]]
    for n in range(1, m):
        prev, cur = polys[n - 1], polys[n]
        nxt = [Fraction(0)] * (n + 2)
        # (n+1) P_{n+1} = (2n+1)(2u-1) P_n - n P_{n-1}
        for k, c in enumerate(cur):
            nxt[k] -= (2 * n + 1) * c
            nxt[k + 1] += 2 * (2 * n + 1) * c
        for k, c in enumerate(prev):
            nxt[k] -= n * c
        polys.append([c / (n + 1) for c in nxt])
    return polys[: m + 1]


@dataclass(frozen=True)
class LPBasis:
    """Orthonormal LP polynomials T_1..T_m on [0, 1].

    ``coefficients[j, k]`` is the coefficient of u**k in T_j (row 0 is the
    constant T_0 = 1). ``integer_coefficients`` holds the exact integer
    coefficients of the shifted Legendre factor, so that
    T_j = sqrt(2j + 1) * sum_k integer_coefficients[j][k] * u**k.
    """

    max_order: int
    integer_coefficients: tuple[tuple[int, ...], ...] = field(repr=False)
    coefficients: np.ndarray = field(repr=False)

    def _check_order(self, j: int) -> None:
        if not 1 <= j <= self.max_order:
            raise DomainError(f"order {j} outside 1..{self.max_order}")

    def legendre_all(self, u) -> np.ndarray:
        """Shifted Legendre values P_0..P_m at ``u``; shape (m + 1, *u.shape)."""
        t = 2.0 * np.asarray(u, dtype=float) - 1.0
        out = np.empty((self.max_order + 2,) + t.shape)
        out[0] = 1.0
        out[1] = t
        for n in range(1, self.max_order + 1):
            out[n + 1] = ((2 * n + 1) * t * out[n] - n * out[n - 1]) / (n + 1)
        return out

    def eval_all(self, u) -> np.ndarray:
        """T_1..T_m at ``u``; shape (m, *u.shape)."""
        p = self.legendre_all(u)[1 : self.max_order + 1]
        scale = np.sqrt(2.0 * np.arange(1, self.max_order + 1) + 1.0)
        return p * scale.reshape((-1,) + (1,) * (p.ndim - 1))

    def eval_T(self, j: int, u):
        """T_j(u) for 1 <= j <= max_order."""
        self._check_order(j)
        _check_unit(u)
        vals = self.legendre_all(u)[j] * np.sqrt(2.0 * j + 1.0)
        return vals if np.ndim(u) else float(vals)

    def horner(self, j: int, u):
        """T_j(u) from the stored monomial coefficients (Horner's rule)."""
        self._check_order(j)
        u = np.asarray(u, dtype=float)
        acc = np.zeros_like(u)
        for c in self.coefficients[j, : j + 1][::-1]:
            acc = acc * u + c
        return acc if acc.ndim else float(acc)

    def integral_all(self, w) -> np.ndarray:
        """int_0^w T_j(u) du for j = 1..m; shape (m, *w.shape).

        Uses int P_n = (P_{n+1} - P_{n-1}) / (2n + 1); the lower limit
        contributes nothing because P_{n+1}(-1) = P_{n-1}(-1).
        """
        p = self.legendre_all(w)
        j = np.arange(1, self.max_order + 1)
        diff = p[2 : self.max_order + 2] - p[0 : self.max_order]
        scale = 1.0 / (2.0 * np.sqrt(2.0 * j + 1.0))
        return diff * scale.reshape((-1,) + (1,) * (diff.ndim - 1))

    def integral_S(self, j: int, w):
        """int_0^w S_j(u) du, with S_j(u) = T_j(Q0(u)) = T_j(u) on the u scale."""
        self._check_order(j)
        _check_unit(w)
        p = self.legendre_all(w)
        vals = (p[j + 1] - p[j - 1]) / (2.0 * np.sqrt(2.0 * j + 1.0))
        return vals if np.ndim(w) else float(vals)


def _check_unit(u) -> None:
    arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("u must lie in [0, 1]")


@lru_cache(maxsize=None)
def build_basis(m: int) -> LPBasis:
    """LP basis of orders 1..m (1 <= m <= 20)."""
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_ORDER:
        raise DomainError(f"basis order must be an integer in 1..{MAX_ORDER}, got {m!r}")
    m = int(m)
    exact = _legendre_monomials(m)
    ints = tuple(tuple(int(c) for c in poly) for poly in exact)
    coef = np.zeros((m + 1, m + 1))
    for j, poly in enumerate(exact):
        coef[j, : len(poly)] = [float(c) * np.sqrt(2 * j + 1) for c in poly]
    coef.setflags(write=False)
    return LPBasis(max_order=m, integer_coefficients=ints, coefficients=coef)


def gram_schmidt_basis(m: int, n_nodes: int = 2048) -> np.ndarray:
    """Numerical Gram-Schmidt on powers of T_1 under the uniform measure.

    Returns monomial coefficients in u, shape (m + 1, m + 1), for T_0..T_m.
    Kept as an independent cross-check of the closed-form construction.
    """
    from .quadrature import unit_rule

    nodes, weights = unit_rule(n_nodes)
    t1 = np.sqrt(12.0) * (nodes - 0.5)
    # Monomials of T1 expressed in powers of u
    t1_poly = np.polynomial.Polynomial([-np.sqrt(3.0), np.sqrt(12.0)])
    polys = [np.polynomial.Polynomial([1.0])]
    values = [np.ones_like(nodes)]
    for k in range(1, m + 1):
        cand_poly = t1_poly**k
        cand = t1**k
        for p, v in zip(polys, values):
            proj = np.dot(weights, cand * v)
            cand_poly = cand_poly - proj * p
            cand = cand - proj * v
        norm = np.sqrt(np.dot(weights, cand * cand))
        polys.append(cand_poly / norm)
        values.append(cand / norm)
    out = np.zeros((m + 1, m + 1))
    for j, p in enumerate(polys):
        c = p.coef
        out[j, : len(c)] = c
    return out
