import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from dsharp import distributions as D
from dsharp.divergence import (
    KINDS,
    DivergenceReport,
    EvaluationError,
    chisq_index,
    csiszar,
    model_divergence,
    renyi,
)
from dsharp.errors import DomainError
from dsharp.sharpening import estimate_raw, fit, make_dsharp, series_value

from conftest import BUMP_BASE

TILT = {1: 0.3}


def tilt(u):
    return series_value(TILT, u)


def quad_unit(fn, points=None):
    val, _ = integrate.quad(fn, 0, 1, points=points, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


@pytest.mark.parametrize("kind", KINDS)
def test_uniform_has_zero_divergence(kind):
    assert csiszar(np.ones_like, kind) == 0.0


def test_renyi_uniform_zero():
    assert renyi(np.ones_like, 0.5) == pytest.approx(0.0, abs=1e-14)


def test_tv_linear_tilt():
    assert csiszar(tilt, "tv") == pytest.approx(0.3 * math.sqrt(12) / 4, abs=1e-8)
    assert csiszar(tilt, "tv", breaks=[0.5]) == pytest.approx(0.3 * math.sqrt(12) / 4, abs=1e-14)
    assert 0.3 * math.sqrt(12) / 4 == pytest.approx(0.2598, abs=1e-4)


def test_chisq_linear_tilt():
    assert csiszar(tilt, "chisq") == pytest.approx(0.09, abs=1e-12)


def test_kl_and_hellinger_match_quadrature():
    kl = quad_unit(lambda u: tilt(u) * math.log(tilt(u)))
    hel = quad_unit(lambda u: (1 - math.sqrt(tilt(u))) ** 2)
    assert csiszar(tilt, "kl") == pytest.approx(kl, abs=1e-10)
    assert csiszar(tilt, "hellinger") == pytest.approx(hel, abs=1e-10)


def test_renyi_matches_quadrature():
    for alpha in (0.5, 0.75):
        oracle = (1 - quad_unit(lambda u: tilt(u) ** alpha)) / (alpha * (1 - alpha))
        value = renyi(tilt, alpha)
        assert value == pytest.approx(oracle, abs=1e-8)
        assert value > 0


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_renyi_alpha_domain(alpha):
    with pytest.raises(DomainError):
        renyi(tilt, alpha)


def test_nan_raises():
    with pytest.raises(EvaluationError):
        csiszar(lambda u: np.full_like(u, np.nan), "kl")
    with pytest.raises(DomainError):
        csiszar(tilt, "wasserstein")


def test_kl_zero_log_zero():
    # d vanishes on half the interval: the 0 log 0 = 0 limit applies there
    d = lambda u: np.where(u < 0.5, 0.0, 2.0)
    assert csiszar(d, "kl", breaks=[0.5]) == pytest.approx(math.log(2), abs=1e-14)


def test_chisq_index_examples():
    rep = chisq_index([0.3, 0.4], 100)
    assert rep.value == pytest.approx(0.25, abs=1e-15)
    assert rep.dof == 2 and rep.statistic == pytest.approx(25.0)
    assert rep.p_value == pytest.approx(stats.chi2.sf(25.0, 2))
    zero = chisq_index([0, 0, 0], 50)
    assert zero.value == 0.0 and zero.p_value == 1.0
    with pytest.raises(DomainError):
        chisq_index([0.1], 1)


def test_report_dict_shape():
    assert set(chisq_index([0.1], 10).as_dict()) == {"kind", "value", "dof", "statistic", "p_value"}
    assert DivergenceReport("kl", 0.1).as_dict() == {"kind": "kl", "value": 0.1}


def test_bump_p_value(bump_data):
    f = fit(bump_data, BUMP_BASE, m_max=10)
    rep = f.chisq()
    assert rep.dof == 10
    assert rep.p_value < 1e-10


def test_parseval_on_fitted_series(bump_data):
    f = fit(bump_data, BUMP_BASE, m_max=10)
    assert f.eval_d(np.linspace(0, 1, 4097)).min() > 0
    parseval = sum(c * c for c in f.smooth_coeffs.values())
    assert csiszar(f.eval_d, "chisq") == pytest.approx(parseval, abs=1e-6)


@given(st.dictionaries(st.integers(1, 10), st.floats(-0.15, 0.15), min_size=1, max_size=5))
@settings(max_examples=100, deadline=None)
def test_divergences_vanish_only_at_zero(coeffs):
    d = lambda u: series_value(coeffs, u)
    nonzero = any(c != 0 for c in coeffs.values())
    for kind in KINDS:
        val = csiszar(d, kind)
        assert val >= -1e-12
        if nonzero and sum(c * c for c in coeffs.values()) > 1e-8:
            assert val > 0
        if not nonzero:
            assert val == pytest.approx(0.0, abs=1e-12)
    assert renyi(d, 0.5) >= -1e-9


def test_clipped_model_divergence_uses_kinks():
    model = make_dsharp(D.normal(), {1: 0.9, 3: -0.4})
    pts = list(model.roots)
    for kind, fn in [("tv", lambda v: abs(v - 1)), ("chisq", lambda v: (v - 1) ** 2),
                     ("hellinger", lambda v: (1 - math.sqrt(v)) ** 2)]:
        oracle = quad_unit(lambda u: fn(model.d(u)), points=pts)
        assert model_divergence(model, kind) == pytest.approx(oracle, abs=1e-9)
    # d**0.5 has an unbounded slope at the kinks, so the match is looser here
    oracle = (1 - quad_unit(lambda u: model.d(u) ** 0.5, points=pts)) / 0.25
    assert model_divergence(model, "renyi", alpha=0.5) == pytest.approx(oracle, abs=1e-8)


@pytest.mark.slow
def test_null_p_values_uniform():
    base = D.normal(1, 2)
    p = [chisq_index(estimate_raw(base.sample(2000, seed=s).values, base, 6), 2000).p_value
         for s in range(500)]
    assert stats.kstest(p, "uniform").pvalue > 0.01
